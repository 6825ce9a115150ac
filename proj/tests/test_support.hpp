// Copyright 2026 The resmat Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RESMAT_TEST_SUPPORT_HPP
#define RESMAT_TEST_SUPPORT_HPP

#include <cmath>
#include <string>
#include <vector>

#include "resmat/finite_chain.hpp"
#include "resmat/matrix.hpp"
#include "resmat/particle.hpp"
#include "resmat/rng.hpp"

namespace testsupport {

inline std::vector<double> figure_weights() { return {3.2, 2.4, .8, 1.6}; }

inline std::string repo_path(const std::string& relative) {
  return std::string(RESMAT_SOURCE_DIR) + "/" + relative;
}

/// Builds a matrix from dense rows (n_in + 1 of them; last row is the coffin).
inline resmat::ResamplingMatrix dense_matrix(
    const std::vector<std::vector<double>>& rows) {
  const int n_in = static_cast<int>(rows.size()) - 1;
  const int n_out = static_cast<int>(rows.front().size());
  resmat::ResamplingMatrix w(n_in, n_out);
  for (int r = 0; r <= n_in; ++r)
    for (int c = 0; c < n_out; ++c)
      if (rows[r][c] != 0.0) w.add(r, c, rows[r][c]);
  return w;
}

/// Largest entrywise |a - b| over the full (n_in + 1) x n_out grid.
inline double max_entry_gap(const resmat::ResamplingMatrix& a,
                            const resmat::ResamplingMatrix& b) {
  double gap = 0.0;
  for (int r = 0; r <= a.n_in(); ++r)
    for (int c = 0; c < a.n_out(); ++c)
      gap = std::max(gap, std::abs(a.at(r, c) - b.at(r, c)));
  return gap;
}

/// Two-state model with unit potentials and unit test function; every run's
/// estimate must be exactly 1.
inline resmat::FiniteChainModel trivial_model(int horizon = 3) {
  resmat::FiniteChainModel m;
  m.states = 2;
  m.horizon = horizon;
  m.init = {.5, .5};
  m.trans = {{.5, .5, .5, .5}};
  m.g0 = {1.0, 1.0};
  m.g.assign(static_cast<std::size_t>(horizon) - 1, {1.0, 1.0, 1.0, 1.0});
  m.f_table = {1.0, 1.0, 1.0, 1.0};
  return m;
}

inline resmat::WeightedEnsemble<int> make_ensemble(std::vector<double> weights, int n0) {
  resmat::WeightedEnsemble<int> ens;
  ens.n0 = n0;
  ens.weights = std::move(weights);
  for (std::size_t i = 0; i < ens.weights.size(); ++i)
    ens.particles.push_back(resmat::ParticleState<int>::point(static_cast<int>(i)));
  return ens;
}

/// Random weight vector with mixed magnitudes, occasionally zero entries,
/// always at least one positive weight.
inline std::vector<double> random_weights(resmat::RngStream& rng, int n,
                                          double log10_span = 6.0) {
  std::vector<double> weights(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (rng.uniform01() < 0.08) {
      weights[i] = 0.0;
    } else {
      const double exponent = (2.0 * rng.uniform01() - 1.0) * log10_span;
      weights[i] = std::pow(10.0, exponent) * (0.5 + rng.uniform01());
    }
  }
  bool any = false;
  for (double w : weights) any = any || w > 0.0;
  if (!any) weights[0] = 1.0;
  return weights;
}

}  // namespace testsupport

#endif
