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

#ifndef RESMAT_PARTICLE_HPP
#define RESMAT_PARTICLE_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "resmat/error.hpp"
#include "resmat/rng.hpp"

namespace resmat {

/// A particle is either a point of the state space or the absorbing coffin
/// marker. The coffin is a tagged alternative rather than a sentinel value so
/// it works for any state type. Every function evaluation on a coffin
/// (potential, test function, sort coordinate) is 0 by convention; callers in
/// this library enforce that without consulting the model.
template <class S>
class ParticleState {
 public:
  static ParticleState point(S value) { return ParticleState(std::move(value)); }
  static ParticleState coffin() { return ParticleState(); }

  bool is_coffin() const { return !value_.has_value(); }
  const S& value() const { return *value_; }

  bool operator==(const ParticleState&) const = default;

 private:
  ParticleState() = default;
  explicit ParticleState(S value) : value_(std::move(value)) {}

  std::optional<S> value_;
};

/// Weighted particle ensemble at one time step. `n0` is the reference
/// population size N0 that every average and estimator divides by; it is
/// fixed for a whole run even when the particle count varies.
template <class S>
struct WeightedEnsemble {
  std::vector<ParticleState<S>> particles;
  std::vector<double> weights;
  int t = 0;
  int n0 = 1;

  std::size_t size() const { return particles.size(); }
};

/// Throws unless the ensemble satisfies the basic shape and weight
/// invariants. Non-finite weights are rejected deliberately: the math never
/// needs them and an infinity upstream is always a bug.
template <class S>
void check_ensemble(const WeightedEnsemble<S>& ens) {
  if (ens.particles.size() != ens.weights.size())
    throw ContractError("ensemble: particles/weights length mismatch");
  if (ens.n0 < 1) throw ContractError("ensemble: n0 must be positive");
  for (std::size_t i = 0; i < ens.weights.size(); ++i) {
    const double w = ens.weights[i];
    if (!std::isfinite(w)) throw ContractError("ensemble: non-finite weight");
    if (w < 0.0) throw ContractError("ensemble: negative weight");
  }
}

/// Abstract Feynman-Kac model: initial law, mutation kernel, potentials G_t
/// and terminal test function f. Potentials must be nonnegative; G_0 takes no
/// previous state (prev == nullptr). Implementations must be pure: the
/// harness may evaluate them concurrently across replicates.
template <class S>
class FeynmanKacModel {
 public:
  virtual ~FeynmanKacModel() = default;

  virtual S sample_initial(RngStream& rng) const = 0;
  virtual S sample_transition(int t, const S& from, RngStream& rng) const = 0;
  virtual double potential(int t, const S* prev, const S& x) const = 0;
  virtual double test_fn(const S& prev, const S& x) const = 0;
};

/// Average weight (1/N0) * sum(w_i). Note the divisor is N0, not the current
/// particle count; both coincide only for fixed-population schemes.
template <class S>
double average_weight(const WeightedEnsemble<S>& ens) {
  double sum = 0.0;
  for (double w : ens.weights) sum += w;
  return sum / static_cast<double>(ens.n0);
}

/// Multiplies each weight by the potential evaluated on (previous particle,
/// proposal). `ens` holds the post-resampling particles at time ens.t and
/// `proposals` the mutated states at time ens.t + 1; the result is the
/// reweighted ensemble at that next step. Coffin inputs stay coffins with
/// weight 0 and consume no model call. When the result time is 0 the
/// potential receives no previous state.
template <class S>
WeightedEnsemble<S> reweight(const WeightedEnsemble<S>& ens,
                             const FeynmanKacModel<S>& model,
                             const std::vector<ParticleState<S>>& proposals) {
  if (proposals.size() != ens.particles.size())
    throw ContractError("reweight: proposal count does not match ensemble");
  WeightedEnsemble<S> out;
  out.t = ens.t + 1;
  out.n0 = ens.n0;
  out.particles.reserve(proposals.size());
  out.weights.reserve(proposals.size());
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    if (ens.particles[i].is_coffin() || proposals[i].is_coffin()) {
      out.particles.push_back(ParticleState<S>::coffin());
      out.weights.push_back(0.0);
      continue;
    }
    const S* prev = out.t == 0 ? nullptr : &ens.particles[i].value();
    const double g = model.potential(out.t, prev, proposals[i].value());
    if (!(g >= 0.0))
      throw ContractError("reweight: model returned a negative potential");
    out.particles.push_back(proposals[i]);
    out.weights.push_back(ens.weights[i] * g);
  }
  return out;
}

/// Effective sample size (sum w)^2 / sum w^2. Throws on an all-zero ensemble.
template <class S>
double effective_sample_size(const WeightedEnsemble<S>& ens) {
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double w : ens.weights) {
    sum += w;
    sum_sq += w * w;
  }
  if (sum_sq <= 0.0)
    throw DegenerateError("effective_sample_size: all weights are zero");
  return sum * sum / sum_sq;
}

}  // namespace resmat

#endif
