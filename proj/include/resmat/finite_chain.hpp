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

#ifndef RESMAT_FINITE_CHAIN_HPP
#define RESMAT_FINITE_CHAIN_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "resmat/particle.hpp"
#include "resmat/schemes.hpp"

namespace resmat {

/// Fully enumerated finite-state Feynman-Kac model. Small enough that the
/// target integral, the h tables, and the asymptotic constants are all
/// computable exactly by dynamic programming, which is what makes it usable
/// as a brute-force ground truth for the sampling engine.
///
/// Time layout: X_0 ~ init, X_t ~ trans_at(t)(X_{t-1}, .) for 1 <= t <=
/// horizon. Potentials are g0[x] at time 0 and g[t-1][prev][x] for
/// 1 <= t <= horizon - 1; the pair function f closes the product at time
/// `horizon`.
class FiniteChainModel final : public FeynmanKacModel<int> {
 public:
  int states = 0;
  int horizon = 0;
  std::vector<double> init;                 // length states
  std::vector<std::vector<double>> trans;   // 1 (homogeneous) or horizon matrices
  std::vector<double> g0;                   // length states
  std::vector<std::vector<double>> g;       // horizon - 1 tables, row-major
  std::vector<double> f_table;              // row-major states x states

  /// Throws unless distributions normalize (tol 1e-12), potentials are
  /// nonnegative, and shapes agree.
  void check() const;

  /// Transition matrix used for the step into time t, 1 <= t <= horizon.
  const std::vector<double>& trans_at(int t) const;

  double transition(int t, int from, int to) const {
    return trans_at(t)[static_cast<std::size_t>(from) * states + to];
  }
  double g_at(int t, int prev, int x) const {
    return g[static_cast<std::size_t>(t) - 1][static_cast<std::size_t>(prev) * states + x];
  }
  double f_at(int prev, int x) const {
    return f_table[static_cast<std::size_t>(prev) * states + x];
  }

  // FeynmanKacModel interface. Draws invert the CDF with one uniform each.
  int sample_initial(RngStream& rng) const override;
  int sample_transition(int t, const int& from, RngStream& rng) const override;
  double potential(int t, const int* prev, const int& x) const override;
  double test_fn(const int& prev, const int& x) const override;

  /// Copy of the model with a smaller horizon; the same f closes the product.
  FiniteChainModel truncated(int new_horizon) const;

  static FiniteChainModel load(std::istream& is);
  static FiniteChainModel load_file(const std::string& path);
};

/// Unnormalized forward measures mu_t[x] = E[prod_{s<=t} G_s ; X_t = x] for
/// t = 0..horizon-1, by forward dynamic programming.
std::vector<std::vector<double>> forward_tables(const FiniteChainModel& m);

/// The target integral E[G_0 prod G_t f], exact up to rounding.
double exact_feynman_kac(const FiniteChainModel& m);

/// E[prod_{s<=T-1} G_s] with the test function replaced by 1.
double exact_normalizer(const FiniteChainModel& m);

/// Backward tables h_t[x] = E[prod_{s>t} G_s f | X_t = x] for t = 0..T-1.
std::vector<std::vector<double>> exact_h_tables(const FiniteChainModel& m);

/// Asymptotic variance constant of the unnormalized estimator, split into
/// its initialization, per-step resampling, and per-step mutation parts.
struct EtaBreakdown {
  double init_term = 0.0;
  std::vector<double> resampling_terms;
  std::vector<double> mutation_terms;

  double total() const {
    double sum = init_term;
    for (double v : resampling_terms) sum += v;
    for (double v : mutation_terms) sum += v;
    return sum;
  }
};

/// Exact eta^2 for one of the five analyzed kinds: Multinomial,
/// MultinomialResidual, Bernoulli, Stratified, StratifiedResidual. Stratified
/// kinds need theta: one table per step (or a single broadcast table) giving
/// the sort coordinate per state; the optimal p(theta) is realized exactly as
/// the conditional mean within each theta level set. Residual kinds verify
/// that the normalized potentials carry no mass on positive integers
/// (tolerance 1e-9 on |G - round(G)|) and throw ContractError otherwise.
EtaBreakdown exact_eta_squared(const FiniteChainModel& m, SchemeKind kind,
                               const std::vector<std::vector<double>>& theta = {});

/// Same machinery for the ratio estimator: potentials normalized, the test
/// function centered by the exact ratio.
EtaBreakdown exact_ratio_eta_squared(const FiniteChainModel& m, SchemeKind kind,
                                     const std::vector<std::vector<double>>& theta = {});

/// Upper bound (1/n0) E[prod G f^2] prod_t sup G_t sum_t prod_{s<t} C_s.
/// `c_constants` must provide C_0..C_{T-1}.
double variance_upper_bound(const FiniteChainModel& m,
                            std::span<const double> c_constants, int n0);

}  // namespace resmat

#endif
