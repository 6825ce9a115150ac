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

#ifndef RESMAT_SCHEMES_HPP
#define RESMAT_SCHEMES_HPP

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "resmat/matrix.hpp"
#include "resmat/particle.hpp"

namespace resmat {

enum class SchemeKind {
  Sis,
  Multinomial,
  Bernoulli,
  Stratified,
  MultinomialResidual,
  StratifiedResidual,
  PruningEnrichment,
  RejectionControl,
  Parallel,
  Adaptive,
  OptimalSorted,
};

/// Declarative description of a resampling scheme: kind, parameters, and an
/// optional sort coordinate (by name; the run driver resolves names to
/// functions). All randomness lives in sample_offspring; a spec plus a weight
/// vector determines its matrix deterministically.
struct SchemeSpec {
  SchemeKind kind = SchemeKind::Multinomial;
  double prune_low = 0.0;
  double prune_high = 0.0;
  double ess_fraction = 0.5;
  int blocks = 1;
  std::string coordinate;
  std::shared_ptr<const SchemeSpec> inner;  // parallel inner / adaptive fallback

  static SchemeSpec sis();
  static SchemeSpec multinomial();
  static SchemeSpec bernoulli();
  static SchemeSpec stratified(std::string coordinate = "");
  static SchemeSpec multinomial_residual();
  static SchemeSpec stratified_residual(std::string coordinate = "");
  static SchemeSpec pruning_enrichment(double low, double high);
  static SchemeSpec rejection_control();
  static SchemeSpec parallel(int blocks, SchemeSpec inner);
  static SchemeSpec adaptive(double ess_fraction, SchemeSpec fallback);
  static SchemeSpec optimal_sorted(std::string coordinate);

  /// Canonical config-file text form, e.g. `prune_enrich(1,3)`.
  std::string name() const;
  /// True when building the matrix requires per-particle coordinate values.
  bool needs_coordinate() const;
  /// Kinds whose output always satisfies is_complete(., w_bar).
  bool is_complete_kind() const;
};

/// Parses the config-file scheme syntax. Kind names: sis, multinomial,
/// bernoulli, stratified, mult_residual, strat_residual, prune_enrich,
/// rejection_control, parallel, adaptive, sorted_stratified, optimal_sorted.
SchemeSpec parse_scheme(const std::string& text);

/// Column count fixed in advance for a step, given the incoming particle
/// count. Only these numbers may be fixed a priori; everything else about the
/// matrix may depend on the realized ensemble.
int fixed_n_out(const SchemeSpec& spec, int n_in, int n0);

/// Splits {0..n-1} into `blocks` contiguous blocks with sizes differing by at
/// most one. Used for the parallel scheme's default partition.
std::vector<std::vector<int>> contiguous_partition(int n, int blocks);

// Builders. Each maps a weight vector (plus parameters) to the scheme's
// resampling matrix. `n_out` = -1 means the natural column count; larger
// values pad with pure-coffin columns of weight w_bar for complete-style
// schemes (and for SIS / rejection control), or with zero columns for
// pruning-enrichment. Requesting fewer columns than the natural count throws.

ResamplingMatrix build_sis(std::span<const double> weights, int n0, int n_out = -1);
ResamplingMatrix build_multinomial(std::span<const double> weights, int n0,
                                   int n_out = -1);
ResamplingMatrix build_bernoulli(std::span<const double> weights, int n0,
                                 int n_out = -1);
ResamplingMatrix build_stratified(std::span<const double> weights, int n0,
                                  int n_out = -1);
ResamplingMatrix build_multinomial_residual(std::span<const double> weights, int n0,
                                            int n_out = -1);
ResamplingMatrix build_stratified_residual(std::span<const double> weights, int n0,
                                           int n_out = -1);
ResamplingMatrix build_pruning_enrichment(std::span<const double> weights, double low,
                                          double high, int n_out = -1);
ResamplingMatrix build_rejection_control(std::span<const double> weights, int n0,
                                         int n_out = -1);
ResamplingMatrix build_parallel(std::span<const double> weights,
                                const std::vector<std::vector<int>>& partition,
                                const SchemeSpec& inner, int n0, int n_out = -1);

/// Stable permutation sorting indices by descending theta; ties keep original
/// order. perm[k] is the original index of the rank-k particle.
std::vector<int> sort_permutation(std::span<const double> theta);

/// Sorts particles by theta, builds `base` on the sorted weights, and maps
/// rows back to the original indices, so the result validates against the
/// unsorted weight vector.
ResamplingMatrix build_sorted(std::span<const double> weights,
                              std::span<const double> theta, const SchemeSpec& base,
                              int n0, int n_out = -1);

/// Minimal-variance scheme for coordinate theta: appends a pseudo-particle of
/// weight w_bar and theta 0, sorts everything by descending theta, applies
/// stratified resampling with n0 + 1 strata, and routes the pseudo-particle's
/// mass to the coffin row.
ResamplingMatrix build_optimal_sorted(std::span<const double> weights,
                                      std::span<const double> theta, int n0,
                                      int n_out = -1);

/// Dispatcher used by the engine and tests. `theta` may be empty for kinds
/// without a sort coordinate. Adaptive specs must be resolved first.
ResamplingMatrix build_matrix(const SchemeSpec& spec, std::span<const double> weights,
                              std::span<const double> theta, int n0, int n_out = -1);

/// Returns SIS when ESS(ens) >= threshold_fraction * n0 (ties go to SIS),
/// otherwise the fallback spec.
template <class S>
SchemeSpec adaptive_select(const WeightedEnsemble<S>& ens, double threshold_fraction,
                           const SchemeSpec& fallback) {
  if (threshold_fraction <= 0.0 || threshold_fraction > 1.0)
    throw ContractError("adaptive_select: threshold fraction must lie in (0, 1]");
  double sum = 0.0;
  for (double w : ens.weights) sum += w;
  if (sum <= 0.0) return fallback;
  const double ess = effective_sample_size(ens);
  if (ess >= threshold_fraction * static_cast<double>(ens.n0)) return SchemeSpec::sis();
  return fallback;
}

}  // namespace resmat

#endif
