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

#ifndef RESMAT_ENGINE_HPP
#define RESMAT_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "resmat/matrix.hpp"
#include "resmat/particle.hpp"
#include "resmat/rng.hpp"
#include "resmat/schemes.hpp"

namespace resmat {

/// Per-step record of one run: the resolved scheme kind, the offspring
/// weights (matrix column sums), the pre-resampling mean weight, and how many
/// offspring landed outside the coffin.
struct StepSnapshot {
  SchemeKind kind = SchemeKind::Sis;
  std::vector<double> column_sums;
  double w_bar = 0.0;
  int non_coffin_count = 0;
  double pre_total_weight = 0.0;
  int pre_count = 0;
};

/// Full particle trace, retained only on request (memory grows with n0 * T).
/// `weighted[t]` is the reweighted ensemble at time t, `resampled[t]` the
/// post-resampling ensemble; the final contributions are the signed terms
/// w_hat * f whose average is the estimate.
template <class S>
struct RunTrace {
  std::vector<WeightedEnsemble<S>> weighted;
  std::vector<WeightedEnsemble<S>> resampled;
  std::vector<ParticleState<S>> final_states;
  std::vector<double> final_contributions;
};

template <class S>
struct SmcRun {
  double estimate = 0.0;
  double ratio_numerator = 0.0;
  double ratio_denominator = 0.0;
  /// Set when every weight hit zero before the horizon; the estimate is then
  /// exactly 0 by construction, which is a legal outcome, not an error.
  bool degenerate = false;
  std::vector<StepSnapshot> snapshots;
  std::uint64_t stream_key = 0;
  std::optional<RunTrace<S>> trace;
};

template <class S>
struct RunOptions {
  bool retain_trace = false;
  /// Sort coordinate for schemes that need one; receives (t, state) for
  /// non-coffin particles. Coffins always get coordinate 0.
  std::function<double(int, const S&)> coordinate;
};

/// Runs the full loop: n0 initial draws, then `horizon` rounds of
/// reweight -> build matrix -> sample offspring -> mutate, with the terminal
/// potential replaced by the test function f. Draw order within the single
/// stream is fixed: initial draws, then per step the column draws in column
/// order followed by mutation draws in particle order for non-coffin
/// particles only. Identical (model, scheme, n0, horizon, key) inputs give
/// bit-identical results.
template <class S>
SmcRun<S> run(const FeynmanKacModel<S>& model, const SchemeSpec& scheme, int n0,
              int horizon, std::uint64_t stream_key, const RunOptions<S>& options = {}) {
  if (n0 < 1) throw ContractError("run: n0 must be positive");
  if (horizon < 1) throw ContractError("run: horizon must be positive");

  RngStream rng(stream_key);
  SmcRun<S> out;
  out.stream_key = stream_key;
  if (options.retain_trace) out.trace.emplace();

  std::vector<ParticleState<S>> proposals;
  proposals.reserve(static_cast<std::size_t>(n0));
  for (int i = 0; i < n0; ++i)
    proposals.push_back(ParticleState<S>::point(model.sample_initial(rng)));

  WeightedEnsemble<S> previous;
  previous.t = -1;
  previous.n0 = n0;
  previous.particles = proposals;  // placeholders; G_0 takes no previous state
  previous.weights.assign(static_cast<std::size_t>(n0), 1.0);
  WeightedEnsemble<S> current = reweight(previous, model, proposals);

  for (int t = 0; t < horizon; ++t) {
    if (out.trace) out.trace->weighted.push_back(current);

    double total_weight = 0.0;
    for (double w : current.weights) total_weight += w;
    if (total_weight <= 0.0) {
      out.degenerate = true;
      break;
    }

    SchemeSpec effective = scheme;
    for (int guard = 0; effective.kind == SchemeKind::Adaptive; ++guard) {
      if (guard > 32) throw ContractError("run: adaptive fallback cycle");
      effective = adaptive_select(current, effective.ess_fraction, *effective.inner);
    }

    // The column count comes from the original spec so that it is fixed in
    // advance; an adaptive SIS step pads up to the fallback's width.
    const int n_out = fixed_n_out(scheme, static_cast<int>(current.size()), n0);

    std::vector<double> theta;
    if (effective.needs_coordinate()) {
      if (!options.coordinate)
        throw ContractError("run: scheme `" + effective.name() +
                            "` requires a sort coordinate");
      theta.resize(current.size());
      for (std::size_t i = 0; i < current.size(); ++i)
        theta[i] = current.particles[i].is_coffin()
                       ? 0.0
                       : options.coordinate(t, current.particles[i].value());
    }

    const ResamplingMatrix w = build_matrix(effective, current.weights, theta, n0, n_out);
    WeightedEnsemble<S> resampled = sample_offspring(w, current, rng);

    StepSnapshot snapshot;
    snapshot.kind = effective.kind;
    snapshot.column_sums = w.column_sums();
    snapshot.w_bar = average_weight(current);
    snapshot.pre_total_weight = total_weight;
    snapshot.pre_count = static_cast<int>(current.size());
    for (const auto& particle : resampled.particles)
      if (!particle.is_coffin()) ++snapshot.non_coffin_count;
    out.snapshots.push_back(std::move(snapshot));
    if (out.trace) out.trace->resampled.push_back(resampled);

    proposals.clear();
    proposals.reserve(resampled.size());
    for (const auto& particle : resampled.particles) {
      if (particle.is_coffin()) {
        proposals.push_back(ParticleState<S>::coffin());
      } else {
        proposals.push_back(
            ParticleState<S>::point(model.sample_transition(t + 1, particle.value(), rng)));
      }
    }

    if (t + 1 < horizon) {
      current = reweight(resampled, model, proposals);
      continue;
    }

    // Terminal contraction: the last potential is the test function f, which
    // may be negative, so this is not a reweight.
    double numerator = 0.0;
    double denominator = 0.0;
    std::vector<double> contributions(resampled.size(), 0.0);
    for (std::size_t j = 0; j < resampled.size(); ++j) {
      if (resampled.particles[j].is_coffin()) continue;
      denominator += resampled.weights[j];
      const double value =
          resampled.weights[j] *
          model.test_fn(resampled.particles[j].value(), proposals[j].value());
      contributions[j] = value;
      numerator += value;
    }
    out.estimate = numerator / static_cast<double>(n0);
    out.ratio_numerator = numerator;
    out.ratio_denominator = denominator;
    if (out.trace) {
      out.trace->final_states = proposals;
      out.trace->final_contributions = std::move(contributions);
    }
  }

  if (out.degenerate) {
    out.estimate = 0.0;
    out.ratio_numerator = 0.0;
    out.ratio_denominator = 0.0;
    // Keep the snapshot count equal to the horizon; the tail steps never ran.
    while (static_cast<int>(out.snapshots.size()) < horizon) {
      StepSnapshot snapshot;
      snapshot.kind = scheme.kind;
      out.snapshots.push_back(std::move(snapshot));
    }
    if (out.trace) {
      while (out.trace->weighted.size() < static_cast<std::size_t>(horizon)) {
        WeightedEnsemble<S> empty;
        empty.n0 = n0;
        empty.t = static_cast<int>(out.trace->weighted.size());
        out.trace->weighted.push_back(empty);
      }
      while (out.trace->resampled.size() < static_cast<std::size_t>(horizon)) {
        WeightedEnsemble<S> empty;
        empty.n0 = n0;
        empty.t = static_cast<int>(out.trace->resampled.size());
        out.trace->resampled.push_back(empty);
      }
    }
  }
  return out;
}

template <class S>
double estimate_unnormalized(const SmcRun<S>& run) {
  return run.estimate;
}

/// Ratio estimator numerator / denominator. A zero denominator is a defined
/// case whose value is arbitrary by convention; this library returns 0.
template <class S>
double estimate_ratio(const SmcRun<S>& run) {
  if (run.ratio_denominator == 0.0) return 0.0;
  return run.ratio_numerator / run.ratio_denominator;
}

/// Martingale error decomposition of a traced run against exact h tables:
/// one initialization increment, then per step a resampling and a mutation
/// increment. The increments telescope to estimate - exact_value.
struct ErrorDecomposition {
  double init_error = 0.0;
  std::vector<double> resampling_errors;
  std::vector<double> mutation_errors;

  double total() const {
    double sum = init_error;
    for (double e : resampling_errors) sum += e;
    for (double e : mutation_errors) sum += e;
    return sum;
  }
};

template <class S, class HFn>
ErrorDecomposition error_decomposition(const SmcRun<S>& run, const HFn& h_fn,
                                       double exact_value) {
  if (!run.trace)
    throw UnsupportedError("error_decomposition: run did not retain its trace");
  const RunTrace<S>& trace = *run.trace;
  const int horizon = static_cast<int>(trace.weighted.size());

  auto martingale_at = [&](const WeightedEnsemble<S>& ens, int h_index) {
    double sum = 0.0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
      if (ens.particles[i].is_coffin()) continue;
      sum += ens.weights[i] * h_fn(h_index, ens.particles[i].value());
    }
    return sum / static_cast<double>(ens.n0);
  };

  ErrorDecomposition out;
  double previous = exact_value;  // M_{-1}
  for (int t = 0; t < horizon; ++t) {
    const double at_t = martingale_at(trace.weighted[t], t);
    if (t == 0) {
      out.init_error = at_t - previous;
    } else {
      out.mutation_errors.push_back(at_t - previous);
    }
    const double at_half = martingale_at(trace.resampled[t], t);
    out.resampling_errors.push_back(at_half - at_t);
    previous = at_half;
  }
  // M_T is the estimate itself (h_T == 1).
  out.mutation_errors.push_back(run.estimate - previous);
  return out;
}

}  // namespace resmat

#endif
