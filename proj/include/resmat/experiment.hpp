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

#ifndef RESMAT_EXPERIMENT_HPP
#define RESMAT_EXPERIMENT_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "resmat/engine.hpp"
#include "resmat/finite_chain.hpp"
#include "resmat/schemes.hpp"

namespace resmat {

/// Flat key-value experiment description. Unknown keys are rejected; there
/// are no silent defaults for anything that changes results.
struct ExperimentConfig {
  std::string model_path;
  std::vector<SchemeSpec> schemes;
  std::vector<int> n0_list;
  int horizon = -1;  // -1: use the model's own horizon
  int replicates = 1;
  std::uint64_t seed = 0;
  double trim = 0.0;
  std::string out_path;

  static ExperimentConfig parse(std::istream& is);
  static ExperimentConfig parse_file(const std::string& path);
};

/// One line of the replicate report: estimator statistics for a
/// (scheme, n0) cell next to the oracle's exact value and constants.
struct ReportRow {
  std::string scheme;
  int n0 = 0;
  int replicates = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double variance = 0.0;
  double trimmed_variance = 0.0;
  double n0_variance = 0.0;
  double oracle_exact = 0.0;
  std::optional<double> oracle_eta2;
  double oracle_variance_bound = 0.0;
  double noncoffin_mean = 0.0;
  double noncoffin_var = 0.0;
  std::string note;  // per-row precondition failures; empty on success
};

/// FNV-1a over the raw bytes, used to stamp reports with their config.
std::uint64_t fnv1a(const std::string& bytes);

/// Mean, unbiased variance, and the variance left after dropping the
/// ceil(trim * M) most extreme values from each tail (taken about the
/// trimmed mean). With trim = 0 the two variances coincide.
struct SampleStats {
  double mean = 0.0;
  double variance = 0.0;
  double trimmed_variance = 0.0;
};
SampleStats compute_sample_stats(const std::vector<double>& values, double trim);

/// Runs `body(index)` for indices [0, count) on `jobs` workers. Results must
/// be keyed by index by the caller; the pool imposes no ordering.
void parallel_for(int jobs, int count, const std::function<void(int)>& body);

/// Resolves a coordinate name ("identity" or "h") against a model. Only one
/// distinct coordinate name may appear within a scheme spec tree.
std::function<double(int, const int&)> resolve_coordinate(
    const FiniteChainModel& model, const std::string& name);

/// Assumption constants C_0..C_{T-1} for the variance bound: t + 1 when the
/// spec tree contains a random-population kind, 1 otherwise.
std::vector<double> bound_constants(const SchemeSpec& spec, int horizon);

/// Per-(scheme, n0) replicated estimation. Replicate r of cell (si, ni) uses
/// the stream derive_stream(seed, {si, ni, r}); results are deterministic for
/// a fixed seed regardless of the job count.
std::vector<ReportRow> run_replicates(const ExperimentConfig& config, int jobs);

/// Writes rows as CSV with `#` comment headers carrying the config hash and
/// master seed. Columns, in order: scheme, n0, replicates, mean, std_error,
/// variance, trimmed_variance, n0_variance, oracle_exact, oracle_eta2,
/// oracle_variance_bound, noncoffin_mean, noncoffin_var, note.
void write_report(std::ostream& os, const std::vector<ReportRow>& rows,
                  std::uint64_t config_hash, std::uint64_t seed);

struct CompareRow {
  int step = 0;
  std::string scheme;
  double vhat2 = 0.0;                    // exact matrix variance on the frozen ensemble
  std::optional<double> eta_hat2;        // oracle per-step constant where defined
};

struct OrderingCheck {
  std::string description;
  bool pass = false;
};

struct CompareResult {
  std::vector<CompareRow> rows;
  std::vector<OrderingCheck> orderings;
  bool all_pass() const {
    for (const auto& check : orderings)
      if (!check.pass) return false;
    return true;
  }
};

/// Builds every scheme's matrix on a shared frozen ensemble trajectory (so
/// schemes see identical inputs), tabulates exact per-step variances with
/// h = h_t, and checks the variance-ordering relations between the scheme
/// pairs present in the config.
CompareResult compare_schemes(const ExperimentConfig& config);

void write_compare(std::ostream& os, const CompareResult& result);

// CLI entry points. Exit codes: 0 success, 1 assertion/validation failure,
// 2 usage/parse error.
int cmd_validate_matrix(const std::string& matrix_path, const std::string& weights_path,
                        std::ostream& out);
int cmd_replicate(const std::string& config_path, int jobs,
                  const std::optional<std::uint64_t>& seed_override,
                  const std::optional<std::string>& out_override, std::ostream& log);
int cmd_compare_schemes(const std::string& config_path, int jobs,
                        const std::optional<std::uint64_t>& seed_override,
                        const std::optional<std::string>& out_override,
                        std::ostream& log);
int cmd_report(const std::string& csv_path, std::ostream& out);

}  // namespace resmat

#endif
