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

#include "resmat/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace resmat {

namespace {

std::string trimmed(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

std::vector<std::string> split_top_level_commas(const std::string& text) {
  std::vector<std::string> parts;
  int depth = 0;
  std::string current;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      parts.push_back(trimmed(current));
      current.clear();
    } else {
      current += c;
    }
  }
  const std::string last = trimmed(current);
  if (!last.empty()) parts.push_back(last);
  return parts;
}

std::string format_double(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::istream& is) {
  ExperimentConfig config;
  bool in_section = false;
  bool saw_model = false;
  bool saw_schemes = false;
  bool saw_n0 = false;
  bool saw_replicates = false;
  std::set<std::string> seen_keys;

  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trimmed(line);
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body != "[experiment]")
        throw ParseError("config: unknown section " + body);
      if (in_section) throw ParseError("config: duplicate [experiment] section");
      in_section = true;
      continue;
    }
    if (!in_section)
      throw ParseError("config: keys must appear under an [experiment] section");
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ParseError("config: expected `key = value`, got `" + body + "`");
    const std::string key = trimmed(body.substr(0, eq));
    const std::string value = trimmed(body.substr(eq + 1));
    if (!seen_keys.insert(key).second)
      throw ParseError("config: duplicate key `" + key + "`");

    auto parse_positive_int = [&](const std::string& text, const char* what) {
      try {
        std::size_t used = 0;
        const long v = std::stol(text, &used);
        if (used != text.size() || v < 1) throw std::invalid_argument("range");
        return static_cast<int>(v);
      } catch (const std::exception&) {
        throw ParseError(std::string("config: ") + what + " must be a positive integer");
      }
    };

    if (key == "model") {
      config.model_path = value;
      saw_model = true;
    } else if (key == "schemes") {
      for (const std::string& part : split_top_level_commas(value))
        config.schemes.push_back(parse_scheme(part));
      saw_schemes = true;
    } else if (key == "n0") {
      for (const std::string& part : split_top_level_commas(value))
        config.n0_list.push_back(parse_positive_int(part, "n0"));
      saw_n0 = true;
    } else if (key == "horizon") {
      config.horizon = parse_positive_int(value, "horizon");
    } else if (key == "replicates") {
      config.replicates = parse_positive_int(value, "replicates");
      saw_replicates = true;
    } else if (key == "seed") {
      try {
        std::size_t used = 0;
        config.seed = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError("config: seed must be an unsigned integer");
      }
    } else if (key == "trim") {
      try {
        std::size_t used = 0;
        config.trim = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError("config: trim must be a number");
      }
      if (config.trim < 0.0 || config.trim > 0.01)
        throw ParseError("config: trim fraction must lie in [0, 0.01]");
    } else if (key == "out") {
      config.out_path = value;
    } else {
      throw ParseError("config: unknown key `" + key + "`");
    }
  }
  if (!saw_model) throw ParseError("config: missing `model`");
  if (!saw_schemes || config.schemes.empty()) throw ParseError("config: missing `schemes`");
  if (!saw_n0 || config.n0_list.empty()) throw ParseError("config: missing `n0`");
  if (!saw_replicates) throw ParseError("config: missing `replicates`");
  return config;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  return parse(in);
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

void parallel_for(int jobs, int count, const std::function<void(int)>& body) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    while (true) {
      const int index = next.fetch_add(1);
      if (index >= count) return;
      try {
        body(index);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(std::min(jobs, count)));
  for (int i = 0; i < std::min(jobs, count); ++i) threads.emplace_back(worker);
  for (auto& thread : threads) thread.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

void collect_coordinate_names(const SchemeSpec& spec, std::set<std::string>& names) {
  if (!spec.coordinate.empty()) names.insert(spec.coordinate);
  if (spec.inner) collect_coordinate_names(*spec.inner, names);
}

bool has_random_population_kind(const SchemeSpec& spec) {
  switch (spec.kind) {
    case SchemeKind::Bernoulli:
    case SchemeKind::PruningEnrichment:
    case SchemeKind::OptimalSorted:
      return true;
    case SchemeKind::Parallel:
    case SchemeKind::Adaptive:
      return has_random_population_kind(*spec.inner);
    default:
      return false;
  }
}

}  // namespace

std::function<double(int, const int&)> resolve_coordinate(
    const FiniteChainModel& model, const std::string& name) {
  if (name == "identity") {
    return [](int, const int& x) { return static_cast<double>(x); };
  }
  if (name == "h") {
    auto tables = std::make_shared<std::vector<std::vector<double>>>(exact_h_tables(model));
    return [tables](int t, const int& x) {
      return (*tables)[static_cast<std::size_t>(t)][static_cast<std::size_t>(x)];
    };
  }
  throw ContractError("unknown sort coordinate `" + name +
                      "`; supported: identity, h");
}

std::vector<double> bound_constants(const SchemeSpec& spec, int horizon) {
  std::vector<double> constants(static_cast<std::size_t>(horizon));
  const bool random_population = has_random_population_kind(spec);
  for (int t = 0; t < horizon; ++t)
    constants[t] = random_population ? static_cast<double>(t + 1) : 1.0;
  return constants;
}

namespace {

/// Oracle eta^2 arguments for a scheme, when the theory defines them.
struct OracleKind {
  SchemeKind kind;
  std::vector<std::vector<double>> theta;
};

std::optional<OracleKind> oracle_kind_for(const SchemeSpec& spec,
                                          const FiniteChainModel& model) {
  switch (spec.kind) {
    case SchemeKind::Multinomial:
    case SchemeKind::MultinomialResidual:
    case SchemeKind::Bernoulli:
      return OracleKind{spec.kind, {}};
    case SchemeKind::Stratified:
    case SchemeKind::StratifiedResidual: {
      OracleKind out{spec.kind, {}};
      const auto n = static_cast<std::size_t>(model.states);
      if (spec.coordinate.empty()) {
        // Unsorted: particles arrive in arbitrary order, which the theory
        // covers as sorting by a constant coordinate.
        out.theta.push_back(std::vector<double>(n, 0.0));
      } else if (spec.coordinate == "identity") {
        std::vector<double> identity(n);
        for (std::size_t x = 0; x < n; ++x) identity[x] = static_cast<double>(x);
        out.theta.push_back(std::move(identity));
      } else if (spec.coordinate == "h") {
        out.theta = exact_h_tables(model);
      } else {
        throw ContractError("unknown sort coordinate `" + spec.coordinate + "`");
      }
      return out;
    }
    default:
      return std::nullopt;
  }
}

}  // namespace

SampleStats compute_sample_stats(const std::vector<double>& values, double trim) {
  SampleStats stats;
  const std::size_t m = values.size();
  if (m == 0) return stats;
  double sum = 0.0;
  for (double v : values) sum += v;
  stats.mean = sum / static_cast<double>(m);
  if (m > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - stats.mean) * (v - stats.mean);
    stats.variance = acc / static_cast<double>(m - 1);
  }
  const auto k = static_cast<std::size_t>(
      std::ceil(trim * static_cast<double>(m) - 1e-12));
  if (k == 0) {
    stats.trimmed_variance = stats.variance;
    return stats;
  }
  if (m < 2 * k + 2) return stats;  // nothing sensible left; leave 0
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t kept = m - 2 * k;
  double kept_sum = 0.0;
  for (std::size_t i = k; i < m - k; ++i) kept_sum += sorted[i];
  const double kept_mean = kept_sum / static_cast<double>(kept);
  double acc = 0.0;
  for (std::size_t i = k; i < m - k; ++i)
    acc += (sorted[i] - kept_mean) * (sorted[i] - kept_mean);
  stats.trimmed_variance = acc / static_cast<double>(kept - 1);
  return stats;
}

std::vector<ReportRow> run_replicates(const ExperimentConfig& config, int jobs) {
  FiniteChainModel model = FiniteChainModel::load_file(config.model_path);
  if (config.horizon > 0) model = model.truncated(config.horizon);
  const int horizon = model.horizon;
  const double exact = exact_feynman_kac(model);

  std::vector<ReportRow> rows;
  for (std::size_t si = 0; si < config.schemes.size(); ++si) {
    const SchemeSpec& scheme = config.schemes[si];

    RunOptions<int> options;
    std::string scheme_note;
    try {
      std::set<std::string> coordinate_names;
      collect_coordinate_names(scheme, coordinate_names);
      if (coordinate_names.size() > 1)
        throw ContractError("a run supports one sort coordinate per scheme");
      if (!coordinate_names.empty())
        options.coordinate = resolve_coordinate(model, *coordinate_names.begin());
    } catch (const Error& e) {
      scheme_note = e.what();
    }

    std::optional<double> eta2;
    std::string oracle_note;
    try {
      const auto oracle = oracle_kind_for(scheme, model);
      if (oracle) eta2 = exact_eta_squared(model, oracle->kind, oracle->theta).total();
    } catch (const Error& e) {
      oracle_note = e.what();
    }

    const std::vector<double> constants = bound_constants(scheme, horizon);

    for (std::size_t ni = 0; ni < config.n0_list.size(); ++ni) {
      const int n0 = config.n0_list[ni];
      ReportRow row;
      row.scheme = scheme.name();
      row.n0 = n0;
      row.replicates = config.replicates;
      row.oracle_exact = exact;
      row.oracle_eta2 = eta2;
      row.oracle_variance_bound = variance_upper_bound(model, constants, n0);
      row.note = scheme_note.empty() ? oracle_note : scheme_note;

      if (scheme_note.empty()) {
        const int m = config.replicates;
        std::vector<double> estimates(static_cast<std::size_t>(m), 0.0);
        std::vector<long long> count_sums(static_cast<std::size_t>(m), 0);
        std::vector<long long> count_squares(static_cast<std::size_t>(m), 0);
        std::mutex note_mutex;
        std::string run_note;

        parallel_for(jobs, m, [&](int r) {
          const std::uint64_t key = derive_stream(
              config.seed, {static_cast<std::uint64_t>(si), static_cast<std::uint64_t>(ni),
                            static_cast<std::uint64_t>(r)});
          try {
            const SmcRun<int> result = run(model, scheme, n0, horizon, key, options);
            estimates[r] = result.estimate;
            for (const auto& snapshot : result.snapshots) {
              count_sums[r] += snapshot.non_coffin_count;
              count_squares[r] += static_cast<long long>(snapshot.non_coffin_count) *
                                  snapshot.non_coffin_count;
            }
          } catch (const Error& e) {
            std::lock_guard<std::mutex> lock(note_mutex);
            if (run_note.empty()) run_note = e.what();
          }
        });

        if (!run_note.empty()) {
          row.note = run_note;
        } else {
          const SampleStats stats = compute_sample_stats(estimates, config.trim);
          row.mean = stats.mean;
          row.variance = stats.variance;
          row.trimmed_variance = stats.trimmed_variance;
          row.std_error = std::sqrt(stats.variance / static_cast<double>(m));
          row.n0_variance = static_cast<double>(n0) * stats.variance;
          long long total = 0;
          long long total_sq = 0;
          for (int r = 0; r < m; ++r) {
            total += count_sums[r];
            total_sq += count_squares[r];
          }
          const long long samples = static_cast<long long>(m) * horizon;
          row.noncoffin_mean =
              static_cast<double>(total) / static_cast<double>(samples);
          if (samples > 1) {
            const double centered = static_cast<double>(total_sq) -
                                    static_cast<double>(total) *
                                        static_cast<double>(total) /
                                        static_cast<double>(samples);
            row.noncoffin_var = centered / static_cast<double>(samples - 1);
          }
        }
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_report(std::ostream& os, const std::vector<ReportRow>& rows,
                  std::uint64_t config_hash, std::uint64_t seed) {
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                static_cast<unsigned long long>(config_hash));
  os << "# resmat replicate report\n";
  os << "# config_hash=" << hash_hex << " seed=" << seed << "\n";
  os << "scheme,n0,replicates,mean,std_error,variance,trimmed_variance,n0_variance,"
        "oracle_exact,oracle_eta2,oracle_variance_bound,noncoffin_mean,noncoffin_var,"
        "note\n";
  for (const ReportRow& row : rows) {
    os << row.scheme << ',' << row.n0 << ',' << row.replicates << ','
       << format_double(row.mean) << ',' << format_double(row.std_error) << ','
       << format_double(row.variance) << ',' << format_double(row.trimmed_variance)
       << ',' << format_double(row.n0_variance) << ',' << format_double(row.oracle_exact)
       << ',' << (row.oracle_eta2 ? format_double(*row.oracle_eta2) : std::string())
       << ',' << format_double(row.oracle_variance_bound) << ','
       << format_double(row.noncoffin_mean) << ',' << format_double(row.noncoffin_var)
       << ',' << row.note << '\n';
  }
}

CompareResult compare_schemes(const ExperimentConfig& config) {
  FiniteChainModel model = FiniteChainModel::load_file(config.model_path);
  if (config.horizon > 0) model = model.truncated(config.horizon);
  const int horizon = model.horizon;
  const int n0 = config.n0_list.front();
  const auto h_tables = exact_h_tables(model);

  // Frozen trajectory: one traced multinomial run; every scheme is evaluated
  // on the same pre-resampling ensembles.
  RunOptions<int> trace_options;
  trace_options.retain_trace = true;
  const std::uint64_t key = derive_stream(config.seed, {0x636F6D70ULL, 0});
  const SmcRun<int> frozen =
      run(model, SchemeSpec::multinomial(), n0, horizon, key, trace_options);
  if (frozen.degenerate)
    throw DegenerateError("compare-schemes: frozen trajectory degenerated");

  CompareResult result;
  std::vector<double> totals(config.schemes.size(), 0.0);

  for (int t = 0; t < horizon; ++t) {
    const WeightedEnsemble<int>& ens = frozen.trace->weighted[t];
    const int n_in = static_cast<int>(ens.size());
    const double w_bar = average_weight(ens);

    std::vector<double> h_values(static_cast<std::size_t>(n_in) + 1, 0.0);
    for (int i = 0; i < n_in; ++i) {
      if (!ens.particles[i].is_coffin())
        h_values[i] = h_tables[t][static_cast<std::size_t>(ens.particles[i].value())];
    }

    for (std::size_t si = 0; si < config.schemes.size(); ++si) {
      const SchemeSpec& original = config.schemes[si];
      CompareRow row;
      row.step = t;
      row.scheme = original.name();

      SchemeSpec effective = original;
      for (int guard = 0; effective.kind == SchemeKind::Adaptive; ++guard) {
        if (guard > 32) throw ContractError("compare-schemes: adaptive cycle");
        effective = adaptive_select(ens, effective.ess_fraction, *effective.inner);
      }

      std::vector<double> theta;
      if (effective.needs_coordinate()) {
        auto coordinate = resolve_coordinate(model, effective.coordinate);
        theta.resize(ens.size());
        for (std::size_t i = 0; i < ens.size(); ++i)
          theta[i] = ens.particles[i].is_coffin()
                         ? 0.0
                         : coordinate(t, ens.particles[i].value());
      }
      const ResamplingMatrix w = build_matrix(
          effective, ens.weights, theta, n0, fixed_n_out(original, n_in, n0));
      row.vhat2 = effective.is_complete_kind()
                      ? resampling_variance(w, h_values, w_bar, n0)
                      : offspring_variance(w, h_values, n0);
      totals[si] += row.vhat2;

      try {
        const auto oracle = oracle_kind_for(original, model);
        if (oracle) {
          row.eta_hat2 =
              exact_eta_squared(model, oracle->kind, oracle->theta).resampling_terms[t];
        }
      } catch (const Error&) {
        // Residual precondition failures just leave the column empty.
      }
      result.rows.push_back(std::move(row));
    }
  }

  // Variance-ordering relations between the kinds present in the config.
  auto first_index_of = [&](SchemeKind kind) -> int {
    for (std::size_t si = 0; si < config.schemes.size(); ++si)
      if (config.schemes[si].kind == kind) return static_cast<int>(si);
    return -1;
  };
  const struct {
    SchemeKind low;
    SchemeKind high;
    const char* text;
  } pairs[] = {
      {SchemeKind::Stratified, SchemeKind::Multinomial,
       "stratified <= multinomial"},
      {SchemeKind::StratifiedResidual, SchemeKind::MultinomialResidual,
       "strat_residual <= mult_residual"},
      {SchemeKind::MultinomialResidual, SchemeKind::Multinomial,
       "mult_residual <= multinomial"},
  };
  for (const auto& pair : pairs) {
    const int low = first_index_of(pair.low);
    const int high = first_index_of(pair.high);
    if (low < 0 || high < 0) continue;
    OrderingCheck check;
    check.description = pair.text;
    check.pass = totals[low] <= totals[high] + 1e-12 * std::max(1.0, totals[high]);
    result.orderings.push_back(std::move(check));
  }
  return result;
}

void write_compare(std::ostream& os, const CompareResult& result) {
  os << "step,scheme,vhat2,eta_hat2\n";
  for (const CompareRow& row : result.rows) {
    os << row.step << ',' << row.scheme << ',' << format_double(row.vhat2) << ','
       << (row.eta_hat2 ? format_double(*row.eta_hat2) : std::string()) << '\n';
  }
  for (const OrderingCheck& check : result.orderings)
    os << "ordering," << check.description << ','
       << (check.pass ? "pass" : "fail") << '\n';
}

int cmd_validate_matrix(const std::string& matrix_path, const std::string& weights_path,
                        std::ostream& out) {
  ResamplingMatrix matrix = read_matrix_file(matrix_path);
  std::ifstream weights_in(weights_path);
  if (!weights_in) throw ParseError("cannot open weights file: " + weights_path);
  std::vector<double> weights;
  {
    std::string line;
    while (std::getline(weights_in, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream split(line);
      std::string token;
      while (split >> token) {
        try {
          std::size_t used = 0;
          weights.push_back(std::stod(token, &used));
          if (used != token.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          throw ParseError("weights file: bad number `" + token + "`");
        }
      }
    }
  }
  if (static_cast<int>(weights.size()) != matrix.n_in())
    throw ParseError("weights file: expected " + std::to_string(matrix.n_in()) +
                     " weights, found " + std::to_string(weights.size()));
  const ValidationReport report = validate(matrix, weights);
  if (report.ok) {
    out << "ok: " << matrix.n_in() << " rows, " << matrix.n_out()
        << " columns, row sums match\n";
    return 0;
  }
  out << "violation: " << report.message << "\n";
  return 1;
}

namespace {

std::string slurp_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

int cmd_replicate(const std::string& config_path, int jobs,
                  const std::optional<std::uint64_t>& seed_override,
                  const std::optional<std::string>& out_override, std::ostream& log) {
  const std::string config_bytes = slurp_file(config_path);
  std::istringstream config_in(config_bytes);
  ExperimentConfig config = ExperimentConfig::parse(config_in);
  if (seed_override) config.seed = *seed_override;
  if (out_override) config.out_path = *out_override;
  if (config.out_path.empty())
    throw ParseError("replicate: no output path (config `out` or --out)");

  const std::vector<ReportRow> rows = run_replicates(config, jobs);
  std::ofstream out(config.out_path, std::ios::binary);
  if (!out) throw ParseError("cannot open output file: " + config.out_path);
  write_report(out, rows, fnv1a(config_bytes), config.seed);
  log << "wrote " << rows.size() << " rows to " << config.out_path << "\n";
  for (const ReportRow& row : rows)
    if (!row.note.empty())
      log << "note: " << row.scheme << " n0=" << row.n0 << ": " << row.note << "\n";
  return 0;
}

int cmd_compare_schemes(const std::string& config_path, int jobs,
                        const std::optional<std::uint64_t>& seed_override,
                        const std::optional<std::string>& out_override,
                        std::ostream& log) {
  (void)jobs;  // the comparison is a single deterministic pass
  const std::string config_bytes = slurp_file(config_path);
  std::istringstream config_in(config_bytes);
  ExperimentConfig config = ExperimentConfig::parse(config_in);
  if (seed_override) config.seed = *seed_override;
  if (out_override) config.out_path = *out_override;

  const CompareResult result = compare_schemes(config);
  if (config.out_path.empty()) {
    write_compare(log, result);
  } else {
    std::ofstream out(config.out_path, std::ios::binary);
    if (!out) throw ParseError("cannot open output file: " + config.out_path);
    write_compare(out, result);
    log << "wrote comparison to " << config.out_path << "\n";
  }
  return result.all_pass() ? 0 : 1;
}

int cmd_report(const std::string& csv_path, std::ostream& out) {
  std::ifstream in(csv_path);
  if (!in) throw ParseError("cannot open report file: " + csv_path);
  std::vector<std::vector<std::string>> table;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() == '#') continue;
    if (trimmed(line).empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream split(line);
    while (std::getline(split, cell, ',')) cells.push_back(cell);
    table.push_back(std::move(cells));
  }
  if (table.empty()) throw ParseError("report file has no rows: " + csv_path);
  std::vector<std::size_t> widths;
  for (const auto& row : table) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i)
      widths[i] = std::max(widths[i], row[i].size());
  }
  for (const auto& row : table) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << row[i];
      if (i + 1 < row.size())
        out << std::string(widths[i] - row[i].size() + 2, ' ');
    }
    out << "\n";
  }
  return 0;
}

}  // namespace resmat
