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

#include "resmat/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace resmat {

namespace {

double weight_sum(std::span<const double> weights) {
  double sum = 0.0;
  for (double w : weights) sum += w;
  return sum;
}

void require_positive_total(std::span<const double> weights, const char* who) {
  if (weight_sum(weights) <= 0.0)
    throw DegenerateError(std::string(who) + ": all weights are zero");
}

int resolve_n_out(int requested, int natural, const char* who) {
  if (requested < 0) return natural;
  if (requested < natural)
    throw ContractError(std::string(who) + ": requested column count " +
                        std::to_string(requested) + " is below the natural count " +
                        std::to_string(natural));
  return requested;
}

void pad_coffin_columns(ResamplingMatrix& w, int from, double weight) {
  if (weight == 0.0) return;
  for (int j = from; j < w.n_out(); ++j) w.add(w.coffin_row(), j, weight);
}

/// Entries of the stratified matrix on `weights` with `strata` equal-mass
/// strata, emitted through `emit(row, stratum, value)`. Each row's pieces are
/// rescaled to sum to its weight exactly, so the dominant rounding error of
/// the cumulative construction lands in the loose column-sum constraint
/// rather than the tight row-sum one. Boundary slivers below 1e-15 of the
/// total mass are dropped when the row has a real piece elsewhere.
template <class Emit>
void stratified_block(std::span<const double> weights, int strata, Emit emit) {
  const double total = weight_sum(weights);
  const double stride = total / static_cast<double>(strata);
  auto boundary = [&](int j) {
    return j >= strata ? total : static_cast<double>(j) * stride;
  };

  std::vector<std::pair<int, double>> pieces;
  double cum_prev = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    const double cum = cum_prev + weights[i];
    pieces.clear();
    int j = static_cast<int>(std::floor(cum_prev / stride));
    j = std::clamp(j, 0, strata - 1);
    while (j > 0 && boundary(j) > cum_prev) --j;
    for (; j < strata && boundary(j) < cum; ++j) {
      const double lo = std::max(boundary(j), cum_prev);
      const double hi = std::min(boundary(j + 1), cum);
      if (hi > lo) pieces.emplace_back(j, hi - lo);
    }
    if (pieces.empty()) {
      // Weight too small to advance the cumulative sum; give it a token
      // stratum so the row-sum contract still holds.
      int k = static_cast<int>(std::floor(cum_prev / stride));
      pieces.emplace_back(std::clamp(k, 0, strata - 1), weights[i]);
    }
    if (pieces.size() > 1) {
      const double sliver = 1e-15 * total;
      std::vector<std::pair<int, double>> kept;
      for (const auto& piece : pieces)
        if (piece.second > sliver) kept.push_back(piece);
      if (!kept.empty()) pieces = std::move(kept);
    }
    double piece_sum = 0.0;
    for (const auto& piece : pieces) piece_sum += piece.second;
    const double rescale = weights[i] / piece_sum;
    for (const auto& piece : pieces)
      emit(static_cast<int>(i), piece.first, piece.second * rescale);
    cum_prev = cum;
  }
}

struct ResidualParts {
  std::vector<double> floors;
  std::vector<double> fracs;
  double frac_sum = 0.0;  // left-to-right sum of fracs
  long residual_count = 0;
};

ResidualParts residual_parts(std::span<const double> weights, double w_bar,
                             const char* who) {
  ResidualParts parts;
  parts.floors.reserve(weights.size());
  parts.fracs.reserve(weights.size());
  for (double w : weights) {
    const double ratio = w / w_bar;
    const double fl = std::floor(ratio);
    parts.floors.push_back(fl);
    parts.fracs.push_back(ratio - fl);
  }
  for (double f : parts.fracs) parts.frac_sum += f;
  parts.residual_count = std::lround(parts.frac_sum);
  if (std::abs(static_cast<double>(parts.residual_count) - parts.frac_sum) >= 1e-6)
    throw ContractError(std::string(who) +
                        ": fractional weight parts do not sum to an integer; "
                        "upstream weights are numerically damaged");
  return parts;
}

ResamplingMatrix unpermute_rows(const ResamplingMatrix& sorted,
                                const std::vector<int>& perm, int n_in) {
  ResamplingMatrix out(n_in, sorted.n_out());
  for (int j = 0; j < sorted.n_out(); ++j) {
    for (const auto& [row, value] : sorted.column(j)) {
      const int original = row == sorted.coffin_row() ? out.coffin_row() : perm[row];
      out.add(original, j, value);
    }
  }
  return out;
}

}  // namespace

namespace {

SchemeSpec make_spec(SchemeKind kind) {
  SchemeSpec spec;
  spec.kind = kind;
  return spec;
}

}  // namespace

SchemeSpec SchemeSpec::sis() { return make_spec(SchemeKind::Sis); }
SchemeSpec SchemeSpec::multinomial() { return make_spec(SchemeKind::Multinomial); }
SchemeSpec SchemeSpec::bernoulli() { return make_spec(SchemeKind::Bernoulli); }
SchemeSpec SchemeSpec::stratified(std::string coordinate) {
  SchemeSpec spec = make_spec(SchemeKind::Stratified);
  spec.coordinate = std::move(coordinate);
  return spec;
}
SchemeSpec SchemeSpec::multinomial_residual() {
  return make_spec(SchemeKind::MultinomialResidual);
}
SchemeSpec SchemeSpec::stratified_residual(std::string coordinate) {
  SchemeSpec spec = make_spec(SchemeKind::StratifiedResidual);
  spec.coordinate = std::move(coordinate);
  return spec;
}
SchemeSpec SchemeSpec::pruning_enrichment(double low, double high) {
  if (!(low > 0.0) || !(low <= high))
    throw ContractError("pruning_enrichment: cutoffs must satisfy 0 < u <= U");
  SchemeSpec spec = make_spec(SchemeKind::PruningEnrichment);
  spec.prune_low = low;
  spec.prune_high = high;
  return spec;
}
SchemeSpec SchemeSpec::rejection_control() {
  return make_spec(SchemeKind::RejectionControl);
}
SchemeSpec SchemeSpec::parallel(int blocks, SchemeSpec inner) {
  if (blocks < 1) throw ContractError("parallel: block count must be positive");
  SchemeSpec spec = make_spec(SchemeKind::Parallel);
  spec.blocks = blocks;
  spec.inner = std::make_shared<const SchemeSpec>(std::move(inner));
  return spec;
}
SchemeSpec SchemeSpec::adaptive(double ess_fraction, SchemeSpec fallback) {
  if (ess_fraction <= 0.0 || ess_fraction > 1.0)
    throw ContractError("adaptive: ESS threshold fraction must lie in (0, 1]");
  SchemeSpec spec = make_spec(SchemeKind::Adaptive);
  spec.ess_fraction = ess_fraction;
  spec.inner = std::make_shared<const SchemeSpec>(std::move(fallback));
  return spec;
}
SchemeSpec SchemeSpec::optimal_sorted(std::string coordinate) {
  if (coordinate.empty())
    throw ContractError("optimal_sorted: a sort coordinate is required");
  SchemeSpec spec = make_spec(SchemeKind::OptimalSorted);
  spec.coordinate = std::move(coordinate);
  return spec;
}

bool SchemeSpec::needs_coordinate() const {
  return kind == SchemeKind::OptimalSorted || !coordinate.empty();
}

bool SchemeSpec::is_complete_kind() const {
  switch (kind) {
    case SchemeKind::Multinomial:
    case SchemeKind::Bernoulli:
    case SchemeKind::Stratified:
    case SchemeKind::MultinomialResidual:
    case SchemeKind::StratifiedResidual:
    case SchemeKind::OptimalSorted:
      return true;
    default:
      return false;
  }
}

std::string SchemeSpec::name() const {
  std::ostringstream os;
  auto trim_number = [](double v) {
    std::ostringstream num;
    num << v;
    return num.str();
  };
  switch (kind) {
    case SchemeKind::Sis:
      return "sis";
    case SchemeKind::Multinomial:
      return "multinomial";
    case SchemeKind::Bernoulli:
      return "bernoulli";
    case SchemeKind::Stratified:
      if (coordinate.empty()) return "stratified";
      return "sorted_stratified(" + coordinate + ")";
    case SchemeKind::MultinomialResidual:
      return "mult_residual";
    case SchemeKind::StratifiedResidual:
      if (coordinate.empty()) return "strat_residual";
      return "strat_residual(" + coordinate + ")";
    case SchemeKind::PruningEnrichment:
      os << "prune_enrich(" << trim_number(prune_low) << "," << trim_number(prune_high)
         << ")";
      return os.str();
    case SchemeKind::RejectionControl:
      return "rejection_control";
    case SchemeKind::Parallel:
      os << "parallel(" << blocks << "," << inner->name() << ")";
      return os.str();
    case SchemeKind::Adaptive:
      os << "adaptive(" << trim_number(ess_fraction) << "," << inner->name() << ")";
      return os.str();
    case SchemeKind::OptimalSorted:
      return "optimal_sorted(" + coordinate + ")";
  }
  return "unknown";
}

namespace {

std::string trimmed(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

std::vector<std::string> split_top_level(const std::string& text) {
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
  if (!trimmed(current).empty() || !parts.empty()) parts.push_back(trimmed(current));
  return parts;
}

double parse_number(const std::string& text, const char* what) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ParseError(std::string("scheme: expected a number for ") + what + ", got `" +
                     text + "`");
  }
  if (used != text.size())
    throw ParseError(std::string("scheme: trailing characters in ") + what + ": `" +
                     text + "`");
  return value;
}

}  // namespace

SchemeSpec parse_scheme(const std::string& text) {
  const std::string body = trimmed(text);
  if (body.empty()) throw ParseError("scheme: empty specification");

  std::string kind = body;
  std::vector<std::string> args;
  const auto open = body.find('(');
  if (open != std::string::npos) {
    if (body.back() != ')')
      throw ParseError("scheme: unbalanced parentheses in `" + body + "`");
    kind = trimmed(body.substr(0, open));
    const std::string inside = body.substr(open + 1, body.size() - open - 2);
    if (!trimmed(inside).empty()) args = split_top_level(inside);
  }

  auto expect_args = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi)
      throw ParseError("scheme: wrong argument count for `" + kind + "`");
  };

  if (kind == "sis") {
    expect_args(0, 0);
    return SchemeSpec::sis();
  }
  if (kind == "multinomial") {
    expect_args(0, 0);
    return SchemeSpec::multinomial();
  }
  if (kind == "bernoulli") {
    expect_args(0, 0);
    return SchemeSpec::bernoulli();
  }
  if (kind == "stratified") {
    expect_args(0, 1);
    return SchemeSpec::stratified(args.empty() ? "" : args[0]);
  }
  if (kind == "sorted_stratified") {
    expect_args(1, 1);
    return SchemeSpec::stratified(args[0]);
  }
  if (kind == "mult_residual") {
    expect_args(0, 0);
    return SchemeSpec::multinomial_residual();
  }
  if (kind == "strat_residual") {
    expect_args(0, 1);
    return SchemeSpec::stratified_residual(args.empty() ? "" : args[0]);
  }
  if (kind == "prune_enrich") {
    expect_args(2, 2);
    return SchemeSpec::pruning_enrichment(parse_number(args[0], "prune_enrich u"),
                                          parse_number(args[1], "prune_enrich U"));
  }
  if (kind == "rejection_control") {
    expect_args(0, 0);
    return SchemeSpec::rejection_control();
  }
  if (kind == "parallel") {
    expect_args(2, 2);
    const double blocks = parse_number(args[0], "parallel block count");
    if (blocks < 1.0 || blocks != std::floor(blocks))
      throw ParseError("scheme: parallel block count must be a positive integer");
    return SchemeSpec::parallel(static_cast<int>(blocks), parse_scheme(args[1]));
  }
  if (kind == "adaptive") {
    expect_args(2, 2);
    return SchemeSpec::adaptive(parse_number(args[0], "adaptive threshold"),
                                parse_scheme(args[1]));
  }
  if (kind == "optimal_sorted") {
    expect_args(1, 1);
    return SchemeSpec::optimal_sorted(args[0]);
  }
  throw ParseError("scheme: unknown kind `" + kind + "`");
}

std::vector<std::vector<int>> contiguous_partition(int n, int blocks) {
  if (blocks < 1 || blocks > n)
    throw ContractError("contiguous_partition: need 1 <= blocks <= n");
  std::vector<std::vector<int>> partition(static_cast<std::size_t>(blocks));
  const int base = n / blocks;
  const int extra = n % blocks;
  int next = 0;
  for (int b = 0; b < blocks; ++b) {
    const int size = base + (b < extra ? 1 : 0);
    for (int k = 0; k < size; ++k) partition[b].push_back(next++);
  }
  return partition;
}

int fixed_n_out(const SchemeSpec& spec, int n_in, int n0) {
  switch (spec.kind) {
    case SchemeKind::Sis:
      return n_in;
    case SchemeKind::Multinomial:
    case SchemeKind::Stratified:
    case SchemeKind::MultinomialResidual:
    case SchemeKind::StratifiedResidual:
      return n0;
    case SchemeKind::Bernoulli:
      return n_in + n0;
    case SchemeKind::PruningEnrichment:
      return 2 * n_in;
    case SchemeKind::RejectionControl:
      return n_in;
    case SchemeKind::OptimalSorted:
      return n0 + 1;
    case SchemeKind::Parallel: {
      const auto partition = contiguous_partition(n_in, std::min(spec.blocks, n_in));
      int total = 0;
      for (const auto& block : partition) {
        const int size = static_cast<int>(block.size());
        const int local_n0 = std::max(
            1L, std::lround(static_cast<double>(n0) * size / static_cast<double>(n_in)));
        total += fixed_n_out(*spec.inner, size, static_cast<int>(local_n0));
      }
      return total;
    }
    case SchemeKind::Adaptive:
      return std::max(n_in, fixed_n_out(*spec.inner, n_in, n0));
  }
  throw ContractError("fixed_n_out: unknown scheme kind");
}

ResamplingMatrix build_sis(std::span<const double> weights, int n0, int n_out) {
  const int n = static_cast<int>(weights.size());
  const int cols = resolve_n_out(n_out, n, "build_sis");
  ResamplingMatrix w(n, cols);
  for (int i = 0; i < n; ++i) w.add(i, i, weights[i]);
  pad_coffin_columns(w, n, weight_sum(weights) / static_cast<double>(n0));
  return w;
}

ResamplingMatrix build_multinomial(std::span<const double> weights, int n0, int n_out) {
  require_positive_total(weights, "build_multinomial");
  const int n = static_cast<int>(weights.size());
  const int cols = resolve_n_out(n_out, n0, "build_multinomial");
  ResamplingMatrix w(n, cols);
  for (int j = 0; j < n0; ++j)
    for (int i = 0; i < n; ++i)
      if (weights[i] > 0.0) w.add(i, j, weights[i] / static_cast<double>(n0));
  pad_coffin_columns(w, n0, weight_sum(weights) / static_cast<double>(n0));
  return w;
}

ResamplingMatrix build_bernoulli(std::span<const double> weights, int n0, int n_out) {
  require_positive_total(weights, "build_bernoulli");
  const int n = static_cast<int>(weights.size());
  const double w_bar = weight_sum(weights) / static_cast<double>(n0);

  struct Column {
    int row;
    double keep;  // mass on the particle; the rest of w_bar goes to the coffin
  };
  std::vector<Column> columns;
  for (int i = 0; i < n; ++i) {
    const double ratio = weights[i] / w_bar;
    const double copies = std::floor(ratio);
    const double frac = ratio - copies;
    for (long c = 0; c < static_cast<long>(copies); ++c)
      columns.push_back({i, w_bar});
    if (frac > 0.0) columns.push_back({i, w_bar * frac});
  }

  const int natural = static_cast<int>(columns.size());
  const int cols = resolve_n_out(n_out, natural, "build_bernoulli");
  ResamplingMatrix w(n, cols);
  for (int j = 0; j < natural; ++j) {
    w.add(columns[j].row, j, columns[j].keep);
    const double coffin = w_bar - columns[j].keep;
    if (coffin > 0.0) w.add(w.coffin_row(), j, coffin);
  }
  pad_coffin_columns(w, natural, w_bar);
  return w;
}

ResamplingMatrix build_stratified(std::span<const double> weights, int n0, int n_out) {
  require_positive_total(weights, "build_stratified");
  const int n = static_cast<int>(weights.size());
  const int cols = resolve_n_out(n_out, n0, "build_stratified");
  ResamplingMatrix w(n, cols);
  stratified_block(weights, n0,
                   [&](int row, int stratum, double value) { w.add(row, stratum, value); });
  pad_coffin_columns(w, n0, weight_sum(weights) / static_cast<double>(n0));
  return w;
}

ResamplingMatrix build_multinomial_residual(std::span<const double> weights, int n0,
                                            int n_out) {
  require_positive_total(weights, "build_multinomial_residual");
  const int n = static_cast<int>(weights.size());
  const double w_bar = weight_sum(weights) / static_cast<double>(n0);
  const ResidualParts parts = residual_parts(weights, w_bar, "build_multinomial_residual");

  int deterministic = 0;
  for (double fl : parts.floors) deterministic += static_cast<int>(fl);
  const int natural = deterministic + static_cast<int>(parts.residual_count);
  const int cols = resolve_n_out(n_out, natural, "build_multinomial_residual");

  ResamplingMatrix w(n, cols);
  int j = 0;
  for (int i = 0; i < n; ++i)
    for (long c = 0; c < static_cast<long>(parts.floors[i]); ++c) w.add(i, j++, w_bar);
  for (long r = 0; r < parts.residual_count; ++r, ++j)
    for (int i = 0; i < n; ++i)
      if (parts.fracs[i] > 0.0) w.add(i, j, w_bar * parts.fracs[i] / parts.frac_sum);
  pad_coffin_columns(w, natural, w_bar);
  return w;
}

ResamplingMatrix build_stratified_residual(std::span<const double> weights, int n0,
                                           int n_out) {
  require_positive_total(weights, "build_stratified_residual");
  const int n = static_cast<int>(weights.size());
  const double w_bar = weight_sum(weights) / static_cast<double>(n0);
  const ResidualParts parts = residual_parts(weights, w_bar, "build_stratified_residual");

  int deterministic = 0;
  for (double fl : parts.floors) deterministic += static_cast<int>(fl);
  const int natural = deterministic + static_cast<int>(parts.residual_count);
  const int cols = resolve_n_out(n_out, natural, "build_stratified_residual");

  ResamplingMatrix w(n, cols);
  int j = 0;
  for (int i = 0; i < n; ++i)
    for (long c = 0; c < static_cast<long>(parts.floors[i]); ++c) w.add(i, j++, w_bar);

  if (parts.residual_count > 0) {
    std::vector<double> fractional(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) fractional[i] = w_bar * parts.fracs[i];
    double fractional_total = 0.0;
    for (double g : fractional) fractional_total += g;
    // Rescale the block so columns sum to w_bar exactly and row masses agree
    // with the multinomial-residual block, keeping the averaging identity.
    const double scale =
        w_bar * static_cast<double>(parts.residual_count) / fractional_total;
    const int offset = deterministic;
    stratified_block(fractional, static_cast<int>(parts.residual_count),
                     [&](int row, int stratum, double value) {
                       w.add(row, offset + stratum, value * scale);
                     });
  }
  pad_coffin_columns(w, natural, w_bar);
  return w;
}

ResamplingMatrix build_pruning_enrichment(std::span<const double> weights, double low,
                                          double high, int n_out) {
  if (!(low > 0.0) || !(low <= high))
    throw ContractError("build_pruning_enrichment: cutoffs must satisfy 0 < u <= U");
  const int n = static_cast<int>(weights.size());

  struct Column {
    int row;
    double particle_mass;
    double coffin_mass;
  };
  std::vector<Column> columns;
  for (int i = 0; i < n; ++i) {
    const double wi = weights[i];
    if (wi > high) {
      columns.push_back({i, wi / 2.0, 0.0});
      columns.push_back({i, wi / 2.0, 0.0});
    } else if (wi < low) {
      columns.push_back({i, wi, wi});
    } else {
      columns.push_back({i, wi, 0.0});
    }
  }
  const int natural = static_cast<int>(columns.size());
  const int cols = resolve_n_out(n_out, natural, "build_pruning_enrichment");
  ResamplingMatrix w(n, cols);
  for (int j = 0; j < natural; ++j) {
    if (columns[j].particle_mass > 0.0) w.add(columns[j].row, j, columns[j].particle_mass);
    if (columns[j].coffin_mass > 0.0) w.add(w.coffin_row(), j, columns[j].coffin_mass);
  }
  // Padding columns stay zero: the scheme is not complete, and zero columns
  // sample as weight-0 coffins.
  return w;
}

ResamplingMatrix build_rejection_control(std::span<const double> weights, int n0,
                                         int n_out) {
  require_positive_total(weights, "build_rejection_control");
  const int n = static_cast<int>(weights.size());
  const double w_bar = weight_sum(weights) / static_cast<double>(n0);
  const int cols = resolve_n_out(n_out, n, "build_rejection_control");
  ResamplingMatrix w(n, cols);
  for (int i = 0; i < n; ++i) {
    if (weights[i] >= w_bar) {
      w.add(i, i, weights[i]);
    } else {
      if (weights[i] > 0.0) w.add(i, i, weights[i]);
      w.add(w.coffin_row(), i, w_bar - weights[i]);
    }
  }
  pad_coffin_columns(w, n, w_bar);
  return w;
}

ResamplingMatrix build_parallel(std::span<const double> weights,
                                const std::vector<std::vector<int>>& partition,
                                const SchemeSpec& inner, int n0, int n_out) {
  const int n = static_cast<int>(weights.size());
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (const auto& block : partition) {
    if (block.empty()) throw ContractError("build_parallel: empty block");
    for (int i : block) {
      if (i < 0 || i >= n || seen[i])
        throw ContractError("build_parallel: partition is not a disjoint cover");
      seen[i] = true;
    }
  }
  for (bool s : seen)
    if (!s) throw ContractError("build_parallel: partition is not a disjoint cover");

  struct BlockResult {
    const std::vector<int>* indices;
    ResamplingMatrix matrix;
  };
  std::vector<BlockResult> results;
  int natural = 0;
  for (const auto& block : partition) {
    std::vector<double> block_weights;
    block_weights.reserve(block.size());
    for (int i : block) block_weights.push_back(weights[i]);
    const long local_n0 =
        std::max(1L, std::lround(static_cast<double>(n0) * block.size() /
                                 static_cast<double>(n)));
    const bool dead_block = weight_sum(block_weights) <= 0.0;
    // A block whose particles all carry weight 0 contributes zero columns;
    // its offspring are weight-0 coffins.
    ResamplingMatrix m =
        dead_block
            ? ResamplingMatrix(static_cast<int>(block.size()),
                               fixed_n_out(inner, static_cast<int>(block.size()),
                                           static_cast<int>(local_n0)))
            : build_matrix(inner, block_weights, {}, static_cast<int>(local_n0));
    natural += m.n_out();
    results.push_back({&block, std::move(m)});
  }

  const int cols = resolve_n_out(n_out, natural, "build_parallel");
  ResamplingMatrix w(n, cols);
  int offset = 0;
  for (const auto& result : results) {
    for (int j = 0; j < result.matrix.n_out(); ++j) {
      for (const auto& [row, value] : result.matrix.column(j)) {
        const int global =
            row == result.matrix.coffin_row() ? w.coffin_row() : (*result.indices)[row];
        w.add(global, offset + j, value);
      }
    }
    offset += result.matrix.n_out();
  }
  pad_coffin_columns(w, natural, weight_sum(weights) / static_cast<double>(n0));
  return w;
}

std::vector<int> sort_permutation(std::span<const double> theta) {
  std::vector<int> perm(theta.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(),
                   [&](int a, int b) { return theta[a] > theta[b]; });
  return perm;
}

ResamplingMatrix build_sorted(std::span<const double> weights,
                              std::span<const double> theta, const SchemeSpec& base,
                              int n0, int n_out) {
  if (theta.size() != weights.size())
    throw ContractError("build_sorted: coordinate values must match the weights");
  const std::vector<int> perm = sort_permutation(theta);
  std::vector<double> sorted_weights(weights.size());
  for (std::size_t k = 0; k < perm.size(); ++k)
    sorted_weights[k] = weights[perm[k]];
  SchemeSpec unsorted = base;
  unsorted.coordinate.clear();
  const ResamplingMatrix m = build_matrix(unsorted, sorted_weights, {}, n0, n_out);
  return unpermute_rows(m, perm, static_cast<int>(weights.size()));
}

ResamplingMatrix build_optimal_sorted(std::span<const double> weights,
                                      std::span<const double> theta, int n0, int n_out) {
  require_positive_total(weights, "build_optimal_sorted");
  if (theta.size() != weights.size())
    throw ContractError("build_optimal_sorted: coordinate values must match the weights");
  const int n = static_cast<int>(weights.size());
  const double w_bar = weight_sum(weights) / static_cast<double>(n0);

  std::vector<double> extended_weights(weights.begin(), weights.end());
  extended_weights.push_back(w_bar);
  std::vector<double> extended_theta(theta.begin(), theta.end());
  extended_theta.push_back(0.0);

  const std::vector<int> perm = sort_permutation(extended_theta);
  std::vector<double> sorted_weights(extended_weights.size());
  for (std::size_t k = 0; k < perm.size(); ++k)
    sorted_weights[k] = extended_weights[perm[k]];

  const int natural = n0 + 1;
  const int cols = resolve_n_out(n_out, natural, "build_optimal_sorted");
  ResamplingMatrix w(n, cols);
  stratified_block(sorted_weights, natural, [&](int row, int stratum, double value) {
    const int original = perm[row];
    w.add(original == n ? w.coffin_row() : original, stratum, value);
  });
  pad_coffin_columns(w, natural, w_bar);
  return w;
}

ResamplingMatrix build_matrix(const SchemeSpec& spec, std::span<const double> weights,
                              std::span<const double> theta, int n0, int n_out) {
  if (spec.kind == SchemeKind::Adaptive)
    throw ContractError("build_matrix: adaptive specs must be resolved per step");
  if (spec.kind == SchemeKind::OptimalSorted)
    return build_optimal_sorted(weights, theta, n0, n_out);
  if (!spec.coordinate.empty()) return build_sorted(weights, theta, spec, n0, n_out);

  switch (spec.kind) {
    case SchemeKind::Sis:
      return build_sis(weights, n0, n_out);
    case SchemeKind::Multinomial:
      return build_multinomial(weights, n0, n_out);
    case SchemeKind::Bernoulli:
      return build_bernoulli(weights, n0, n_out);
    case SchemeKind::Stratified:
      return build_stratified(weights, n0, n_out);
    case SchemeKind::MultinomialResidual:
      return build_multinomial_residual(weights, n0, n_out);
    case SchemeKind::StratifiedResidual:
      return build_stratified_residual(weights, n0, n_out);
    case SchemeKind::PruningEnrichment:
      return build_pruning_enrichment(weights, spec.prune_low, spec.prune_high, n_out);
    case SchemeKind::RejectionControl:
      return build_rejection_control(weights, n0, n_out);
    case SchemeKind::Parallel: {
      const auto partition = contiguous_partition(
          static_cast<int>(weights.size()),
          std::min<int>(spec.blocks, static_cast<int>(weights.size())));
      return build_parallel(weights, partition, *spec.inner, n0, n_out);
    }
    default:
      throw ContractError("build_matrix: unhandled scheme kind");
  }
}

}  // namespace resmat
