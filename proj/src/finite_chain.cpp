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

#include "resmat/finite_chain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace resmat {

namespace {

constexpr double kStochasticTol = 1e-12;

int sample_index(const double* probs, int n, RngStream& rng) {
  const double u = rng.uniform01();
  double cum = 0.0;
  int last_positive = -1;
  for (int i = 0; i < n; ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    cum += probs[i];
    if (u < cum) return i;
  }
  if (last_positive < 0)
    throw DegenerateError("finite chain: cannot sample from a zero distribution");
  return last_positive;
}

}  // namespace

void FiniteChainModel::check() const {
  if (states < 1 || states > 16)
    throw ContractError("finite chain: states must lie in 1..16");
  if (horizon < 1) throw ContractError("finite chain: horizon must be at least 1");
  const auto n = static_cast<std::size_t>(states);
  if (init.size() != n) throw ContractError("finite chain: init size mismatch");
  if (g0.size() != n) throw ContractError("finite chain: G 0 size mismatch");
  if (f_table.size() != n * n) throw ContractError("finite chain: f size mismatch");
  if (g.size() != static_cast<std::size_t>(horizon - 1))
    throw ContractError("finite chain: need a G table for every 1 <= t < horizon");
  for (const auto& table : g)
    if (table.size() != n * n) throw ContractError("finite chain: G table size mismatch");
  if (trans.empty() ||
      (trans.size() != 1 && trans.size() != static_cast<std::size_t>(horizon)))
    throw ContractError("finite chain: need one transition matrix or one per step");

  double init_sum = 0.0;
  for (double p : init) {
    if (p < 0.0) throw ContractError("finite chain: negative initial probability");
    init_sum += p;
  }
  if (std::abs(init_sum - 1.0) > kStochasticTol)
    throw ContractError("finite chain: initial distribution does not sum to 1");
  for (const auto& matrix : trans) {
    if (matrix.size() != n * n)
      throw ContractError("finite chain: transition matrix size mismatch");
    for (int x = 0; x < states; ++x) {
      double row_sum = 0.0;
      for (int y = 0; y < states; ++y) {
        const double p = matrix[static_cast<std::size_t>(x) * n + y];
        if (p < 0.0) throw ContractError("finite chain: negative transition probability");
        row_sum += p;
      }
      if (std::abs(row_sum - 1.0) > kStochasticTol)
        throw ContractError("finite chain: transition row " + std::to_string(x) +
                            " does not sum to 1");
    }
  }
  for (double v : g0)
    if (v < 0.0) throw ContractError("finite chain: negative potential in G 0");
  for (const auto& table : g)
    for (double v : table)
      if (v < 0.0) throw ContractError("finite chain: negative potential in G table");
}

const std::vector<double>& FiniteChainModel::trans_at(int t) const {
  if (t < 1 || t > horizon) throw ContractError("finite chain: bad transition step");
  return trans.size() == 1 ? trans[0] : trans[static_cast<std::size_t>(t) - 1];
}

int FiniteChainModel::sample_initial(RngStream& rng) const {
  return sample_index(init.data(), states, rng);
}

int FiniteChainModel::sample_transition(int t, const int& from, RngStream& rng) const {
  const auto& matrix = trans_at(t);
  return sample_index(matrix.data() + static_cast<std::size_t>(from) * states, states,
                      rng);
}

double FiniteChainModel::potential(int t, const int* prev, const int& x) const {
  if (t == 0) return g0[static_cast<std::size_t>(x)];
  if (t >= horizon)
    throw ContractError("finite chain: potential queried past the horizon");
  return g_at(t, *prev, x);
}

double FiniteChainModel::test_fn(const int& prev, const int& x) const {
  return f_at(prev, x);
}

FiniteChainModel FiniteChainModel::truncated(int new_horizon) const {
  if (new_horizon < 1 || new_horizon > horizon)
    throw ContractError("finite chain: truncation horizon out of range");
  FiniteChainModel out = *this;
  out.horizon = new_horizon;
  out.g.resize(static_cast<std::size_t>(new_horizon) - 1);
  if (trans.size() != 1) out.trans.resize(static_cast<std::size_t>(new_horizon));
  return out;
}

namespace {

struct LineReader {
  std::istream& is;
  std::string line;

  bool next(std::vector<std::string>& tokens) {
    tokens.clear();
    while (std::getline(is, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream split(line);
      std::string token;
      while (split >> token) tokens.push_back(token);
      if (!tokens.empty()) return true;
    }
    return false;
  }
};

std::vector<double> parse_row(const std::vector<std::string>& tokens, std::size_t from,
                              std::size_t count, const char* what) {
  if (tokens.size() - from != count)
    throw ParseError(std::string("model file: expected ") + std::to_string(count) +
                     " values for " + what);
  std::vector<double> row;
  row.reserve(count);
  for (std::size_t i = from; i < tokens.size(); ++i) {
    try {
      std::size_t used = 0;
      row.push_back(std::stod(tokens[i], &used));
      if (used != tokens[i].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(std::string("model file: bad number `") + tokens[i] + "` in " +
                       what);
    }
  }
  return row;
}

}  // namespace

FiniteChainModel FiniteChainModel::load(std::istream& is) {
  LineReader reader{is, {}};
  std::vector<std::string> tokens;

  FiniteChainModel m;
  std::map<int, std::vector<double>> g_blocks;
  bool have_f = false;

  if (!reader.next(tokens) || tokens[0] != "states" || tokens.size() != 2)
    throw ParseError("model file: first line must be `states N`");
  try {
    m.states = std::stoi(tokens[1]);
  } catch (const std::exception&) {
    throw ParseError("model file: bad state count");
  }
  if (m.states < 1) throw ParseError("model file: state count must be positive");
  const auto n = static_cast<std::size_t>(m.states);

  auto read_matrix_rows = [&](const char* what) {
    std::vector<double> matrix;
    matrix.reserve(n * n);
    for (std::size_t row = 0; row < n; ++row) {
      if (!reader.next(tokens)) throw ParseError(std::string("model file: truncated ") + what);
      const auto values = parse_row(tokens, 0, n, what);
      matrix.insert(matrix.end(), values.begin(), values.end());
    }
    return matrix;
  };

  while (reader.next(tokens)) {
    if (tokens[0] == "init") {
      m.init = parse_row(tokens, 1, n, "init");
    } else if (tokens[0] == "trans") {
      if (tokens.size() != 1) throw ParseError("model file: `trans` takes no arguments");
      m.trans.push_back(read_matrix_rows("trans"));
    } else if (tokens[0] == "G") {
      if (tokens.size() != 2) throw ParseError("model file: expected `G t`");
      int t = 0;
      try {
        t = std::stoi(tokens[1]);
      } catch (const std::exception&) {
        throw ParseError("model file: bad G step index");
      }
      if (t < 0) throw ParseError("model file: negative G step index");
      if (g_blocks.count(t)) throw ParseError("model file: duplicate G block");
      if (t == 0) {
        if (!reader.next(tokens)) throw ParseError("model file: truncated G 0");
        g_blocks[0] = parse_row(tokens, 0, n, "G 0");
      } else {
        g_blocks[t] = read_matrix_rows("G t");
      }
    } else if (tokens[0] == "f") {
      if (have_f) throw ParseError("model file: duplicate f block");
      m.f_table = read_matrix_rows("f");
      have_f = true;
    } else {
      throw ParseError("model file: unknown directive `" + tokens[0] + "`");
    }
  }

  if (m.init.empty()) throw ParseError("model file: missing init");
  if (m.trans.empty()) throw ParseError("model file: missing trans");
  if (m.trans.size() > 1) throw ParseError("model file: only one trans block supported");
  if (!have_f) throw ParseError("model file: missing f block");
  if (!g_blocks.count(0)) throw ParseError("model file: missing G 0 block");

  const int max_t = g_blocks.rbegin()->first;
  m.horizon = max_t + 1;
  m.g0 = g_blocks[0];
  for (int t = 1; t <= max_t; ++t) {
    auto it = g_blocks.find(t);
    if (it == g_blocks.end())
      throw ParseError("model file: missing G " + std::to_string(t) + " block");
    m.g.push_back(it->second);
  }
  m.check();
  return m;
}

FiniteChainModel FiniteChainModel::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file: " + path);
  return load(in);
}

std::vector<std::vector<double>> forward_tables(const FiniteChainModel& m) {
  const auto n = static_cast<std::size_t>(m.states);
  std::vector<std::vector<double>> mu(static_cast<std::size_t>(m.horizon));
  mu[0].resize(n);
  for (std::size_t x = 0; x < n; ++x) mu[0][x] = m.init[x] * m.g0[x];
  for (int t = 1; t < m.horizon; ++t) {
    mu[t].assign(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
      if (mu[t - 1][x] == 0.0) continue;
      for (std::size_t y = 0; y < n; ++y) {
        mu[t][y] += mu[t - 1][x] *
                    m.transition(t, static_cast<int>(x), static_cast<int>(y)) *
                    m.g_at(t, static_cast<int>(x), static_cast<int>(y));
      }
    }
  }
  return mu;
}

namespace {

double contract_final(const FiniteChainModel& m, const std::vector<double>& mu_last,
                      bool square_f) {
  double result = 0.0;
  for (int x = 0; x < m.states; ++x) {
    if (mu_last[x] == 0.0) continue;
    double inner = 0.0;
    for (int y = 0; y < m.states; ++y) {
      const double fv = m.f_at(x, y);
      inner += m.transition(m.horizon, x, y) * (square_f ? fv * fv : fv);
    }
    result += mu_last[x] * inner;
  }
  return result;
}

}  // namespace

double exact_feynman_kac(const FiniteChainModel& m) {
  m.check();
  const auto mu = forward_tables(m);
  return contract_final(m, mu.back(), /*square_f=*/false);
}

double exact_normalizer(const FiniteChainModel& m) {
  const auto mu = forward_tables(m);
  double total = 0.0;
  for (double v : mu.back()) total += v;
  return total;
}

std::vector<std::vector<double>> exact_h_tables(const FiniteChainModel& m) {
  const auto n = static_cast<std::size_t>(m.states);
  std::vector<std::vector<double>> h(static_cast<std::size_t>(m.horizon));
  h[m.horizon - 1].assign(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    double sum = 0.0;
    for (std::size_t y = 0; y < n; ++y)
      sum += m.transition(m.horizon, static_cast<int>(x), static_cast<int>(y)) *
             m.f_at(static_cast<int>(x), static_cast<int>(y));
    h[m.horizon - 1][x] = sum;
  }
  for (int t = m.horizon - 2; t >= 0; --t) {
    h[t].assign(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
      double sum = 0.0;
      for (std::size_t y = 0; y < n; ++y) {
        sum += m.transition(t + 1, static_cast<int>(x), static_cast<int>(y)) *
               m.g_at(t + 1, static_cast<int>(x), static_cast<int>(y)) * h[t + 1][y];
      }
      h[t][x] = sum;
    }
  }
  return h;
}

namespace {

double fractional_part(double x) { return x - std::floor(x); }

bool near_positive_integer(double x) {
  const double rounded = std::round(x);
  return rounded >= 1.0 && std::abs(x - rounded) <= 1e-9;
}

/// min over constants c of sum_i weight_i (value_i - c)^2.
double centered_second_moment(const std::vector<double>& weight,
                              const std::vector<double>& value) {
  double mass = 0.0;
  double mean_acc = 0.0;
  double square_acc = 0.0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    mass += weight[i];
    mean_acc += weight[i] * value[i];
    square_acc += weight[i] * value[i] * value[i];
  }
  if (mass <= 0.0) return 0.0;
  return square_acc - mean_acc * mean_acc / mass;
}

/// min over functions p(theta) of sum_i weight_i (value_i - p(theta_i))^2,
/// attained by the conditional mean within each theta level set.
double level_set_second_moment(const std::vector<double>& weight,
                               const std::vector<double>& value,
                               const std::vector<double>& theta) {
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    auto& group = groups[theta[i]];
    group.first.push_back(weight[i]);
    group.second.push_back(value[i]);
  }
  double total = 0.0;
  for (const auto& [key, group] : groups)
    total += centered_second_moment(group.first, group.second);
  return total;
}

const std::vector<double>& theta_at(const std::vector<std::vector<double>>& theta,
                                    int t) {
  return theta.size() == 1 ? theta[0] : theta[static_cast<std::size_t>(t)];
}

EtaBreakdown eta_core(const FiniteChainModel& m, SchemeKind kind,
                      const std::vector<std::vector<double>>& theta, bool ratio_mode) {
  switch (kind) {
    case SchemeKind::Multinomial:
    case SchemeKind::MultinomialResidual:
    case SchemeKind::Bernoulli:
    case SchemeKind::Stratified:
    case SchemeKind::StratifiedResidual:
      break;
    default:
      throw ContractError(
          "exact eta^2: constants are defined only for multinomial, residual, "
          "Bernoulli, and stratified kinds");
  }
  const bool stratified_kind =
      kind == SchemeKind::Stratified || kind == SchemeKind::StratifiedResidual;
  const bool residual_kind =
      kind == SchemeKind::MultinomialResidual || kind == SchemeKind::StratifiedResidual;
  if (stratified_kind) {
    if (theta.empty())
      throw ContractError("exact eta^2: stratified kinds need a theta table");
    if (theta.size() != 1 && theta.size() != static_cast<std::size_t>(m.horizon))
      throw ContractError("exact eta^2: theta needs one table per step");
    for (const auto& table : theta)
      if (table.size() != static_cast<std::size_t>(m.states))
        throw ContractError("exact eta^2: theta table size mismatch");
  }

  m.check();
  const int n = m.states;
  const int T = m.horizon;
  const auto mu = forward_tables(m);
  std::vector<double> z(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    double sum = 0.0;
    for (double v : mu[t]) sum += v;
    z[t] = sum;
    if (!(sum > 0.0))
      throw DegenerateError("exact eta^2: the potential product has zero mass");
  }
  auto z_before = [&](int t) { return t == 0 ? 1.0 : z[t - 1]; };

  // Normalized potential at step t evaluated on (prev, x); step 0 ignores prev.
  auto normalized_g = [&](int t, int prev, int x) {
    if (t == 0) return m.g0[x] / z[0];
    return z[t - 1] * m.g_at(t, prev, x) / z[t];
  };

  // h tables: raw in plain mode; built from normalized potentials and the
  // centered test function in ratio mode.
  std::vector<std::vector<double>> h;
  double ratio = 0.0;
  if (!ratio_mode) {
    h = exact_h_tables(m);
  } else {
    ratio = contract_final(m, mu.back(), false) / z[T - 1];
    h.assign(static_cast<std::size_t>(T), {});
    h[T - 1].assign(static_cast<std::size_t>(n), 0.0);
    for (int x = 0; x < n; ++x) {
      double sum = 0.0;
      for (int y = 0; y < n; ++y)
        sum += m.transition(T, x, y) * (m.f_at(x, y) - ratio);
      h[T - 1][x] = sum;
    }
    for (int t = T - 2; t >= 0; --t) {
      h[t].assign(static_cast<std::size_t>(n), 0.0);
      for (int x = 0; x < n; ++x) {
        double sum = 0.0;
        for (int y = 0; y < n; ++y)
          sum += m.transition(t + 1, x, y) * normalized_g(t + 1, x, y) * h[t + 1][y];
        h[t][x] = sum;
      }
    }
  }

  // Forward measure entering each formula: raw mass in plain mode,
  // normalized in ratio mode (where every E[prod normalized G] is 1).
  auto measure = [&](int t, int x) { return ratio_mode ? mu[t][x] / z[t] : mu[t][x]; };

  EtaBreakdown out;

  // Initialization term: Var of (first potential) * h_0 under the initial law.
  {
    std::vector<double> weight(m.init.begin(), m.init.end());
    std::vector<double> value(static_cast<std::size_t>(n), 0.0);
    for (int x = 0; x < n; ++x) {
      const double g_first = ratio_mode ? normalized_g(0, 0, x) : m.g0[x];
      value[x] = g_first * h[0][x];
    }
    double mean = 0.0;
    double square = 0.0;
    for (int x = 0; x < n; ++x) {
      mean += weight[x] * value[x];
      square += weight[x] * value[x] * value[x];
    }
    out.init_term = square - mean * mean;
  }

  // Residual-scheme condition: the normalized potential must put no mass on
  // positive integers, else fractional parts misbehave in the limit.
  if (residual_kind) {
    for (int t = 0; t < T; ++t) {
      double bad_mass = 0.0;
      if (t == 0) {
        for (int x = 0; x < n; ++x)
          if (near_positive_integer(normalized_g(0, 0, x))) bad_mass += m.init[x];
      } else {
        for (int x = 0; x < n; ++x) {
          if (mu[t - 1][x] == 0.0) continue;
          for (int y = 0; y < n; ++y)
            if (near_positive_integer(normalized_g(t, x, y)))
              bad_mass += mu[t - 1][x] * m.transition(t, x, y);
        }
      }
      if (bad_mass > 0.0)
        throw ContractError(
            "exact eta^2: residual schemes need the normalized potential to be "
            "almost surely non-integer (violated at step " +
            std::to_string(t) + ")");
    }
  }

  // Per-step resampling terms.
  for (int t = 0; t < T; ++t) {
    double term = 0.0;
    if (kind == SchemeKind::Multinomial || kind == SchemeKind::Stratified) {
      std::vector<double> weight(static_cast<std::size_t>(n));
      for (int x = 0; x < n; ++x) weight[x] = measure(t, x);
      double moment = 0.0;
      if (kind == SchemeKind::Stratified) {
        moment = level_set_second_moment(weight, h[t], theta_at(theta, t));
      } else if (ratio_mode) {
        // No centering constant in ratio mode: the centered test function
        // already gives h a weighted mean of zero.
        for (int x = 0; x < n; ++x) moment += weight[x] * h[t][x] * h[t][x];
      } else {
        moment = centered_second_moment(weight, h[t]);
      }
      term = ratio_mode ? moment : z[t] * moment;
    } else {
      // Kinds driven by the fractional parts of the normalized potential:
      // build the step measure rho on the arrival state.
      std::vector<double> rho(static_cast<std::size_t>(n), 0.0);
      std::vector<double> bern(static_cast<std::size_t>(n), 0.0);
      if (t == 0) {
        for (int x = 0; x < n; ++x) {
          const double frac = fractional_part(normalized_g(0, 0, x));
          rho[x] += m.init[x] * frac;
          bern[x] += m.init[x] * frac * (1.0 - frac);
        }
      } else {
        const double scale = ratio_mode ? 1.0 / z[t - 1] : 1.0;
        for (int x = 0; x < n; ++x) {
          if (mu[t - 1][x] == 0.0) continue;
          for (int y = 0; y < n; ++y) {
            const double frac = fractional_part(normalized_g(t, x, y));
            const double base = scale * mu[t - 1][x] * m.transition(t, x, y);
            rho[y] += base * frac;
            bern[y] += base * frac * (1.0 - frac);
          }
        }
      }
      const double prefactor = ratio_mode ? 1.0 : z[t] * z[t] / z_before(t);
      if (kind == SchemeKind::Bernoulli) {
        double acc = 0.0;
        for (int x = 0; x < n; ++x) acc += bern[x] * h[t][x] * h[t][x];
        term = prefactor * acc;
      } else if (kind == SchemeKind::MultinomialResidual) {
        term = prefactor * centered_second_moment(rho, h[t]);
      } else {
        term = prefactor * level_set_second_moment(rho, h[t], theta_at(theta, t));
      }
    }
    out.resampling_terms.push_back(term);
  }

  // Per-step mutation terms: conditional variance of the next weighted h.
  for (int t = 0; t < T; ++t) {
    double accumulated = 0.0;
    for (int x = 0; x < n; ++x) {
      if (measure(t, x) == 0.0) continue;
      double mean = 0.0;
      double square = 0.0;
      for (int y = 0; y < n; ++y) {
        double value = 0.0;
        if (t + 1 < T) {
          const double g_next =
              ratio_mode ? normalized_g(t + 1, x, y) : m.g_at(t + 1, x, y);
          value = g_next * h[t + 1][y];
        } else {
          value = ratio_mode ? m.f_at(x, y) - ratio : m.f_at(x, y);
        }
        const double p = m.transition(t + 1, x, y);
        mean += p * value;
        square += p * value * value;
      }
      accumulated += measure(t, x) * (square - mean * mean);
    }
    out.mutation_terms.push_back(ratio_mode ? accumulated : z[t] * accumulated);
  }

  return out;
}

}  // namespace

EtaBreakdown exact_eta_squared(const FiniteChainModel& m, SchemeKind kind,
                               const std::vector<std::vector<double>>& theta) {
  return eta_core(m, kind, theta, /*ratio_mode=*/false);
}

EtaBreakdown exact_ratio_eta_squared(const FiniteChainModel& m, SchemeKind kind,
                                     const std::vector<std::vector<double>>& theta) {
  if (exact_normalizer(m) <= 0.0)
    throw DegenerateError("exact ratio eta^2: E[prod G] must be positive");
  return eta_core(m, kind, theta, /*ratio_mode=*/true);
}

double variance_upper_bound(const FiniteChainModel& m,
                            std::span<const double> c_constants, int n0) {
  m.check();
  if (static_cast<int>(c_constants.size()) < m.horizon)
    throw ContractError("variance_upper_bound: need C_0..C_{T-1}");
  const auto mu = forward_tables(m);
  const double second_moment = contract_final(m, mu.back(), /*square_f=*/true);

  double sup_product = 0.0;
  {
    double sup0 = 0.0;
    for (double v : m.g0) sup0 = std::max(sup0, v);
    sup_product = sup0;
    for (const auto& table : m.g) {
      double sup = 0.0;
      for (double v : table) sup = std::max(sup, v);
      sup_product *= sup;
    }
  }

  double c_sum = 0.0;
  double c_running = 1.0;
  for (int t = 0; t <= m.horizon; ++t) {
    c_sum += c_running;
    if (t < m.horizon) c_running *= c_constants[t];
  }
  return second_moment * sup_product * c_sum / static_cast<double>(n0);
}

}  // namespace resmat
