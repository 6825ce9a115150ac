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

#include <doctest.h>

#include <fstream>
#include <sstream>
#include <vector>

#include "resmat/matrix.hpp"
#include "resmat/schemes.hpp"
#include "test_support.hpp"

using namespace resmat;
using testsupport::dense_matrix;
using testsupport::figure_weights;
using testsupport::make_ensemble;

namespace {

ResamplingMatrix figure_multinomial_n4() {
  return dense_matrix({{.8, .8, .8, .8},
                       {.6, .6, .6, .6},
                       {.2, .2, .2, .2},
                       {.4, .4, .4, .4},
                       {0, 0, 0, 0}});
}

ResamplingMatrix figure_stratified_n4() {
  return dense_matrix({{2, 1.2, 0, 0},
                       {0, .8, 1.6, 0},
                       {0, 0, .4, .4},
                       {0, 0, 0, 1.6},
                       {0, 0, 0, 0}});
}

ResamplingMatrix figure_rejection_n5() {
  return dense_matrix({{3.2, 0, 0, 0, 0},
                       {0, 2.4, 0, 0, 0},
                       {0, 0, .8, 0, 0},
                       {0, 0, 0, 1.6, 0},
                       {0, 0, 1.2, .4, 2}});
}

/// Exhaustive joint-outcome variance of (1/n0) sum_j colsum_j h(pick_j); the
/// independent oracle for the quadratic form. Columns are independent, so
/// every combination of per-column picks is enumerated with its probability.
double enumeration_variance(const ResamplingMatrix& w, const std::vector<double>& h,
                            int n0) {
  std::vector<std::vector<std::pair<double, double>>> outcomes;  // (prob, value)
  for (int j = 0; j < w.n_out(); ++j) {
    const double total = w.column_sum(j);
    std::vector<std::pair<double, double>> column;
    if (total <= 0.0) {
      column.push_back({1.0, 0.0});
    } else {
      for (const auto& [row, value] : w.column(j))
        column.push_back({value / total, total / n0 * h[row]});
    }
    outcomes.push_back(std::move(column));
  }
  double mean = 0.0;
  double second = 0.0;
  std::vector<std::size_t> pick(outcomes.size(), 0);
  while (true) {
    double prob = 1.0;
    double statistic = 0.0;
    for (std::size_t j = 0; j < outcomes.size(); ++j) {
      prob *= outcomes[j][pick[j]].first;
      statistic += outcomes[j][pick[j]].second;
    }
    mean += prob * statistic;
    second += prob * statistic * statistic;
    std::size_t j = 0;
    for (; j < outcomes.size(); ++j) {
      if (++pick[j] < outcomes[j].size()) break;
      pick[j] = 0;
    }
    if (j == outcomes.size()) break;
  }
  return second - mean * mean;
}

}  // namespace

TEST_CASE("validate accepts the multinomial figure matrix") {
  const auto w = dense_matrix({{.8, .8, .8, .8, 0, 0},
                               {.6, .6, .6, .6, 0, 0},
                               {.2, .2, .2, .2, 0, 0},
                               {.4, .4, .4, .4, 0, 0},
                               {0, 0, 0, 0, 2, 2}});
  const auto weights = figure_weights();
  CHECK(validate(w, weights).ok);
}

TEST_CASE("validate flags a negated entry with its position") {
  auto w = figure_multinomial_n4();
  w.add(2, 1, -2 * w.at(2, 1));  // flips the sign
  const auto report = validate(w, figure_weights());
  CHECK_FALSE(report.ok);
  CHECK(report.row == 2);
  CHECK(report.col == 1);
  CHECK(report.message.find("negative") != std::string::npos);
}

TEST_CASE("validate flags the first row-sum mismatch") {
  const std::vector<double> wrong = {3.2, 2.4, .8, 1.7};
  const auto report = validate(figure_multinomial_n4(), wrong);
  CHECK_FALSE(report.ok);
  CHECK(report.row == 3);
  CHECK(report.message.find("row 3") != std::string::npos);
}

TEST_CASE("column distributions normalize the column") {
  const auto stratified = figure_stratified_n4();
  const auto dist = column_distribution(stratified, 1);
  REQUIRE(dist.rows.size() == 2);
  CHECK(dist.rows[0] == 0);
  CHECK(dist.probs[0] == doctest::Approx(.6));
  CHECK(dist.rows[1] == 1);
  CHECK(dist.probs[1] == doctest::Approx(.4));

  const auto point = column_distribution(stratified, 0);
  REQUIRE(point.rows.size() == 1);
  CHECK(point.probs[0] == doctest::Approx(1.0));

  const auto rejection = figure_rejection_n5();
  const auto mixed = column_distribution(rejection, 2);
  REQUIRE(mixed.rows.size() == 2);
  CHECK(mixed.rows[0] == 2);
  CHECK(mixed.probs[0] == doctest::Approx(.4));
  CHECK(mixed.rows[1] == 4);  // coffin row
  CHECK(mixed.probs[1] == doctest::Approx(.6));
}

TEST_CASE("zero columns cannot be queried as distributions") {
  ResamplingMatrix w(2, 2);
  w.add(0, 0, 1.0);
  w.add(1, 0, 1.0);
  CHECK_THROWS_AS(column_distribution(w, 1), DegenerateError);
}

TEST_CASE("SIS sampling reproduces the input plus coffin padding") {
  const auto w = dense_matrix({{3.2, 0, 0, 0, 0, 0},
                               {0, 2.4, 0, 0, 0, 0},
                               {0, 0, .8, 0, 0, 0},
                               {0, 0, 0, 1.6, 0, 0},
                               {0, 0, 0, 0, 2, 2}});
  auto ens = make_ensemble(figure_weights(), 4);
  RngStream rng(5);
  const auto out = sample_offspring(w, ens, rng);
  REQUIRE(out.size() == 6);
  for (int i = 0; i < 4; ++i) {
    CHECK(out.particles[i] == ens.particles[i]);
    CHECK(out.weights[i] == ens.weights[i]);
  }
  CHECK(out.particles[4].is_coffin());
  CHECK(out.particles[5].is_coffin());
  CHECK(out.weights[4] == 2.0);
  CHECK(out.weights[5] == 2.0);
}

TEST_CASE("a point-mass column copies its particle with the column sum") {
  ResamplingMatrix w(2, 1);
  w.add(1, 0, 1.7);
  auto ens = make_ensemble({0.0, 1.7}, 2);
  RngStream rng(9);
  const auto out = sample_offspring(w, ens, rng);
  CHECK(out.particles[0] == ens.particles[1]);
  CHECK(out.weights[0] == doctest::Approx(1.7));
}

TEST_CASE("multinomial sampling frequencies match the weights") {
  const auto w = figure_multinomial_n4();
  auto ens = make_ensemble(figure_weights(), 4);
  RngStream rng(31337);
  std::vector<long> counts(4, 0);
  const int runs = 25000;  // 4 columns each: 1e5 total draws
  for (int r = 0; r < runs; ++r) {
    const auto out = sample_offspring(w, ens, rng);
    for (const auto& particle : out.particles) ++counts[particle.value()];
  }
  const std::vector<double> expected = {.4, .3, .1, .2};
  const double draws = 4.0 * runs;
  for (int i = 0; i < 4; ++i) {
    const double phat = counts[i] / draws;
    const double sigma = std::sqrt(expected[i] * (1 - expected[i]) / draws);
    CHECK(std::abs(phat - expected[i]) < 3 * sigma);
  }
}

TEST_CASE("resampling variance matches the per-column oracle on the figure") {
  // Oracle: each column is an independent two-point draw of (w_bar/n0) h.
  // Multinomial: 4 columns, picks particle 0 w.p. .4 -> 4 * .25 * .4 * .6.
  // Stratified: only column 1 is random -> .25 * .24.
  const std::vector<double> h = {1, 0, 0, 0, 0};
  const double multinomial_oracle = 4 * .25 * (.4 - .16);
  const double stratified_oracle = .25 * (.6 - .36);
  CHECK(multinomial_oracle == doctest::Approx(0.24));
  CHECK(stratified_oracle == doctest::Approx(0.06));

  CHECK(resampling_variance(figure_multinomial_n4(), h, 2.0, 4) ==
        doctest::Approx(0.24).epsilon(1e-12));
  CHECK(resampling_variance(figure_stratified_n4(), h, 2.0, 4) ==
        doctest::Approx(0.06).epsilon(1e-12));
}

TEST_CASE("deterministic matrices have zero resampling variance") {
  const auto diag = dense_matrix({{2, 0}, {0, 2}, {0, 0}});
  const std::vector<double> h = {1.5, -0.5, 0};
  CHECK(resampling_variance(diag, h, 2.0, 2) == doctest::Approx(0.0));
}

TEST_CASE("complete schemes have zero variance for constant h on equal weights") {
  const std::vector<double> weights = {1.5, 1.5, 1.5, 1.5};
  const std::vector<double> h = {2.5, 2.5, 2.5, 2.5, 0};
  for (const auto& w :
       {build_multinomial(weights, 4), build_stratified(weights, 4),
        build_bernoulli(weights, 4), build_multinomial_residual(weights, 4)}) {
    CHECK(resampling_variance(w, h, 1.5, 4) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("resampling variance requires completeness and a zero coffin entry") {
  const std::vector<double> h = {1, 0, 0, 0, 0};
  CHECK_THROWS_AS(resampling_variance(figure_rejection_n5(), h, 2.0, 4),
                  ContractError);
  std::vector<double> bad_h = {1, 0, 0, 0, 0.5};
  CHECK_THROWS_AS(resampling_variance(figure_multinomial_n4(), bad_h, 2.0, 4),
                  ContractError);
}

TEST_CASE("averaging all stratified columns yields the multinomial matrix") {
  const std::vector<int> all = {0, 1, 2, 3};
  const auto averaged = average_columns(figure_stratified_n4(), all);
  CHECK(testsupport::max_entry_gap(averaged, figure_multinomial_n4()) < 1e-12);
}

TEST_CASE("averaging a single column changes nothing") {
  const std::vector<int> one = {2};
  const auto averaged = average_columns(figure_stratified_n4(), one);
  CHECK(testsupport::max_entry_gap(averaged, figure_stratified_n4()) == 0.0);
}

TEST_CASE("averaging the residual block links the residual figures") {
  const auto strat_residual = dense_matrix({{2, 0, 1.2, 0},
                                            {0, 2, .4, 0},
                                            {0, 0, .4, .4},
                                            {0, 0, 0, 1.6},
                                            {0, 0, 0, 0}});
  const auto mult_residual = dense_matrix({{2, 0, .6, .6},
                                           {0, 2, .2, .2},
                                           {0, 0, .4, .4},
                                           {0, 0, .8, .8},
                                           {0, 0, 0, 0}});
  const std::vector<int> residual_block = {2, 3};
  const auto averaged = average_columns(strat_residual, residual_block);
  CHECK(testsupport::max_entry_gap(averaged, mult_residual) < 1e-12);
}

TEST_CASE("is_complete checks every column sum against w_bar") {
  const auto bernoulli = dense_matrix({{2, 1.2, 0, 0, 0, 0},
                                       {0, 0, 2, .4, 0, 0},
                                       {0, 0, 0, 0, .8, 0},
                                       {0, 0, 0, 0, 0, 1.6},
                                       {0, .8, 0, 1.6, 1.2, .4}});
  CHECK(is_complete(bernoulli, 2.0));
  CHECK_FALSE(is_complete(figure_rejection_n5(), 2.0));

  // A zero padding column breaks completeness unless it carries w_bar of
  // coffin mass.
  ResamplingMatrix padded(2, 3);
  padded.add(0, 0, 1.0);
  padded.add(1, 1, 1.0);
  CHECK_FALSE(is_complete(padded, 1.0));
  padded.add(padded.coffin_row(), 2, 1.0);
  CHECK(is_complete(padded, 1.0));
}

TEST_CASE("resampling variance is invariant under particle relabeling") {
  RngStream rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform01() * 6);
    const auto weights = testsupport::random_weights(rng, n, 2.0);
    const auto w = build_multinomial(weights, n);
    std::vector<double> h(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 0; i < n; ++i) h[i] = 2.0 * rng.uniform01() - 1.0;
    const double w_bar = [&] {
      double sum = 0.0;
      for (double v : weights) sum += v;
      return sum / n;
    }();
    const double base = resampling_variance(w, h, w_bar, n);

    // Random permutation applied to rows and h together.
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[static_cast<int>(rng.uniform01() * (i + 1))]);
    ResamplingMatrix permuted(n, w.n_out());
    for (int j = 0; j < w.n_out(); ++j)
      for (const auto& [row, value] : w.column(j))
        permuted.add(row == w.coffin_row() ? permuted.coffin_row() : perm[row], j, value);
    std::vector<double> permuted_h(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 0; i < n; ++i) permuted_h[perm[i]] = h[i];

    const double relabeled = resampling_variance(permuted, permuted_h, w_bar, n);
    CHECK(relabeled == doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("column averaging never decreases resampling variance") {
  RngStream rng(4242);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform01() * 5);
    const auto weights = testsupport::random_weights(rng, n, 1.5);
    const auto w = trial % 2 == 0 ? build_stratified(weights, n)
                                  : build_bernoulli(weights, n);
    std::vector<double> h(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 0; i < n; ++i) h[i] = 2.0 * rng.uniform01() - 1.0;
    double sum = 0.0;
    for (double v : weights) sum += v;
    const double w_bar = sum / n;

    std::vector<int> cols;
    for (int j = 0; j < w.n_out(); ++j)
      if (rng.uniform01() < 0.5) cols.push_back(j);
    if (cols.empty()) cols.push_back(0);

    const double before = resampling_variance(w, h, w_bar, n);
    const double after = resampling_variance(average_columns(w, cols), h, w_bar, n);
    CHECK(after >= before - 1e-12 * std::max(1.0, before));
  }
}

TEST_CASE("the quadratic form agrees with exhaustive outcome enumeration") {
  RngStream rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform01() * 4);  // n_in <= 4
    const auto weights = testsupport::random_weights(rng, n, 1.0);
    const ResamplingMatrix w = [&] {
      switch (trial % 3) {
        case 0:
          return build_multinomial(weights, n);
        case 1:
          return build_stratified(weights, n);
        default:
          return build_bernoulli(weights, n);
      }
    }();
    if (w.n_out() > 4) continue;  // keep the joint enumeration tiny
    std::vector<double> h(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 0; i < n; ++i) h[i] = 2.0 * rng.uniform01() - 1.0;
    double sum = 0.0;
    double weighted_h_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      sum += weights[i];
      weighted_h_sq += weights[i] * h[i] * h[i];
    }
    const double w_bar = sum / n;
    const double quadratic = resampling_variance(w, h, w_bar, n);
    const double enumerated = enumeration_variance(w, h, n);
    // 1e-10 relative, with an absolute floor at the rounding noise of the
    // quadratic form's leading term (relevant when the variance is exactly 0).
    const double noise_floor = 1e-13 * w_bar * weighted_h_sq / (n * n);
    CHECK(std::abs(quadratic - enumerated) <=
          1e-10 * std::max(std::abs(enumerated), std::abs(quadratic)) + noise_floor);
  }
}

TEST_CASE("complete schemes produce n0 non-coffin offspring in expectation") {
  RngStream rng(58);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform01() * 8);
    const auto weights = testsupport::random_weights(rng, n, 2.0);
    const auto w = trial % 2 == 0 ? build_bernoulli(weights, n)
                                  : build_stratified(weights, n);
    double sum = 0.0;
    for (double v : weights) sum += v;
    const double w_bar = sum / n;
    double expected_count = 0.0;
    double count_variance = 0.0;
    for (int j = 0; j < w.n_out(); ++j) {
      double coffin_mass = 0.0;
      for (const auto& [row, value] : w.column(j))
        if (row == w.coffin_row()) coffin_mass += value;
      const double q = coffin_mass / w_bar;
      expected_count += 1.0 - q;
      count_variance += q * (1.0 - q);
    }
    CHECK(expected_count == doctest::Approx(n).epsilon(1e-9));
    CHECK(count_variance <= n + 1e-9);
  }
}

TEST_CASE("triplet files round-trip and reject malformed input") {
  const auto original = figure_stratified_n4();
  std::stringstream buffer;
  write_matrix(buffer, original);
  const auto reread = read_matrix(buffer);
  CHECK(testsupport::max_entry_gap(original, reread) == 0.0);

  std::ifstream golden_file(testsupport::repo_path("models/figures/stratified_n4.mat"));
  REQUIRE(golden_file.good());
  const auto from_repo = read_matrix(golden_file);
  CHECK(testsupport::max_entry_gap(original, from_repo) < 1e-15);

  std::istringstream bad_header("4\n0 0 1\n");
  CHECK_THROWS_AS(read_matrix(bad_header), ParseError);
  std::istringstream bad_triplet("1 1\n0 0 one\n");
  CHECK_THROWS_AS(read_matrix(bad_triplet), ParseError);
  std::istringstream out_of_range("1 1\n5 0 1\n");
  CHECK_THROWS_AS(read_matrix(out_of_range), ParseError);
}
