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

#ifndef RESMAT_MATRIX_HPP
#define RESMAT_MATRIX_HPP

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "resmat/error.hpp"
#include "resmat/particle.hpp"
#include "resmat/rng.hpp"

namespace resmat {

/// Default validation tolerances. Builders are exact up to rounding, so the
/// gates are tight; loosening them would mask builder bugs.
inline constexpr double kRelTol = 1e-12;
inline constexpr double kAbsTol = 1e-15;

/// Nonnegative resampling matrix with n_in + 1 rows and n_out columns. Row
/// index n_in is the coffin row. Row sums of the real rows equal the current
/// weights; column sums are the offspring weights; each offspring slot is
/// drawn independently from its column's normalized distribution.
///
/// Storage is column-compressed: per column, a row-sorted vector of
/// (row, value) pairs. Scheme matrices are structurally sparse (diagonal,
/// staircase, block), and every operation here walks columns.
class ResamplingMatrix {
 public:
  using Entry = std::pair<int, double>;

  ResamplingMatrix(int n_in, int n_out);

  int n_in() const { return n_in_; }
  int n_out() const { return n_out_; }
  int coffin_row() const { return n_in_; }

  /// Adds `value` at (row, col) during construction. Zero values are not
  /// stored. Accumulates if the entry already exists.
  void add(int row, int col, double value);

  double at(int row, int col) const;
  const std::vector<Entry>& column(int j) const { return columns_[j]; }

  double column_sum(int j) const;
  std::vector<double> column_sums() const;
  /// Sums of the real rows (index < n_in); these are the input weights of a
  /// valid matrix.
  std::vector<double> row_sums() const;
  double coffin_row_sum() const;

 private:
  int n_in_;
  int n_out_;
  std::vector<std::vector<Entry>> columns_;
};

/// Outcome of validate(). On failure, names the first offending entry or row.
struct ValidationReport {
  bool ok = true;
  std::string message;
  int row = -1;
  int col = -1;
};

/// Checks nonnegativity of every entry and that each real row sums to the
/// matching weight within abs_tol + rel_tol * |weight|.
ValidationReport validate(const ResamplingMatrix& w, std::span<const double> weights,
                          double rel_tol = kRelTol, double abs_tol = kAbsTol);

/// True iff every column sum equals w_bar within tol (relative to w_bar).
bool is_complete(const ResamplingMatrix& w, double w_bar, double tol = kRelTol);

/// One column viewed as a discrete distribution over input rows plus the
/// coffin. Throws DegenerateError on a zero column (samplers skip such
/// columns instead and emit a weight-0 coffin).
struct DiscreteColumn {
  std::vector<int> rows;      // row index; == n_in means coffin
  std::vector<double> probs;  // entries divided by the column sum
};
DiscreteColumn column_distribution(const ResamplingMatrix& w, int j);

/// Replaces every column in `cols` by the arithmetic mean of those columns.
/// Row sums are unchanged; the total of the listed column sums is preserved.
ResamplingMatrix average_columns(const ResamplingMatrix& w, std::span<const int> cols);

/// Resampling variance injected by one step into the running estimate, as a
/// quadratic function of the matrix:
///
///   (w_bar / n0^2) * sum_i w_i h_i^2  -  (1 / n0^2) * ||W^T h||^2
///
/// `h` has length n_in + 1 with h[coffin] == 0. Requires a complete matrix
/// (every column sum equal to w_bar); throws ContractError naming the first
/// offending column otherwise. Tiny negative results from rounding (above
/// -1e-12 relative to the first term) are clamped to 0.
double resampling_variance(const ResamplingMatrix& w, std::span<const double> h,
                           double w_bar, int n0);

/// Exact conditional variance of (1/n0) * sum_j colsum_j * h(offspring_j) for
/// an arbitrary (not necessarily complete) matrix, summed per column by
/// independence. Coincides with resampling_variance on complete matrices.
double offspring_variance(const ResamplingMatrix& w, std::span<const double> h, int n0);

/// Plain-text sparse triplet serialization: a header line `n_in n_out`
/// followed by `row col value` lines. Lines starting with '#' are comments.
void write_matrix(std::ostream& os, const ResamplingMatrix& w);
ResamplingMatrix read_matrix(std::istream& is);
ResamplingMatrix read_matrix_file(const std::string& path);

/// Draws the offspring ensemble: one independent draw per column, in column
/// index order, from a single rng stream. A column selecting the coffin row
/// yields a coffin particle that keeps the column-sum weight (the weight dies
/// at the next reweight). Zero-sum columns consume no draw and emit a
/// weight-0 coffin. Validates against the ensemble weights first.
template <class S>
WeightedEnsemble<S> sample_offspring(const ResamplingMatrix& w,
                                     const WeightedEnsemble<S>& ens, RngStream& rng) {
  const ValidationReport report = validate(w, ens.weights);
  if (!report.ok) throw ContractError("sample_offspring: " + report.message);

  WeightedEnsemble<S> out;
  out.t = ens.t;
  out.n0 = ens.n0;
  out.particles.reserve(w.n_out());
  out.weights.reserve(w.n_out());
  for (int j = 0; j < w.n_out(); ++j) {
    const auto& col = w.column(j);
    double total = 0.0;
    for (const auto& [row, value] : col) total += value;
    if (total <= 0.0) {
      out.particles.push_back(ParticleState<S>::coffin());
      out.weights.push_back(0.0);
      continue;
    }
    const double target = rng.uniform01() * total;
    double cum = 0.0;
    int row = w.coffin_row();
    for (const auto& [r, value] : col) {
      cum += value;
      if (target < cum) {
        row = r;
        break;
      }
    }
    // target == total can slip through rounding; the last entry wins.
    if (row == w.coffin_row() && !col.empty() && col.back().first != w.coffin_row())
      row = col.back().first;
    if (row == w.coffin_row()) {
      out.particles.push_back(ParticleState<S>::coffin());
    } else {
      out.particles.push_back(ens.particles[row]);
    }
    out.weights.push_back(total);
  }
  return out;
}

}  // namespace resmat

#endif
