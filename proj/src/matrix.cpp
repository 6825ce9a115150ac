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

#include "resmat/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace resmat {

ResamplingMatrix::ResamplingMatrix(int n_in, int n_out) : n_in_(n_in), n_out_(n_out) {
  if (n_in < 1 || n_out < 1)
    throw ContractError("ResamplingMatrix: dimensions must be positive");
  columns_.resize(static_cast<std::size_t>(n_out));
}

void ResamplingMatrix::add(int row, int col, double value) {
  if (row < 0 || row > n_in_ || col < 0 || col >= n_out_)
    throw ContractError("ResamplingMatrix::add: index out of range");
  if (value == 0.0) return;
  auto& column = columns_[col];
  auto it = std::lower_bound(column.begin(), column.end(), row,
                             [](const Entry& e, int r) { return e.first < r; });
  if (it != column.end() && it->first == row) {
    it->second += value;
  } else {
    column.insert(it, {row, value});
  }
}

double ResamplingMatrix::at(int row, int col) const {
  if (row < 0 || row > n_in_ || col < 0 || col >= n_out_)
    throw ContractError("ResamplingMatrix::at: index out of range");
  for (const auto& [r, v] : columns_[col])
    if (r == row) return v;
  return 0.0;
}

double ResamplingMatrix::column_sum(int j) const {
  double sum = 0.0;
  for (const auto& [row, value] : columns_[j]) sum += value;
  return sum;
}

std::vector<double> ResamplingMatrix::column_sums() const {
  std::vector<double> sums(static_cast<std::size_t>(n_out_));
  for (int j = 0; j < n_out_; ++j) sums[j] = column_sum(j);
  return sums;
}

std::vector<double> ResamplingMatrix::row_sums() const {
  std::vector<double> sums(static_cast<std::size_t>(n_in_), 0.0);
  for (const auto& column : columns_)
    for (const auto& [row, value] : column)
      if (row < n_in_) sums[row] += value;
  return sums;
}

double ResamplingMatrix::coffin_row_sum() const {
  double sum = 0.0;
  for (const auto& column : columns_)
    for (const auto& [row, value] : column)
      if (row == n_in_) sum += value;
  return sum;
}

ValidationReport validate(const ResamplingMatrix& w, std::span<const double> weights,
                          double rel_tol, double abs_tol) {
  if (static_cast<int>(weights.size()) != w.n_in())
    throw ContractError("validate: weight count does not match matrix rows");
  std::vector<double> sums(static_cast<std::size_t>(w.n_in()), 0.0);
  for (int j = 0; j < w.n_out(); ++j) {
    for (const auto& [row, value] : w.column(j)) {
      if (value < -abs_tol) {
        ValidationReport report;
        report.ok = false;
        report.row = row;
        report.col = j;
        std::ostringstream msg;
        msg << "negative entry " << value << " at (" << row << ", " << j << ")";
        report.message = msg.str();
        return report;
      }
      if (row < w.n_in()) sums[row] += value;
    }
  }
  for (int i = 0; i < w.n_in(); ++i) {
    const double expected = weights[i];
    const double tolerance = abs_tol + rel_tol * std::abs(expected);
    if (std::abs(sums[i] - expected) > tolerance) {
      ValidationReport report;
      report.ok = false;
      report.row = i;
      std::ostringstream msg;
      msg << "row " << i << " sums to " << sums[i] << ", expected weight " << expected;
      report.message = msg.str();
      return report;
    }
  }
  return {};
}

bool is_complete(const ResamplingMatrix& w, double w_bar, double tol) {
  const double tolerance = kAbsTol + tol * std::abs(w_bar);
  for (int j = 0; j < w.n_out(); ++j)
    if (std::abs(w.column_sum(j) - w_bar) > tolerance) return false;
  return true;
}

DiscreteColumn column_distribution(const ResamplingMatrix& w, int j) {
  if (j < 0 || j >= w.n_out())
    throw ContractError("column_distribution: column index out of range");
  const double total = w.column_sum(j);
  if (total <= 0.0)
    throw DegenerateError("column_distribution: column " + std::to_string(j) +
                          " has zero sum");
  DiscreteColumn dist;
  for (const auto& [row, value] : w.column(j)) {
    dist.rows.push_back(row);
    dist.probs.push_back(value / total);
  }
  return dist;
}

ResamplingMatrix average_columns(const ResamplingMatrix& w, std::span<const int> cols) {
  if (cols.empty()) throw ContractError("average_columns: empty column set");
  for (int j : cols)
    if (j < 0 || j >= w.n_out())
      throw ContractError("average_columns: column index out of range");

  std::vector<double> mean(static_cast<std::size_t>(w.n_in()) + 1, 0.0);
  for (int j : cols)
    for (const auto& [row, value] : w.column(j)) mean[row] += value;
  const double inv_k = 1.0 / static_cast<double>(cols.size());
  for (double& v : mean) v *= inv_k;

  std::vector<bool> averaged(static_cast<std::size_t>(w.n_out()), false);
  for (int j : cols) averaged[j] = true;

  ResamplingMatrix out(w.n_in(), w.n_out());
  for (int j = 0; j < w.n_out(); ++j) {
    if (averaged[j]) {
      for (int row = 0; row <= w.n_in(); ++row)
        if (mean[row] != 0.0) out.add(row, j, mean[row]);
    } else {
      for (const auto& [row, value] : w.column(j)) out.add(row, j, value);
    }
  }
  return out;
}

double resampling_variance(const ResamplingMatrix& w, std::span<const double> h,
                           double w_bar, int n0) {
  if (static_cast<int>(h.size()) != w.n_in() + 1)
    throw ContractError("resampling_variance: h must have n_in + 1 entries");
  if (h[w.n_in()] != 0.0)
    throw ContractError("resampling_variance: h on the coffin row must be 0");
  const double tolerance = kAbsTol + kRelTol * std::abs(w_bar);
  for (int j = 0; j < w.n_out(); ++j) {
    if (std::abs(w.column_sum(j) - w_bar) > tolerance)
      throw ContractError("resampling_variance: column " + std::to_string(j) +
                          " breaks completeness");
  }

  const std::vector<double> weights = w.row_sums();
  const double inv_n0_sq = 1.0 / (static_cast<double>(n0) * static_cast<double>(n0));
  double weighted_h_sq = 0.0;
  for (int i = 0; i < w.n_in(); ++i) weighted_h_sq += weights[i] * h[i] * h[i];
  const double first = w_bar * inv_n0_sq * weighted_h_sq;

  double gram = 0.0;
  for (int j = 0; j < w.n_out(); ++j) {
    double dot = 0.0;
    for (const auto& [row, value] : w.column(j)) dot += value * h[row];
    gram += dot * dot;
  }
  const double result = first - inv_n0_sq * gram;
  if (result < 0.0 && result > -1e-12 * std::max(first, kAbsTol)) return 0.0;
  return result;
}

double offspring_variance(const ResamplingMatrix& w, std::span<const double> h, int n0) {
  if (static_cast<int>(h.size()) != w.n_in() + 1)
    throw ContractError("offspring_variance: h must have n_in + 1 entries");
  if (h[w.n_in()] != 0.0)
    throw ContractError("offspring_variance: h on the coffin row must be 0");
  double variance = 0.0;
  for (int j = 0; j < w.n_out(); ++j) {
    const auto& col = w.column(j);
    double total = 0.0;
    for (const auto& [row, value] : col) total += value;
    if (total <= 0.0) continue;
    double mean = 0.0;
    double mean_sq = 0.0;
    for (const auto& [row, value] : col) {
      const double p = value / total;
      mean += p * h[row];
      mean_sq += p * h[row] * h[row];
    }
    const double scale = total / static_cast<double>(n0);
    const double col_var = mean_sq - mean * mean;
    variance += scale * scale * std::max(col_var, 0.0);
  }
  return variance;
}

void write_matrix(std::ostream& os, const ResamplingMatrix& w) {
  os << w.n_in() << ' ' << w.n_out() << '\n';
  char buffer[64];
  for (int j = 0; j < w.n_out(); ++j) {
    for (const auto& [row, value] : w.column(j)) {
      std::snprintf(buffer, sizeof buffer, "%.17g", value);
      os << row << ' ' << j << ' ' << buffer << '\n';
    }
  }
}

ResamplingMatrix read_matrix(std::istream& is) {
  std::string line;
  auto next_line = [&](std::string& out) {
    while (std::getline(is, out)) {
      const auto pos = out.find_first_not_of(" \t\r");
      if (pos == std::string::npos || out[pos] == '#') continue;
      return true;
    }
    return false;
  };

  if (!next_line(line)) throw ParseError("matrix file: missing header line");
  int n_in = 0;
  int n_out = 0;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> n_in >> n_out) || (header >> extra))
      throw ParseError("matrix file: header must be exactly `n_in n_out`");
  }
  if (n_in < 1 || n_out < 1) throw ParseError("matrix file: non-positive dimensions");

  ResamplingMatrix w(n_in, n_out);
  while (next_line(line)) {
    std::istringstream triplet(line);
    int row = 0;
    int col = 0;
    double value = 0.0;
    std::string extra;
    if (!(triplet >> row >> col >> value) || (triplet >> extra))
      throw ParseError("matrix file: bad triplet line: " + line);
    if (row < 0 || row > n_in || col < 0 || col >= n_out)
      throw ParseError("matrix file: triplet index out of range: " + line);
    w.add(row, col, value);
  }
  return w;
}

ResamplingMatrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open matrix file: " + path);
  return read_matrix(in);
}

}  // namespace resmat
