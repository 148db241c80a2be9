#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fibergof/checked.hpp"
#include "fibergof/errors.hpp"
#include "fibergof/graph_tables.hpp"

namespace fibergof {

/// Nonzero entry of a sparse row or column.
struct MatrixEntry {
  std::size_t index;
  std::int64_t value;
};

/// Integer design matrix A with labeled rows (sufficient statistics) and
/// labeled columns (cells). Entries are nonnegative and no column is zero.
/// Immutable; row- and column-sparse views are built once.
class DesignMatrix {
 public:
  DesignMatrix(std::size_t rows, std::size_t cols, std::vector<std::int64_t> entries,
               std::vector<std::string> row_labels = {}, std::vector<std::string> col_labels = {})
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (rows == 0 || cols == 0) throw InvalidInput("design matrix must be nonempty");
    if (entries_.size() != rows * cols) throw DimensionMismatch("entry count does not match shape");
    if (row_labels.empty())
      for (std::size_t r = 0; r < rows; ++r) row_labels.push_back("row" + std::to_string(r + 1));
    if (col_labels.empty())
      for (std::size_t c = 0; c < cols; ++c) col_labels.push_back("col" + std::to_string(c + 1));
    if (row_labels.size() != rows || col_labels.size() != cols)
      throw DimensionMismatch("label count does not match shape");
    row_labels_ = std::make_shared<const std::vector<std::string>>(std::move(row_labels));
    col_labels_ = std::make_shared<const std::vector<std::string>>(std::move(col_labels));

    sparse_rows_.resize(rows);
    sparse_cols_.resize(cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const auto v = entries_[r * cols + c];
        if (v < 0) throw InvalidInput("design matrix entries must be nonnegative");
        if (v == 0) continue;
        sparse_rows_[r].push_back({c, v});
        sparse_cols_[c].push_back({r, v});
      }
    for (std::size_t c = 0; c < cols; ++c)
      if (sparse_cols_[c].empty()) throw InvalidInput("design matrix column " + std::to_string(c + 1) + " is zero");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::int64_t operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }

  std::span<const MatrixEntry> row(std::size_t r) const { return sparse_rows_[r]; }
  std::span<const MatrixEntry> column(std::size_t c) const { return sparse_cols_[c]; }

  const std::vector<std::string>& row_labels() const { return *row_labels_; }
  const std::vector<std::string>& col_labels() const { return *col_labels_; }
  std::shared_ptr<const std::vector<std::string>> shared_row_labels() const { return row_labels_; }

  std::int64_t max_in_row(std::size_t r) const {
    std::int64_t m = 0;
    for (const auto& e : sparse_rows_[r]) m = std::max(m, e.value);
    return m;
  }

  std::int64_t max_column_sum() const {
    std::int64_t m = 0;
    for (const auto& col : sparse_cols_) {
      std::int64_t s = 0;
      for (const auto& e : col) s += e.value;
      m = std::max(m, s);
    }
    return m;
  }

  friend bool operator==(const DesignMatrix& a, const DesignMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.entries_ == b.entries_;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::int64_t> entries_;
  std::shared_ptr<const std::vector<std::string>> row_labels_;
  std::shared_ptr<const std::vector<std::string>> col_labels_;
  std::vector<std::vector<MatrixEntry>> sparse_rows_;
  std::vector<std::vector<MatrixEntry>> sparse_cols_;
};

/// Sufficient statistics Au, labeled by the rows of A.
struct StatVector {
  std::vector<std::int64_t> values;
  std::shared_ptr<const std::vector<std::string>> labels;

  std::size_t size() const { return values.size(); }
  std::int64_t operator[](std::size_t r) const { return values[r]; }

  /// Value of the row with the given label; throws if absent.
  std::int64_t at(const std::string& label) const {
    for (std::size_t r = 0; r < values.size(); ++r)
      if ((*labels)[r] == label) return values[r];
    throw InvalidInput("no statistic labeled '" + label + "'");
  }

  friend bool operator==(const StatVector& a, const StatVector& b) { return a.values == b.values; }
};

/// Exact A*u with overflow checks.
inline std::vector<std::int64_t> matrix_vector(const DesignMatrix& a, std::span<const std::int64_t> u) {
  if (u.size() != a.cols()) throw DimensionMismatch("vector length does not match design matrix columns");
  std::vector<std::int64_t> out(a.rows(), 0);
  for (std::size_t c = 0; c < a.cols(); ++c) {
    if (u[c] == 0) continue;
    for (const auto& e : a.column(c)) out[e.index] = checked_add(out[e.index], checked_mul(e.value, u[c]));
  }
  return out;
}

inline StatVector sufficient_statistics(const DesignMatrix& a, const DyadTable& t) {
  return {matrix_vector(a, t.cells()), a.shared_row_labels()};
}

}  // namespace fibergof
