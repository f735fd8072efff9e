#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "fluxrec/kernels.hpp"

namespace fluxrec {

struct SparseEntry {
  std::int32_t row;
  std::int32_t col;
  double value;
};

/// Compressed-row matrix assembled from coordinate entries; duplicates are
/// summed and explicit zeros kept so the pattern is assembly-determined.
class SparseOperator {
 public:
  SparseOperator() = default;
  SparseOperator(std::int32_t rows, std::int32_t cols, std::span<const SparseEntry> entries);

  std::int32_t rows() const { return rows_; }
  std::int32_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  double coeff(std::int32_t row, std::int32_t col) const;
  std::vector<double> diagonal() const;
  double max_abs() const;
  /// max |A - A^T| over all entries; requires a square operator.
  double max_asymmetry() const;

  void apply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> apply_transpose(std::span<const double> x) const;
  double bilinear(std::span<const double> x, std::span<const double> y) const;

  kernels::CsrView view() const { return {row_ptr_, cols_idx_, values_}; }
  Eigen::SparseMatrix<double> to_eigen() const;

  const std::vector<std::int32_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::int32_t>& col_index() const { return cols_idx_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::int32_t rows_ = 0;
  std::int32_t cols_ = 0;
  std::vector<std::int32_t> row_ptr_{0};
  std::vector<std::int32_t> cols_idx_;
  std::vector<double> values_;
};

}  // namespace fluxrec
