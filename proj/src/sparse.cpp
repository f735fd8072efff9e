#include "fluxrec/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fluxrec {

SparseOperator::SparseOperator(std::int32_t rows, std::int32_t cols, std::span<const SparseEntry> entries)
    : rows_(rows), cols_(cols) {
  std::vector<SparseEntry> sorted(entries.begin(), entries.end());
  for (const SparseEntry& e : sorted) {
    if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols) {
      throw std::out_of_range("sparse entry index out of range");
    }
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const SparseEntry& a, const SparseEntry& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });

  row_ptr_.assign(static_cast<std::size_t>(rows) + 1, 0);
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < sorted.size() && sorted[j].row == sorted[i].row && sorted[j].col == sorted[i].col) sum += sorted[j++].value;
    cols_idx_.push_back(sorted[i].col);
    values_.push_back(sum);
    ++row_ptr_[static_cast<std::size_t>(sorted[i].row) + 1];
    i = j;
  }
  for (std::size_t r = 0; r < static_cast<std::size_t>(rows); ++r) row_ptr_[r + 1] += row_ptr_[r];
}

double SparseOperator::coeff(std::int32_t row, std::int32_t col) const {
  const auto begin = cols_idx_.begin() + row_ptr_[static_cast<std::size_t>(row)];
  const auto end = cols_idx_.begin() + row_ptr_[static_cast<std::size_t>(row) + 1];
  const auto it = std::lower_bound(begin, end, col);
  return (it != end && *it == col) ? values_[static_cast<std::size_t>(it - cols_idx_.begin())] : 0.0;
}

std::vector<double> SparseOperator::diagonal() const {
  std::vector<double> d(static_cast<std::size_t>(std::min(rows_, cols_)));
  for (std::int32_t i = 0; i < static_cast<std::int32_t>(d.size()); ++i) d[static_cast<std::size_t>(i)] = coeff(i, i);
  return d;
}

double SparseOperator::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double SparseOperator::max_asymmetry() const {
  if (rows_ != cols_) throw std::logic_error("max_asymmetry on a non-square operator");
  double m = 0.0;
  for (std::int32_t r = 0; r < rows_; ++r) {
    for (std::int32_t k = row_ptr_[static_cast<std::size_t>(r)]; k < row_ptr_[static_cast<std::size_t>(r) + 1]; ++k) {
      const std::int32_t c = cols_idx_[static_cast<std::size_t>(k)];
      m = std::max(m, std::abs(values_[static_cast<std::size_t>(k)] - coeff(c, r)));
    }
  }
  return m;
}

void SparseOperator::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != static_cast<std::size_t>(cols_) || y.size() != static_cast<std::size_t>(rows_)) {
    throw std::invalid_argument("sparse apply: size mismatch");
  }
  kernels::spmv(view(), x, y);
}

std::vector<double> SparseOperator::apply(std::span<const double> x) const {
  std::vector<double> y(static_cast<std::size_t>(rows_));
  apply(x, y);
  return y;
}

std::vector<double> SparseOperator::apply_transpose(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(rows_)) throw std::invalid_argument("sparse apply_transpose: size mismatch");
  std::vector<double> y(static_cast<std::size_t>(cols_), 0.0);
  for (std::int32_t r = 0; r < rows_; ++r) {
    for (std::int32_t k = row_ptr_[static_cast<std::size_t>(r)]; k < row_ptr_[static_cast<std::size_t>(r) + 1]; ++k) {
      y[static_cast<std::size_t>(cols_idx_[static_cast<std::size_t>(k)])] +=
          values_[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(r)];
    }
  }
  return y;
}

double SparseOperator::bilinear(std::span<const double> x, std::span<const double> y) const {
  const std::vector<double> ay = apply(y);
  return kernels::dot(x, ay);
}

Eigen::SparseMatrix<double> SparseOperator::to_eigen() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(values_.size());
  for (std::int32_t r = 0; r < rows_; ++r) {
    for (std::int32_t k = row_ptr_[static_cast<std::size_t>(r)]; k < row_ptr_[static_cast<std::size_t>(r) + 1]; ++k) {
      triplets.emplace_back(r, cols_idx_[static_cast<std::size_t>(k)], values_[static_cast<std::size_t>(k)]);
    }
  }
  Eigen::SparseMatrix<double> m(rows_, cols_);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

}  // namespace fluxrec
