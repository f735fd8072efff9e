#include "fluxrec/kernels.hpp"

#include <cstddef>

namespace fluxrec::kernels {
namespace {

double dot_scalar(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_scalar(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void xpby_scalar(std::span<const double> x, double beta, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + beta * y[i];
}

void diag_solve_scalar(std::span<const double> diag, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / diag[i];
}

void spmv_scalar(const CsrView& a, std::span<const double> x, std::span<double> y) {
  const std::size_t rows = a.row_ptr.size() - 1;
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::int32_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) sum += a.values[k] * x[a.cols[k]];
    y[r] = sum;
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::Scalar, dot_scalar, axpy_scalar, xpby_scalar, diag_solve_scalar, spmv_scalar};
  return table;
}

}  // namespace fluxrec::kernels
