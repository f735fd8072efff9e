#pragma once

// Dense vector and CSR kernels used by the Krylov solvers.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2/FMA variant. The active table is chosen once per process from the CPU
// feature bits; FLUXREC_SIMD=scalar in the environment forces the reference
// path.

#include <cstdint>
#include <span>
#include <string_view>

namespace fluxrec::kernels {

enum class Isa { Scalar, Avx2 };

struct CsrView {
  std::span<const std::int32_t> row_ptr;
  std::span<const std::int32_t> cols;
  std::span<const double> values;
};

/// Function table for one instruction-set variant.
struct KernelTable {
  Isa isa;
  double (*dot)(std::span<const double> a, std::span<const double> b);
  // y += alpha * x
  void (*axpy)(double alpha, std::span<const double> x, std::span<double> y);
  // y = x + beta * y
  void (*xpby)(std::span<const double> x, double beta, std::span<double> y);
  // y = D^{-1} x  (diagonal solve, the Jacobi preconditioner)
  void (*diag_solve)(std::span<const double> diag, std::span<const double> x, std::span<double> y);
  // y = A x
  void (*spmv)(const CsrView& a, std::span<const double> x, std::span<double> y);
};

const KernelTable& scalar_table();
/// Null when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

/// The table selected for this process.
const KernelTable& active();
std::string_view isa_name(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) { return active().dot(a, b); }
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) { active().axpy(alpha, x, y); }
inline void xpby(std::span<const double> x, double beta, std::span<double> y) { active().xpby(x, beta, y); }
inline void diag_solve(std::span<const double> diag, std::span<const double> x, std::span<double> y) {
  active().diag_solve(diag, x, y);
}
inline void spmv(const CsrView& a, std::span<const double> x, std::span<double> y) { active().spmv(a, x, y); }

}  // namespace fluxrec::kernels
