#include "fluxrec/kernels.hpp"

#include <cstddef>

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define FLUXREC_HAVE_AVX2_KERNELS 1
#include <immintrin.h>
#else
#define FLUXREC_HAVE_AVX2_KERNELS 0
#endif

namespace fluxrec::kernels {

#if FLUXREC_HAVE_AVX2_KERNELS
namespace {

#define FLUXREC_AVX2 __attribute__((target("avx2,fma")))

FLUXREC_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

FLUXREC_AVX2 double dot_avx2(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const double* pa = a.data();
  const double* pb = b.data();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + i), _mm256_loadu_pd(pb + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + i + 4), _mm256_loadu_pd(pb + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + i), _mm256_loadu_pd(pb + i), acc0);
    i += 4;
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += pa[i] * pb[i];
  return sum;
}

FLUXREC_AVX2 void axpy_avx2(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y.data() + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(y.data() + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

FLUXREC_AVX2 void xpby_avx2(std::span<const double> x, double beta, std::span<double> y) {
  const std::size_t n = x.size();
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y.data() + i, _mm256_fmadd_pd(vb, _mm256_loadu_pd(y.data() + i), _mm256_loadu_pd(x.data() + i)));
  }
  for (; i < n; ++i) y[i] = x[i] + beta * y[i];
}

FLUXREC_AVX2 void diag_solve_avx2(std::span<const double> diag, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y.data() + i, _mm256_div_pd(_mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(diag.data() + i)));
  }
  for (; i < n; ++i) y[i] = x[i] / diag[i];
}

// Row-wise gather SpMV. P1 stiffness rows hold about seven entries, so each
// row is processed in chunks of four with a scalar tail.
FLUXREC_AVX2 void spmv_avx2(const CsrView& a, std::span<const double> x, std::span<double> y) {
  const std::size_t rows = a.row_ptr.size() - 1;
  const double* vals = a.values.data();
  const std::int32_t* cols = a.cols.data();
  const double* px = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::int32_t k = a.row_ptr[r];
    const std::int32_t end = a.row_ptr[r + 1];
    __m256d acc = _mm256_setzero_pd();
    for (; k + 4 <= end; k += 4) {
      const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(cols + k));
      const __m256d xv = _mm256_i32gather_pd(px, idx, 8);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(vals + k), xv, acc);
    }
    double sum = hsum(acc);
    for (; k < end; ++k) sum += vals[k] * px[cols[k]];
    y[r] = sum;
  }
}

#undef FLUXREC_AVX2

}  // namespace

const KernelTable* avx2_table() {
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  static const KernelTable table{Isa::Avx2, dot_avx2, axpy_avx2, xpby_avx2, diag_solve_avx2, spmv_avx2};
  return supported ? &table : nullptr;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

}  // namespace fluxrec::kernels
