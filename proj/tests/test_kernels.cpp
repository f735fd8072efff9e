#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fluxrec/kernels.hpp"

using namespace fluxrec::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

struct RandomCsr {
  std::vector<std::int32_t> row_ptr{0};
  std::vector<std::int32_t> cols;
  std::vector<double> values;
  CsrView view() const { return {row_ptr, cols, values}; }
};

RandomCsr random_csr(int rows, int cols, std::mt19937_64& rng) {
  RandomCsr a;
  std::uniform_int_distribution<int> per_row(0, 9);
  std::uniform_int_distribution<int> col(0, cols - 1);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  for (int r = 0; r < rows; ++r) {
    const int k = per_row(rng);
    for (int j = 0; j < k; ++j) {
      a.cols.push_back(col(rng));
      a.values.push_back(val(rng));
    }
    a.row_ptr.push_back(static_cast<std::int32_t>(a.cols.size()));
  }
  return a;
}

}  // namespace

TEST_CASE("scalar kernels on small inputs") {
  const KernelTable& k = scalar_table();
  std::vector<double> a{1, 2, 3}, b{4, 5, 6}, y{1, 1, 1};
  CHECK(k.dot(a, b) == 32.0);
  k.axpy(2.0, a, y);
  CHECK(y == std::vector<double>{3, 5, 7});
  k.xpby(a, 0.5, y);
  CHECK(y == std::vector<double>{2.5, 4.5, 6.5});
  std::vector<double> d{2, 4, 8}, out(3);
  k.diag_solve(d, a, out);
  CHECK(out == std::vector<double>{0.5, 0.5, 0.375});

  // [[1 2 0] [0 0 3]] * [1 1 1]
  std::vector<std::int32_t> rp{0, 2, 3}, ci{0, 1, 2};
  std::vector<double> vals{1, 2, 3}, x{1, 1, 1}, ax(2);
  k.spmv({rp, ci, vals}, x, ax);
  CHECK(ax == std::vector<double>{3, 3});
}

TEST_CASE("active table is one of the known variants") {
  const KernelTable& k = active();
  CHECK((k.isa == Isa::Scalar || k.isa == Isa::Avx2));
  CHECK(!isa_name(k.isa).empty());
}

TEST_CASE("AVX2 kernels match the scalar reference") {
  const KernelTable* simd = avx2_table();
  if (simd == nullptr) {
    MESSAGE("AVX2 unavailable; equivalence test skipped");
    return;
  }
  const KernelTable& ref = scalar_table();
  std::mt19937_64 rng(42);
  // Lengths straddle the 4-wide and 8-wide unrolled bodies and their tails.
  for (std::size_t n : {0, 1, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 1001}) {
    CAPTURE(n);
    const auto a = random_vector(n, rng);
    const auto b = random_vector(n, rng);
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) abs_sum += std::abs(a[i] * b[i]);
    CHECK(std::abs(simd->dot(a, b) - ref.dot(a, b)) <= 1e-14 * (abs_sum + 1.0));

    auto y1 = random_vector(n, rng);
    auto y2 = y1;
    ref.axpy(0.37, a, y1);
    simd->axpy(0.37, a, y2);
    for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-15));

    ref.xpby(a, -1.3, y1);
    simd->xpby(a, -1.3, y2);
    for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-15));

    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = 1.0 + std::abs(b[i]);
    std::vector<double> o1(n), o2(n);
    ref.diag_solve(d, a, o1);
    simd->diag_solve(d, a, o2);
    CHECK(o1 == o2);
  }

  for (int rows : {1, 3, 17, 200}) {
    CAPTURE(rows);
    const int cols = rows + 5;
    const RandomCsr m = random_csr(rows, cols, rng);
    const auto x = random_vector(static_cast<std::size_t>(cols), rng);
    std::vector<double> y1(static_cast<std::size_t>(rows)), y2(static_cast<std::size_t>(rows));
    ref.spmv(m.view(), x, y1);
    simd->spmv(m.view(), x, y2);
    for (int r = 0; r < rows; ++r) {
      double bound = 0.0;
      for (int k = m.row_ptr[static_cast<std::size_t>(r)]; k < m.row_ptr[static_cast<std::size_t>(r) + 1]; ++k) {
        bound += std::abs(m.values[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(m.cols[static_cast<std::size_t>(k)])]);
      }
      CHECK(std::abs(y1[static_cast<std::size_t>(r)] - y2[static_cast<std::size_t>(r)]) <= 1e-14 * (bound + 1.0));
    }
  }
}
