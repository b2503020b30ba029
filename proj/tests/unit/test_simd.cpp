// Scalar and AVX2 kernels must agree on every shape the library uses,
// including ragged tails that do not fill a vector register.
#include "doctest.h"
#include "neckfol/simd/kernels.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace simd = neckfol::simd;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

struct Csr {
  std::vector<std::int32_t> rowptr, cols;
  std::vector<double> vals;
};

Csr random_csr(std::mt19937_64& rng, std::size_t rows, std::size_t ncols, int max_row) {
  Csr c;
  c.rowptr.push_back(0);
  std::uniform_int_distribution<int> len(0, max_row);
  std::uniform_int_distribution<std::int32_t> col(0, static_cast<std::int32_t>(ncols) - 1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const int k = len(rng);
    for (int j = 0; j < k; ++j) {
      c.cols.push_back(col(rng));
      c.vals.push_back(u(rng));
    }
    c.rowptr.push_back(static_cast<std::int32_t>(c.cols.size()));
  }
  return c;
}

}  // namespace

TEST_CASE("isa selection reports a usable variant") {
  CHECK(simd::set_isa(simd::Isa::Scalar));
  CHECK(simd::active_isa() == simd::Isa::Scalar);
  if (simd::avx2::available()) CHECK(simd::set_isa(simd::Isa::Avx2));
  simd::set_isa(simd::detected_isa());
}

TEST_CASE("dot and axpy agree across variants") {
  if (!simd::avx2::available()) return;
  std::mt19937_64 rng(1);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 64u, 1001u}) {
    auto a = random_vec(rng, n), b = random_vec(rng, n);
    const double ref = simd::scalar::dot(a.data(), b.data(), n);
    CHECK(simd::avx2::dot(a.data(), b.data(), n) == doctest::Approx(ref).epsilon(1e-13));
    auto y1 = b, y2 = b;
    simd::scalar::axpy(0.37, a.data(), y1.data(), n);
    simd::avx2::axpy(0.37, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15);
  }
}

TEST_CASE("gather_dot agrees across variants") {
  if (!simd::avx2::available()) return;
  std::mt19937_64 rng(2);
  auto f = random_vec(rng, 500);
  for (std::size_t k : {1u, 5u, 8u, 13u, 70u}) {
    auto w = random_vec(rng, k);
    std::vector<std::int32_t> idx(k);
    for (std::size_t j = 0; j < k; ++j) idx[j] = static_cast<std::int32_t>((j * 37 + 11) % 500);
    const double ref = simd::scalar::gather_dot(w.data(), idx.data(), f.data(), k);
    CHECK(simd::avx2::gather_dot(w.data(), idx.data(), f.data(), k) == doctest::Approx(ref).epsilon(1e-13));
  }
}

TEST_CASE("csr products agree across variants") {
  if (!simd::avx2::available()) return;
  std::mt19937_64 rng(3);
  const std::size_t rows = 300, cols = 300;
  Csr S = random_csr(rng, rows, cols, 75);
  auto x = random_vec(rng, cols);
  std::vector<double> y1(rows), y2(rows);
  simd::scalar::csr_apply(S.rowptr.data(), S.cols.data(), S.vals.data(), x.data(), y1.data(), rows);
  simd::avx2::csr_apply(S.rowptr.data(), S.cols.data(), S.vals.data(), x.data(), y2.data(), rows);
  for (std::size_t i = 0; i < rows; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-13);
  for (std::size_t width : {1u, 3u, 4u, 16u, 17u}) {
    auto X = random_vec(rng, cols * width);
    std::vector<double> Y1(rows * width), Y2(rows * width);
    simd::scalar::csr_apply_multi(S.rowptr.data(), S.cols.data(), S.vals.data(), X.data(), Y1.data(), rows, width);
    simd::avx2::csr_apply_multi(S.rowptr.data(), S.cols.data(), S.vals.data(), X.data(), Y2.data(), rows, width);
    double worst = 0.0;
    for (std::size_t i = 0; i < rows * width; ++i) worst = std::max(worst, std::abs(Y1[i] - Y2[i]));
    CHECK(worst <= 1e-13);
  }
}

TEST_CASE("dispatching entry points follow the pinned variant") {
  std::mt19937_64 rng(4);
  auto a = random_vec(rng, 33), b = random_vec(rng, 33);
  simd::set_isa(simd::Isa::Scalar);
  const double s = simd::dot(a.data(), b.data(), 33);
  CHECK(s == simd::scalar::dot(a.data(), b.data(), 33));
  simd::set_isa(simd::detected_isa());
}
