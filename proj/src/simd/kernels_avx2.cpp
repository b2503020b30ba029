#include "neckfol/simd/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define NECKFOL_HAVE_AVX2 1
#endif

namespace neckfol::simd::avx2 {

#ifdef NECKFOL_HAVE_AVX2

namespace {
inline double hsum(__m256d v) {
  // lanes (0,1,2,3) -> (0+2) + (1+3), the scalar reference order
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}
}  // namespace

bool available() { return true; }

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d al = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(al, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double gather_dot(const double* w, const std::int32_t* idx, const double* f, std::size_t k) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= k; i += 4) {
    const __m128i ix = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + i));
    const __m256d fv = _mm256_i32gather_pd(f, ix, 8);
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), fv, acc);
  }
  double s = hsum(acc);
  for (; i < k; ++i) s += w[i] * f[idx[i]];
  return s;
}

void csr_apply(const std::int32_t* rowptr, const std::int32_t* cols, const double* vals, const double* x,
               double* y, std::size_t rows) {
  for (std::size_t r = 0; r < rows; ++r) {
    const auto b = rowptr[r];
    y[r] = gather_dot(vals + b, cols + b, x, static_cast<std::size_t>(rowptr[r + 1] - b));
  }
}

void csr_apply_multi(const std::int32_t* rowptr, const std::int32_t* cols, const double* vals, const double* x,
                     double* y, std::size_t rows, std::size_t width) {
  const std::size_t wv = width & ~std::size_t{3};
  for (std::size_t r = 0; r < rows; ++r) {
    double* yr = y + r * width;
    for (std::size_t c = 0; c < width; ++c) yr[c] = 0.0;
    for (auto p = rowptr[r]; p < rowptr[r + 1]; ++p) {
      const __m256d v = _mm256_set1_pd(vals[p]);
      const double* xr = x + static_cast<std::size_t>(cols[p]) * width;
      std::size_t c = 0;
      for (; c < wv; c += 4) _mm256_storeu_pd(yr + c, _mm256_fmadd_pd(v, _mm256_loadu_pd(xr + c), _mm256_loadu_pd(yr + c)));
      for (; c < width; ++c) yr[c] += vals[p] * xr[c];
    }
  }
}

#else

bool available() { return false; }
double dot(const double* a, const double* b, std::size_t n) { return scalar::dot(a, b, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { scalar::axpy(alpha, x, y, n); }
double gather_dot(const double* w, const std::int32_t* idx, const double* f, std::size_t k) {
  return scalar::gather_dot(w, idx, f, k);
}
void csr_apply(const std::int32_t* rowptr, const std::int32_t* cols, const double* vals, const double* x,
               double* y, std::size_t rows) {
  scalar::csr_apply(rowptr, cols, vals, x, y, rows);
}
void csr_apply_multi(const std::int32_t* rowptr, const std::int32_t* cols, const double* vals, const double* x,
                     double* y, std::size_t rows, std::size_t width) {
  scalar::csr_apply_multi(rowptr, cols, vals, x, y, rows, width);
}

#endif

}  // namespace neckfol::simd::avx2
