#include "neckfol/simd/kernels.hpp"

namespace neckfol::simd::scalar {

// Four interleaved partial sums, combined pairwise, so the summation order
// matches the vector variant lane for lane.
double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  double s = (s0 + s2) + (s1 + s3);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double gather_dot(const double* w, const std::int32_t* idx, const double* f, std::size_t k) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= k; i += 4) {
    s0 += w[i] * f[idx[i]];
    s1 += w[i + 1] * f[idx[i + 1]];
    s2 += w[i + 2] * f[idx[i + 2]];
    s3 += w[i + 3] * f[idx[i + 3]];
  }
  double s = (s0 + s2) + (s1 + s3);
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
  for (std::size_t r = 0; r < rows; ++r) {
    double* yr = y + r * width;
    for (std::size_t c = 0; c < width; ++c) yr[c] = 0.0;
    for (auto p = rowptr[r]; p < rowptr[r + 1]; ++p) {
      const double v = vals[p];
      const double* xr = x + static_cast<std::size_t>(cols[p]) * width;
      for (std::size_t c = 0; c < width; ++c) yr[c] += v * xr[c];
    }
  }
}

}  // namespace neckfol::simd::scalar
