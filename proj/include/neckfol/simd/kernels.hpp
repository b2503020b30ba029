#pragma once

#include <cstddef>
#include <cstdint>

// Inner-loop kernels for stencil application and quadrature reductions.
// Each kernel has a scalar reference and an AVX2/FMA variant; the active
// variant is chosen once at startup from CPU capabilities and can be pinned
// with NECKFOL_SIMD=scalar|avx2.
namespace neckfol::simd {

enum class Isa { Scalar, Avx2 };

Isa detected_isa();
Isa active_isa();
// Returns false (and leaves the selection unchanged) if the CPU lacks the ISA.
bool set_isa(Isa isa);
const char* isa_name(Isa isa);

double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
// sum_k w[k] * f[idx[k]]
double gather_dot(const double* w, const std::int32_t* idx, const double* f, std::size_t k);
// y = S x for a CSR matrix S with `rows` rows.
void csr_apply(const std::int32_t* rowptr, const std::int32_t* cols, const double* vals, const double* x,
               double* y, std::size_t rows);
// Y = S X where X, Y are row-major with `width` columns.
void csr_apply_multi(const std::int32_t* rowptr, const std::int32_t* cols, const double* vals, const double* x,
                     double* y, std::size_t rows, std::size_t width);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double gather_dot(const double* w, const std::int32_t* idx, const double* f, std::size_t k);
void csr_apply(const std::int32_t* rowptr, const std::int32_t* cols, const double* vals, const double* x,
               double* y, std::size_t rows);
void csr_apply_multi(const std::int32_t* rowptr, const std::int32_t* cols, const double* vals, const double* x,
                     double* y, std::size_t rows, std::size_t width);
}  // namespace scalar

namespace avx2 {
bool available();
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double gather_dot(const double* w, const std::int32_t* idx, const double* f, std::size_t k);
void csr_apply(const std::int32_t* rowptr, const std::int32_t* cols, const double* vals, const double* x,
               double* y, std::size_t rows);
void csr_apply_multi(const std::int32_t* rowptr, const std::int32_t* cols, const double* vals, const double* x,
                     double* y, std::size_t rows, std::size_t width);
}  // namespace avx2

}  // namespace neckfol::simd
