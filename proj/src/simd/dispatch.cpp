#include "neckfol/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace neckfol::simd {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  const Isa best = (cpu_has_avx2() && avx2::available()) ? Isa::Avx2 : Isa::Scalar;
  if (const char* env = std::getenv("NECKFOL_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return Isa::Scalar;
  }
  return best;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

Isa detected_isa() { return (cpu_has_avx2() && avx2::available()) ? Isa::Avx2 : Isa::Scalar; }

Isa active_isa() { return current().load(); }

bool set_isa(Isa isa) {
  if (isa == Isa::Avx2 && detected_isa() != Isa::Avx2) return false;
  current() = isa;
  return true;
}

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

double dot(const double* a, const double* b, std::size_t n) {
  return active_isa() == Isa::Avx2 ? avx2::dot(a, b, n) : scalar::dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  if (active_isa() == Isa::Avx2) avx2::axpy(alpha, x, y, n);
  else scalar::axpy(alpha, x, y, n);
}

double gather_dot(const double* w, const std::int32_t* idx, const double* f, std::size_t k) {
  return active_isa() == Isa::Avx2 ? avx2::gather_dot(w, idx, f, k) : scalar::gather_dot(w, idx, f, k);
}

void csr_apply(const std::int32_t* rowptr, const std::int32_t* cols, const double* vals, const double* x,
               double* y, std::size_t rows) {
  if (active_isa() == Isa::Avx2) avx2::csr_apply(rowptr, cols, vals, x, y, rows);
  else scalar::csr_apply(rowptr, cols, vals, x, y, rows);
}

void csr_apply_multi(const std::int32_t* rowptr, const std::int32_t* cols, const double* vals, const double* x,
                     double* y, std::size_t rows, std::size_t width) {
  if (active_isa() == Isa::Avx2) avx2::csr_apply_multi(rowptr, cols, vals, x, y, rows, width);
  else scalar::csr_apply_multi(rowptr, cols, vals, x, y, rows, width);
}

}  // namespace neckfol::simd
