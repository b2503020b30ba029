#pragma once

#include "neckfol/core/types.hpp"

#include <vector>

namespace neckfol::detail {

inline int ipow(int b, int e) {
  int r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// out = A applied to slot `slot` of a rank-k tensor with n^k flat entries.
inline void apply_slot(const SMat& A, int n, int rank, int slot, const double* in, double* out) {
  const int stride = ipow(n, rank - 1 - slot);
  const int total = ipow(n, rank);
  for (int c = 0; c < total; ++c) {
    const int idx = (c / stride) % n;
    const int base = c - idx * stride;
    double v = 0.0;
    for (int q = 0; q < n; ++q) v += A(idx, q) * in[base + q * stride];
    out[c] = v;
  }
}

// A applied to every slot, in place.
inline void apply_all_slots(const SMat& A, int n, int rank, double* data, std::vector<double>& scratch) {
  const int total = ipow(n, rank);
  scratch.resize(static_cast<std::size_t>(total));
  for (int s = 0; s < rank; ++s) {
    apply_slot(A, n, rank, s, data, scratch.data());
    std::copy(scratch.begin(), scratch.end(), data);
  }
}

}  // namespace neckfol::detail
