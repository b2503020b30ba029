#pragma once

#include "neckfol/cmcsolve/jacobi.hpp"

namespace neckfol {

// Normal speed u_s of the CMC foliation through a leaf with H = (n-1)/s:
// (Delta + |A|^2 + Ric(N, N)) u = (n-1)/s^2, solved on Gamma-invariant functions.
struct LapseSolution {
  Vec u;
  double s = 0.0;
  double residual = 0.0;       // sup |J u - (n-1)/s^2|
  double deviation = 0.0;      // sup |u - 1|
  double inverse_norm = 0.0;   // ||J^{-1}|| on invariant functions, sup norm
};

// Throws NearSingular when J has no usable gap on invariant functions.
LapseSolution solve_lapse(const EmbeddedLeaf& leaf, double s, const GroupAction& group);

}  // namespace neckfol
