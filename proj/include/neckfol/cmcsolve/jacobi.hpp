#pragma once

#include "neckfol/hypersurface/leaf.hpp"
#include "neckfol/spherecalc/operators.hpp"

#include <cstdint>
#include <vector>

namespace neckfol {

// J w = Delta_Sigma w + (|A|^2 + Ric(N, N)) w on a leaf. With this sign
// H(Sigma(w)) = H(Sigma) - J w + O(w^2).
//
// Delta_Sigma is split as (1/lambda) L_round + (D_h - (1/lambda) D_round), where
// lambda is the mean conformal factor of the induced metric, L_round the cloud's
// self-adjoint spectral Laplacian and D_* the strong-form stencil operators. The
// stencil parts only see the (small) non-conformal part of the metric, so the
// high modes keep the spectral operator's definite tail.
struct JacobiOperator {
  EmbeddedLeaf leaf;
  Vec second_form_norm2;
  Vec ricci_normal;
  double conformal_scale = 1.0;
  ScalarOperator lb_induced;
  ScalarOperator lb_round;

  Vec potential() const { return second_form_norm2 + ricci_normal; }
};

JacobiOperator jacobi_operator(const EmbeddedLeaf& leaf);
Vec jacobi_apply(const JacobiOperator& op, const Vec& w);
// J applied to every column of E (N x k).
Mat jacobi_apply_dense(const JacobiOperator& op, const Mat& E);

// Gamma-invariant scalar fields on a cloud closed under Gamma, parametrized by
// their values at one representative node per orbit.
class InvariantReduction {
 public:
  // Throws GroupMismatch if the cloud is not closed under g.
  InvariantReduction(const NodeCloud& cloud, const GroupAction& g);

  Eigen::Index size() const { return static_cast<Eigen::Index>(reps_.size()); }
  Eigen::Index full_size() const { return static_cast<Eigen::Index>(orbit_of_.size()); }
  // Orbit averages.
  Vec reduce(const Vec& f) const;
  // Constant extension along orbits.
  Vec extend(const Vec& r) const;
  Mat extension_matrix() const;
  // Orbit-averaged rows of a full N x k matrix: K x k.
  Mat reduce_rows(const Mat& M) const;
  // sup |f - extend(reduce(f))|.
  double invariance_defect(const Vec& f) const;

 private:
  std::vector<Eigen::Index> reps_;
  std::vector<Eigen::Index> orbit_of_;
  std::vector<double> orbit_size_;
};

}  // namespace neckfol
