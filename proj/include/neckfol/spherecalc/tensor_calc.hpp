#pragma once

#include "neckfol/spherecalc/operators.hpp"

#include <cstdint>

namespace neckfol {

// Levi-Civita covariant derivative of a tangent tensor field for h (round when
// null). The derivative slot comes first: (nabla T)(X, Y1..Yk) = (nabla_X T)(Y1..Yk).
SphereField covariant_derivative(const SphereField& T, const SphereField* h = nullptr);

// (d u)(X, Y, .) = (nabla_X u)(Y, .) - (nabla_Y u)(X, .) for a 2-tensor u viewed as a
// T*-valued 1-form.
SphereField exterior_covariant(const SphereField& u, const SphereField* h = nullptr);

// Formal adjoint of the above, minus the h-trace of nabla over its first two slots:
// rank 2 -> rank 1 and rank 3 -> rank 2.
SphereField codifferential(const SphereField& T, const SphereField* h = nullptr);

// L^2(h) inner product with all slots contracted by h^{-1}. For T*-valued
// 2-forms (rank 3, antisymmetric in the first two slots) use form_inner_product,
// which carries the 1/2 of the 2-form pairing.
double inner_product(const SphereField& a, const SphereField& b, const SphereField* h = nullptr);
double form_inner_product(const SphereField& a, const SphereField& b, const SphereField* h = nullptr);

// Rough Laplacian nabla^* nabla for the round metric.
SphereField rough_laplacian(const SphereField& T);

// Trace for h (round when null) of a 2-tensor, as a scalar field.
SphereField trace(const SphereField& u, const SphereField* h = nullptr);
// u - (tr_h u / m) h.
SphereField traceless_part(const SphereField& u, const SphereField* h = nullptr);

// The two computations of (delta d + d delta) h on the round sphere:
// first-order operators composed, and nabla^* nabla h + m h - tr(h) g.
struct LichnerowiczPair {
  SphereField composed;
  SphereField weitzenbock;
};
LichnerowiczPair lichnerowicz_apply(const SphereField& h);

// Compares the two routes as bilinear forms on a random subspace of band-limited
// symmetric 2-tensors: relative operator-norm difference of the Gram matrices.
struct LichnerowiczAgreement {
  double relative_difference = 0.0;
  double operator_norm = 0.0;
  int dimension = 0;
};
LichnerowiczAgreement lichnerowicz_agreement(CloudPtr cloud, int dimension, std::uint64_t seed, int max_degree = 4);

// Smallest Rayleigh quotient of nabla^* nabla + m on traceless symmetric 2-tensors
// (round metric): Rayleigh-Ritz on a Krylov space started from band-limited fields.
double traceless_rayleigh_min(CloudPtr cloud, int krylov_dim, std::uint64_t seed);

// Ricci tensor and scalar curvature of a metric g on the sphere.
SphereField ricci_tensor(const SphereField& g);
SphereField scalar_curvature(const SphereField& g);

struct GaugeResidual {
  SphereField E;
  // sup over nodes of the round-frame operator norm of Ric(g) - (m-1) g.
  double ricci_deficit = 0.0;
  double sup_norm = 0.0;
};
// E = Ric(g) - (R/2) g + lambda g + delta*_g delta_{g0} g, lambda = (m-1)(m-2)/2.
GaugeResidual gauge_residual(const SphereField& g, const SphereField* g0 = nullptr);

}  // namespace neckfol
