#pragma once

#include "neckfol/spherecalc/sphere_field.hpp"

#include <vector>

namespace neckfol {

// Eigenpairs of the cloud's round Laplacian through harmonic degree L, ordered
// by ascending |lambda|. Within a degree cluster the vectors are rotated to be
// invariant or anti-invariant under the group, invariant ones first, with a
// deterministic sign (largest-magnitude entry positive, lowest index on ties).
struct SpectralBasis {
  CloudPtr cloud;
  int degree = 0;
  GroupAction group;
  Vec eigenvalues;
  Mat vectors;
  std::vector<bool> invariant;
  std::vector<int> harmonic_degree;

  Eigen::Index count() const { return eigenvalues.size(); }
  // max |Phi^T W Phi - I|.
  double gram_deviation() const;
};

SpectralBasis build_spectral_basis(CloudPtr cloud, int degree, const GroupAction& group);

struct HelmholtzSolution {
  Vec u;
  double inverse_norm = 0.0;        // 1 / min |lambda + shift| over the modes used
  double residual = 0.0;            // |(L + shift) u - projected rhs| / |rhs|
  double truncation_residual = 0.0;  // |rhs - projected rhs| / |rhs|
  Eigen::Index modes_used = 0;
};

// Solves (Laplacian + shift) u = rhs on the invariant subspace (or the whole band).
// Throws NearSingular when some used mode has |lambda + shift| < singular_tol.
HelmholtzSolution invert_helmholtz(const SpectralBasis& basis, const Vec& rhs, double shift, bool invariant_only = true,
                                   double singular_tol = 1e-3);

// Group-invariant projection of a scalar field, f -> average of f o g^{-1}.
Vec gamma_project(const NodeCloud& cloud, const Vec& f, const GroupAction& g);

// Full discrete spectrum of the cloud's self-adjoint Laplacian (dense), ascending |lambda|.
Vec dense_spectrum(const NodeCloud& cloud);
// Spectrum of the W-symmetrized stencil Laplacian alone (diagnostic).
Vec stencil_spectrum(const NodeCloud& cloud);

}  // namespace neckfol
