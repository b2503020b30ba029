#pragma once

#include "neckfol/chartgeom/group_action.hpp"
#include "neckfol/chartgeom/integrals.hpp"
#include "neckfol/core/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace neckfol {

struct StencilParams {
  int mls_degree = 4;        // local polynomial degree of the moving-least-squares fit
  int neighbors = 0;         // 0: twice the number of local monomials
  double weight_width = 0.6;  // Gaussian width relative to the farthest neighbor
  int band_degree = 8;        // polynomials up to this degree are differentiated exactly
  int quadrature_degree = 12;  // weights integrate polynomials up to this degree exactly
  int repulsion_iters = 80;
};

// Sparse stencil part plus a dense band-limited correction: D f = S f + C (P f).
struct CloudOperator {
  std::vector<std::int32_t> rowptr;
  std::vector<std::int32_t> cols;
  std::vector<double> vals;
  Mat corr;  // N x M, empty when there is no band correction

  Eigen::Index rows() const { return static_cast<Eigen::Index>(rowptr.empty() ? 0 : rowptr.size() - 1); }
};

// Quasi-uniform node cloud on S^{n-1} with quadrature weights and round-metric
// differentiation operators. Derivatives are in the per-node tangent frame
// frames[i] (n x (n-1), orthonormal columns).
class NodeCloud {
 public:
  int n() const { return n_; }
  int m() const { return n_ - 1; }
  Eigen::Index size() const { return nodes_.rows(); }
  std::uint64_t seed() const { return seed_; }
  const StencilParams& params() const { return params_; }

  const Mat& nodes() const { return nodes_; }
  SVec node(Eigen::Index i) const { return nodes_.row(i).transpose(); }
  const Vec& weights() const { return weights_; }
  const SMat& frame(Eigen::Index i) const { return frames_[static_cast<std::size_t>(i)]; }
  int achieved_quadrature_degree() const { return quad_degree_; }
  double spacing() const { return spacing_; }

  // Symmetry the cloud was built to be closed under (trivial otherwise).
  const GroupAction& symmetry() const { return symmetry_; }
  // perm[g][i] = index of elements()[g] * node(i).
  const std::vector<std::vector<std::int32_t>>& permutations() const { return perm_; }
  // Permutation table for an arbitrary group, if the cloud is closed under it.
  std::optional<std::vector<std::vector<std::int32_t>>> closure_permutations(const GroupAction& g,
                                                                            double tol = 1e-10) const;

  // Indices of the stencil neighbors of node i (including i).
  std::vector<std::int32_t> neighbors(Eigen::Index i) const;

  // Number of Hessian components m(m+1)/2, index of (a,b) with a <= b.
  int hess_count() const { return m() * (m() + 1) / 2; }
  int hess_index(int a, int b) const;

  const CloudOperator& grad_op(int a) const { return grad_[static_cast<std::size_t>(a)]; }
  const CloudOperator& hess_op(int a, int b) const { return hess_[static_cast<std::size_t>(hess_index(a, b))]; }
  const CloudOperator& hess_op_at(int h) const { return hess_[static_cast<std::size_t>(h)]; }
  // Band projector P (M x N), W-orthonormal band basis B (N x M).
  const Mat& band_projector() const { return proj_; }
  const Mat& band_basis() const { return band_; }
  const Vec& band_eigenvalues() const { return band_lambda_; }
  // Band basis evaluated at arbitrary unit vectors (rows), K x M.
  Mat band_values_at(const Mat& points) const;
  // Nearest node to a unit vector.
  Eigen::Index nearest_node(const SVec& y) const;

  // Applies an operator to each column of F (N x c).
  Mat apply(const CloudOperator& op, const Mat& F) const;
  Vec apply(const CloudOperator& op, const Vec& f) const;
  Mat dense(const CloudOperator& op) const;
  // Stencil part only, without the band correction.
  Mat apply_stencil(const CloudOperator& op, const Mat& F) const;

  // Round Laplace-Beltrami, W-self-adjoint and nonpositive: Rayleigh-Ritz on the
  // band, and the first eigenvalue above the band on its W-complement. On the
  // circle it is the periodic spectral second derivative.
  Vec laplacian(const Vec& f) const;
  Mat laplacian(const Mat& F) const;
  const Mat& laplacian_dense() const;
  double tail_eigenvalue() const { return tail_eigenvalue_; }
  // max |K - K^T| of the exact band Laplacian in the W-orthonormal band basis.
  double band_asymmetry() const { return band_asymmetry_; }
  // Trace of the Hessian stencils alone, W-symmetrized (no band correction).
  Mat stencil_laplacian_dense() const;

  // Quadrature of a scalar field.
  double integrate(const Vec& f) const { return weights_.dot(f); }

  friend class CloudBuilder;

 private:
  int n_ = 0;
  std::uint64_t seed_ = 0;
  StencilParams params_;
  Mat nodes_;
  Vec weights_;
  std::vector<SMat> frames_;
  int quad_degree_ = 0;
  double spacing_ = 0.0;
  GroupAction symmetry_;
  std::vector<std::vector<std::int32_t>> perm_;
  std::vector<std::int32_t> nbr_rowptr_, nbr_cols_;
  std::vector<CloudOperator> grad_, hess_;
  CloudOperator lap_mls_sym_;  // symmetrized stencil Laplacian (dense rows)
  Mat band_, proj_;
  std::vector<std::vector<int>> band_exps_;
  Mat band_coef_;  // band_ = monomials(nodes) * band_coef_
  Vec band_lambda_;
  double tail_eigenvalue_ = 0.0;
  double band_asymmetry_ = 0.0;
  mutable std::shared_ptr<Mat> lap_dense_;
};

using CloudPtr = std::shared_ptr<const NodeCloud>;

// Builds and validates a cloud. Clouds for n = 3, 4 are closed under `symmetry`
// when given; n = 2 uses the uniform grid with spectral differentiation.
// Throws ResolutionTooLow for node_count < 200 or failed validation.
CloudPtr build_cloud(int n, int node_count, std::uint64_t seed, const std::optional<GroupAction>& symmetry = {},
                     const StencilParams& params = {});

// Same, from given node positions (used by the cache).
CloudPtr build_cloud_from_nodes(int n, const Mat& nodes, std::uint64_t seed, const GroupAction& symmetry,
                                const StencilParams& params);

// The cloud's nodes and positive weights as a quadrature on the full sphere.
SphereQuadrature cloud_quadrature(const NodeCloud& cloud);

// Integral of x^alpha over the unit sphere S^{n-1}.
double sphere_monomial_integral(const std::vector<int>& alpha);

// Harmonic degree k eigenvalue of the round Laplacian on S^m: -k(k+m-1).
inline double sphere_eigenvalue(int m, int k) { return -static_cast<double>(k) * (k + m - 1); }

// Multiplicity of degree-k harmonics on S^m.
int harmonic_multiplicity(int m, int k);

}  // namespace neckfol
