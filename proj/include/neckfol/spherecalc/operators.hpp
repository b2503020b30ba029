#pragma once

#include "neckfol/spherecalc/sphere_field.hpp"

#include <Eigen/SparseCore>

#include <array>
#include <vector>

namespace neckfol {

// Frame derivatives of every column of F: out[a] = d_a F, a < m.
std::vector<Mat> frame_gradient(const NodeCloud& cloud, const Mat& F);
// Round covariant Hessians of every column, indexed by hess_index(a, b).
std::vector<Mat> frame_hessian(const NodeCloud& cloud, const Mat& F);

// A metric on the sphere in per-node frame components, with the difference
// tensor C = nabla^h - nabla^round: C[i][c](a, b) = C^c_ab.
struct FrameMetric {
  int m = 0;
  std::vector<SMat> h;
  std::vector<SMat> hinv;
  std::vector<std::array<SMat, kMaxDim>> C;
  Vec density;  // dv_h / dv_round = sqrt(det h)
  bool round = false;

  // Ambient (n x n) inverse E h^{-1} E^T at node i.
  SMat ambient_inverse(const NodeCloud& cloud, Eigen::Index i) const;
};

FrameMetric round_frame_metric(const NodeCloud& cloud);
// Throws DegenerateMetric if h is not positive definite on some tangent space.
FrameMetric frame_metric(const SphereField& h);
FrameMetric frame_metric_or_round(const NodeCloud& cloud, const SphereField* h);

using SpMat = Eigen::SparseMatrix<double>;

// True when at most 5% of E's entries are nonzero, as for orbit-extension
// matrices; dense applications then take a sparse path.
bool sparse_columns(const Mat& E);

// w -> sum_h hess(i,h) Hess_h w + sum_a grad(i,a) d_a w + zeroth(i) w, with the
// off-diagonal Hessian coefficients already doubled.
struct ScalarOperator {
  CloudPtr cloud;
  Mat hess;
  Mat grad;
  Vec zeroth;

  Vec apply(const Vec& f) const;
  Mat apply(const Mat& F) const;
  // Operator applied to the columns of E, assembled without forming N x N matrices.
  Mat apply_dense(const Mat& E) const;
};

// Laplace-Beltrami of h (round when h is null) in strong form.
ScalarOperator laplace_beltrami(CloudPtr cloud, const SphereField* h);

// Scalar Laplacian. Round metric uses the self-adjoint spectral Laplacian of the cloud.
Vec laplacian(const NodeCloud& cloud, const Vec& f, const SphereField* h = nullptr);
// df in ambient components (a tangent 1-form).
SphereField differential(const SphereField& f);
// h^{-1} df.
SphereField gradient(const SphereField& f, const SphereField* h = nullptr);
// Covariant Hessian of a scalar for h (round when null).
SphereField hessian(const SphereField& f, const SphereField* h = nullptr);

}  // namespace neckfol
