#pragma once

#include "neckfol/chartgeom/chart_metric.hpp"

#include <array>

namespace neckfol {

// Conventions: R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z,
// Rm(X,Y,Z,W) = g(R(X,Y)Z, W), Ric(Y,Z) = tr(X -> R(X,Y)Z) = g^{il} Rm_{iYZl}.
// With these signs the unit sphere has Rm(X,Y,Y,X) = 1 and Ric = (n-1)g.
struct CurvatureBundle {
  int n = 0;
  SVec x;
  SMat g;
  SMat ginv;
  std::array<double, kMaxDim * kMaxDim * kMaxDim> gamma{};  // Gamma^k_ij at [(k*n + i)*n + j]
  std::array<double, kMaxDim * kMaxDim * kMaxDim * kMaxDim> rm{};
  SMat ric;
  double scalar = 0.0;
  // Curvature operator on 2-forms in an orthonormal frame, pairs (i<j) in
  // lexicographic order; equals Id on the unit sphere.
  Mat op;

  double christoffel(int k, int i, int j) const { return gamma[(k * n + i) * n + j]; }
  double riemann(int i, int j, int k, int l) const { return rm[((i * n + j) * n + k) * n + l]; }
  // |Rm|^2 with all indices raised by g.
  double rm_norm2() const;
  double ric_norm() const;
};

CurvatureBundle curvature_from_jet(const MetricJet& jet, const SVec& x);
CurvatureBundle curvature_at(const ChartMetric& metric, const SVec& x);
double curvature_operator_det(const ChartMetric& metric, const SVec& x);

// Christoffel symbols only (first-order jet), Gamma^k_ij at [(k*n + i)*n + j].
void christoffel_at(const ChartMetric& metric, const SVec& x, double* gamma);

}  // namespace neckfol
