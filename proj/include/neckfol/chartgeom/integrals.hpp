#pragma once

#include "neckfol/chartgeom/chart_metric.hpp"

namespace neckfol {

// Sphere quadrature over the full S^{n-1}: unit-vector rows and weights.
struct SphereQuadrature {
  Mat nodes;
  Vec weights;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

// Supported radial Gauss-Legendre orders.
bool radial_order_supported(int nodes);

// int_{A(rho1,rho2)} |Rm|^2 dv over the quotient chart. The error estimate is the
// difference to the half-order radial rule.
QuadratureResult curvature_energy(const ChartMetric& metric, double rho1, double rho2, const SphereQuadrature& quad,
                                  int radial_nodes = 64);

// Riemannian volume of {r_a <= |x| <= r_b} over the quotient chart.
QuadratureResult annulus_volume(const ChartMetric& metric, double r_a, double r_b, const SphereQuadrature& quad,
                                int radial_nodes = 64);

struct VolumeRatio {
  double vol_in = 0.0;
  double vol_out = 0.0;
  double ratio = 0.0;
  double deviation = 0.0;  // ratio - (rho_out/rho_in)^n
};

// Ball volumes use the metric's closed-form core below r_min plus quadrature.
VolumeRatio volume_ratio(const ChartMetric& metric, double rho_in, double rho_out, const SphereQuadrature& quad,
                         int radial_nodes = 64);

}  // namespace neckfol
