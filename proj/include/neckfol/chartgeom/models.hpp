#pragma once

#include "neckfol/chartgeom/chart_metric.hpp"

#include <functional>

namespace neckfol {

MetricPtr flat_cone(int n, const GroupAction& group, double r_min = 1e-3, double r_max = 1e3);

// Round S^n in geodesic polar coordinates about a point:
// g = xhat xhat^T + (sin^2 r / r^2)(Id - xhat xhat^T), sectional curvature 1.
MetricPtr round_sphere_chart(int n, const GroupAction& group, double r_min = 1e-3, double r_max = 3.0);

// Eguchi-Hanson on R^4/Z2 with bolt parameter a:
// g = Id + (1/f^2 - 1) xhat xhat^T + (f^2 - 1) xi xi^T, f^2 = 1 - a^4/r^4, xi = J xhat,
// J(x1,x2,x3,x4) = (-x2, x1, -x4, x3).
MetricPtr eguchi_hanson(double a, double r_min_factor = 1.05, double r_max = 1e4);

// Metric supplied as a callback; jets by central differences (first
// derivatives with step fd_step(r), second derivatives Richardson-extrapolated).
MetricPtr user_metric(int n, const GroupAction& group, std::function<SMat(const SVec&)> g, double r_min,
                      double r_max, std::string name = "user");

// x -> phi^T g(phi x / c) phi: the chart metric of c^2 * g in coordinates
// rescaled by c and rotated by phi.
MetricPtr affine_pullback(MetricPtr base, const SMat& phi, double c);

// The complex structure used by the Eguchi-Hanson chart.
SMat complex_structure_j();

}  // namespace neckfol
