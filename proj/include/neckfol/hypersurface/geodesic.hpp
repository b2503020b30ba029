#pragma once

#include "neckfol/chartgeom/chart_metric.hpp"

namespace neckfol {

struct GeodesicOptions {
  double tolerance = 1e-10;  // local error per unit parameter length
  int max_steps = 200000;
};

struct GeodesicEnd {
  SVec x;
  SVec v;
  int steps = 0;
  int rejected = 0;
};

// gamma(s) for gamma(0) = x0, gamma'(0) = v0, by Dormand-Prince 5(4) with
// deterministic step control. s may be negative. Throws DomainViolation when the
// curve leaves the chart and StepFailure when the step size collapses.
GeodesicEnd shoot_geodesic(const ChartMetric& g, const SVec& x0, const SVec& v0, double s,
                           const GeodesicOptions& opt = {});

}  // namespace neckfol
