#include "neckfol/hypersurface/geodesic.hpp"

#include "neckfol/chartgeom/curvature.hpp"
#include "neckfol/core/error.hpp"

#include <boost/numeric/odeint/stepper/controlled_runge_kutta.hpp>
#include <boost/numeric/odeint/stepper/generation.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta_dopri5.hpp>

#include <array>
#include <cmath>
#include <sstream>

namespace neckfol {

namespace {

using State = std::array<double, 2 * kMaxDim>;
namespace odeint = boost::numeric::odeint;

}  // namespace

GeodesicEnd shoot_geodesic(const ChartMetric& g, const SVec& x0, const SVec& v0, double s, const GeodesicOptions& opt) {
  const int n = g.dim();
  require(x0.size() == n && v0.size() == n, ErrorCode::InvalidArgument, "geodesic data has the wrong dimension");
  GeodesicEnd out;
  out.x = x0;
  out.v = v0;
  if (s == 0.0) return out;

  // Unused trailing entries stay zero, so the error norm only sees the live state.
  State y{};
  for (int i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = x0(i);
    y[static_cast<std::size_t>(n + i)] = v0(i);
  }
  auto rhs = [&](const State& q, State& dq, double) {
    SVec x(n);
    for (int i = 0; i < n; ++i) x(i) = q[static_cast<std::size_t>(i)];
    std::array<double, kMaxDim * kMaxDim * kMaxDim> gam{};
    christoffel_at(g, x, gam.data());
    dq.fill(0.0);
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          acc += gam[static_cast<std::size_t>((k * n + i) * n + j)] * q[static_cast<std::size_t>(n + i)] *
                 q[static_cast<std::size_t>(n + j)];
      dq[static_cast<std::size_t>(k)] = q[static_cast<std::size_t>(n + k)];
      dq[static_cast<std::size_t>(n + k)] = -acc;
    }
  };

  auto stepper = odeint::make_controlled(opt.tolerance, opt.tolerance, odeint::runge_kutta_dopri5<State>());
  const double dir = s > 0 ? 1.0 : -1.0;
  double t = 0.0;
  double dt = dir * std::min(std::abs(s), 0.05);
  const double dt_floor = 1e-14 * std::max(1.0, std::abs(s));
  try {
    while (dir * (s - t) > 0.0) {
      if (dir * (t + dt - s) > 0.0) dt = s - t;
      if (stepper.try_step(rhs, y, t, dt) == odeint::success) {
        ++out.steps;
        if (dir * (s - t) < 1e-15 * std::abs(s)) t = s;
      } else {
        ++out.rejected;
      }
      if (std::abs(dt) < dt_floor || out.steps + out.rejected > opt.max_steps) {
        std::ostringstream os;
        os << "geodesic integration stalled at parameter " << t << " of " << s;
        fail(ErrorCode::StepFailure, os.str());
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DomainViolation) throw;
    std::ostringstream os;
    os << "geodesic from |x| = " << x0.norm() << " left the chart before parameter " << s;
    fail(ErrorCode::DomainViolation, os.str());
  }
  for (int i = 0; i < n; ++i) {
    out.x(i) = y[static_cast<std::size_t>(i)];
    out.v(i) = y[static_cast<std::size_t>(n + i)];
  }
  return out;
}

}  // namespace neckfol
