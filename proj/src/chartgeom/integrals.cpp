#include "neckfol/chartgeom/integrals.hpp"
#include "neckfol/chartgeom/curvature.hpp"
#include "neckfol/core/error.hpp"
#include "neckfol/core/parallel.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <functional>
#include <vector>

namespace neckfol {

namespace {

template <unsigned N>
double gauss_rule(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss<double, N>::integrate(f, a, b);
}

double gauss(int nodes, const std::function<double(double)>& f, double a, double b) {
  switch (nodes) {
    case 8: return gauss_rule<8>(f, a, b);
    case 16: return gauss_rule<16>(f, a, b);
    case 32: return gauss_rule<32>(f, a, b);
    case 64: return gauss_rule<64>(f, a, b);
    case 128: return gauss_rule<128>(f, a, b);
    default: fail(ErrorCode::InvalidArgument, "radial quadrature order must be one of 8, 16, 32, 64, 128");
  }
}

// Integral over the sphere of radius r of density(x) * sqrt(det g), divided by |G|.
double shell(const ChartMetric& metric, double r, const SphereQuadrature& quad,
             const std::function<double(const MetricJet&, const SVec&)>& density, int order) {
  const int n = metric.dim();
  const Eigen::Index N = quad.nodes.rows();
  std::vector<double> vals(static_cast<std::size_t>(N));
  parallel_for(static_cast<std::size_t>(N), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const SVec x = r * quad.nodes.row(static_cast<Eigen::Index>(i)).transpose();
      const MetricJet J = metric.jet(x, order);
      vals[i] = density(J, x) * std::sqrt(J.g.determinant());
    }
  });
  double s = 0;
  for (Eigen::Index i = 0; i < N; ++i) s += quad.weights[i] * vals[static_cast<std::size_t>(i)];
  return s * std::pow(r, n - 1) / metric.group().order();
}

QuadratureResult radial_integral(const ChartMetric& metric, double a, double b, const SphereQuadrature& quad,
                                 int radial_nodes, const std::function<double(const MetricJet&, const SVec&)>& density,
                                 int order) {
  require(quad.nodes.cols() == metric.dim(), ErrorCode::InvalidArgument, "sphere quadrature dimension mismatch");
  require(metric.inside(SVec::Unit(metric.dim(), 0) * a) && metric.inside(SVec::Unit(metric.dim(), 0) * b),
          ErrorCode::DomainViolation, "annulus not inside the chart domain");
  auto f = [&](double r) { return shell(metric, r, quad, density, order); };
  QuadratureResult res;
  res.value = gauss(radial_nodes, f, a, b);
  const int coarse = radial_nodes >= 16 ? radial_nodes / 2 : radial_nodes;
  res.error_estimate = coarse == radial_nodes ? 0.0 : std::abs(res.value - gauss(coarse, f, a, b));
  return res;
}

}  // namespace

bool radial_order_supported(int nodes) {
  return nodes == 8 || nodes == 16 || nodes == 32 || nodes == 64 || nodes == 128;
}

QuadratureResult curvature_energy(const ChartMetric& metric, double rho1, double rho2, const SphereQuadrature& quad,
                                  int radial_nodes) {
  require(rho1 < rho2, ErrorCode::InvalidArgument, "annulus must satisfy rho1 < rho2");
  return radial_integral(
      metric, rho1, rho2, quad, radial_nodes,
      [](const MetricJet& J, const SVec& x) { return curvature_from_jet(J, x).rm_norm2(); }, 2);
}

QuadratureResult annulus_volume(const ChartMetric& metric, double r_a, double r_b, const SphereQuadrature& quad,
                                int radial_nodes) {
  if (r_a == r_b) return {};
  return radial_integral(
      metric, r_a, r_b, quad, radial_nodes, [](const MetricJet&, const SVec&) { return 1.0; }, 0);
}

VolumeRatio volume_ratio(const ChartMetric& metric, double rho_in, double rho_out, const SphereQuadrature& quad,
                         int radial_nodes) {
  require(rho_in > 0 && rho_out >= rho_in, ErrorCode::InvalidArgument, "need 0 < rho_in <= rho_out");
  require(rho_in >= metric.r_min() && rho_out <= metric.r_max(), ErrorCode::DomainViolation,
          "balls reach outside the chart");
  const auto core = metric.core_volume(metric.r_min());
  require(core.has_value(), ErrorCode::DomainViolation, "no closed-form core volume for " + metric.describe());
  VolumeRatio v;
  v.vol_in = *core + annulus_volume(metric, metric.r_min(), rho_in, quad, radial_nodes).value;
  v.vol_out = v.vol_in + annulus_volume(metric, rho_in, rho_out, quad, radial_nodes).value;
  v.ratio = v.vol_out / v.vol_in;
  v.deviation = v.ratio - std::pow(rho_out / rho_in, metric.dim());
  return v;
}

}  // namespace neckfol
