#include "neckfol/hypersurface/graph.hpp"

#include "neckfol/core/error.hpp"
#include "neckfol/core/parallel.hpp"

#include <cmath>
#include <sstream>

namespace neckfol {

NormalFlow normal_exponential(const EmbeddedLeaf& leaf, const Vec& s, const GeodesicOptions& opt) {
  const Eigen::Index N = leaf.size();
  const int n = leaf.n();
  require(s.size() == N, ErrorCode::InvalidArgument, "one flow parameter per node expected");
  NormalFlow out;
  out.positions.resize(N, n);
  out.velocities.resize(N, n);
  std::vector<double> defect(static_cast<std::size_t>(N), 0.0);
  const ChartMetric& g = *leaf.ambient();
  parallel_for(static_cast<std::size_t>(N), [&](std::size_t b, std::size_t e) {
    for (std::size_t iu = b; iu < e; ++iu) {
      const auto i = static_cast<Eigen::Index>(iu);
      const GeodesicEnd end = shoot_geodesic(g, leaf.position(i), leaf.normal(i), s(i), opt);
      out.positions.row(i) = end.x.transpose();
      out.velocities.row(i) = end.v.transpose();
      const double speed = std::sqrt(end.v.dot(g.eval(end.x) * end.v));
      defect[iu] = std::abs(speed - 1.0);
    }
  });
  for (double d : defect) out.speed_defect = std::max(out.speed_defect, d);
  return out;
}

NormalFlow normal_exponential(const EmbeddedLeaf& leaf, double s, const GeodesicOptions& opt) {
  return normal_exponential(leaf, Vec::Constant(leaf.size(), s), opt);
}

double collision_bound(const EmbeddedLeaf& leaf) {
  const double kappa = leaf.max_principal_curvature();
  double bound = kappa > 0.0 ? 0.5 / kappa : std::numeric_limits<double>::infinity();
  const ChartMetric& g = *leaf.ambient();
  for (Eigen::Index i = 0; i < leaf.size(); ++i) {
    const SVec x = leaf.position(i);
    const double r = x.norm();
    const double gap = std::min(r - g.r_min(), g.r_max() - r);
    Eigen::SelfAdjointEigenSolver<SMat> es(g.eval(x), Eigen::EigenvaluesOnly);
    bound = std::min(bound, gap * std::sqrt(es.eigenvalues().minCoeff()));
  }
  return bound;
}

double RadialLeaf::radius(const SVec& theta, SVec& y) const {
  for (int it = 0; it < 200; ++it) {
    const SVec p = point(y);
    const SVec step = theta - p.normalized();
    if (step.norm() < 1e-15) return p.norm();
    y = (y + step).normalized();
  }
  fail(ErrorCode::NoIntersection, "surface is not a radial graph along this ray");
}

namespace {

void check_collision(const EmbeddedLeaf& leaf, const Vec& w, const char* what) {
  const double sup = w.cwiseAbs().maxCoeff();
  const double bound = collision_bound(leaf);
  if (sup >= bound) {
    std::ostringstream os;
    os << what << ": sup |w| = " << sup << " reaches the normal collision bound " << bound;
    fail(ErrorCode::GraphCollision, os.str());
  }
}

}  // namespace

EmbeddedLeaf normal_graph(const EmbeddedLeaf& leaf, const Vec& w, const GeodesicOptions& opt) {
  check_collision(leaf, w, "normal graph");
  NormalFlow flow = normal_exponential(leaf, w, opt);
  return induced_geometry(leaf.cloud(), leaf.ambient(), std::move(flow.positions));
}

Vec normal_height(const EmbeddedLeaf& base, const Mat& target, const Vec& guess, const GeodesicOptions& opt) {
  const Eigen::Index N = base.size();
  require(target.rows() == N && guess.size() == N, ErrorCode::InvalidArgument, "target must be an embedding of the same cloud");
  const RadialLeaf surface(base.cloud(), target);
  const ChartMetric& g = *base.ambient();
  Vec out(N);
  std::vector<int> missed(static_cast<std::size_t>(N), 0);
  parallel_for(static_cast<std::size_t>(N), [&](std::size_t b, std::size_t e) {
    for (std::size_t iu = b; iu < e; ++iu) {
      const auto i = static_cast<Eigen::Index>(iu);
      const SVec x = base.position(i);
      const SVec v = base.normal(i);
      SVec y = base.cloud()->node(i);
      // Signed radial mismatch of the normal geodesic at tau.
      auto mismatch = [&](double tau) {
        const SVec p = shoot_geodesic(g, x, v, tau, opt).x;
        return p.norm() - surface.radius(p.normalized(), y);
      };
      double t0 = guess(i), t1 = guess(i) + 1e-3 * std::max(1e-3, x.norm());
      double f0 = mismatch(t0), f1 = mismatch(t1);
      bool ok = std::abs(f0) < 1e-14;
      if (ok) t1 = t0;
      for (int it = 0; it < 60 && !ok; ++it) {
        if (f1 == f0) break;
        const double t2 = t1 - f1 * (t1 - t0) / (f1 - f0);
        t0 = t1;
        f0 = f1;
        t1 = t2;
        f1 = mismatch(t1);
        ok = std::abs(f1) < 1e-14 || std::abs(t1 - t0) < 1e-14;
      }
      if (!ok || !std::isfinite(t1)) {
        missed[iu] = 1;
        continue;
      }
      out(i) = t1;
    }
  });
  for (Eigen::Index i = 0; i < N; ++i)
    if (missed[static_cast<std::size_t>(i)])
      fail(ErrorCode::NoIntersection, "normal geodesic misses the target surface at node " + std::to_string(i));
  return out;
}

Vec regraph(const EmbeddedLeaf& leaf, const Vec& w, MetricPtr other, const GeodesicOptions& opt) {
  check_collision(leaf, w, "regraph source");
  const Mat P = normal_exponential(leaf, w, opt).positions;
  const EmbeddedLeaf base = with_ambient(leaf, std::move(other));
  const Vec out = normal_height(base, P, w, opt);
  check_collision(base, out, "regraph result");
  return out;
}

}  // namespace neckfol
