#include "neckfol/foliation/riccati.hpp"

#include "neckfol/chartgeom/curvature.hpp"
#include "neckfol/core/error.hpp"
#include "neckfol/core/parallel.hpp"

#include <boost/numeric/odeint/stepper/controlled_runge_kutta.hpp>
#include <boost/numeric/odeint/stepper/generation.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta_dopri5.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace neckfol {

namespace {

namespace odeint = boost::numeric::odeint;

// x (n), v (n), frame (n*m, column-major), S (m*m).
constexpr std::size_t kStateSize = 2 * kMaxDim + kMaxDim * (kMaxDim - 1) + (kMaxDim - 1) * (kMaxDim - 1);
using State = std::array<double, kStateSize>;

struct Layout {
  int n, m;
  std::size_t x() const { return 0; }
  std::size_t v() const { return static_cast<std::size_t>(n); }
  std::size_t e(int k, int a) const { return static_cast<std::size_t>(2 * n + a * n + k); }
  std::size_t s(int a, int b) const { return static_cast<std::size_t>(2 * n + n * m + a * m + b); }
};

SVec get_x(const State& q, const Layout& L) {
  SVec x(L.n);
  for (int k = 0; k < L.n; ++k) x(k) = q[L.x() + static_cast<std::size_t>(k)];
  return x;
}

// Gram-Schmidt of the columns of E in g, after removing their v component.
SMat orthonormalize(const SMat& E, const SMat& g, const SVec& v) {
  SMat out = E;
  for (int a = 0; a < E.cols(); ++a) {
    SVec c = out.col(a);
    c -= v * (v.dot(g * c));
    for (int b = 0; b < a; ++b) c -= out.col(b) * (out.col(b).dot(g * c));
    out.col(a) = c / std::sqrt(c.dot(g * c));
  }
  return out;
}

struct NodeTrack {
  SVec x, v;
  SMat E, S;
};

// Flows one node to every offset in `targets` (same sign, increasing magnitude).
void flow_node(const ChartMetric& g, NodeTrack st, const std::vector<double>& targets, const RiccatiOptions& opt,
               std::vector<NodeTrack>& out) {
  const int n = g.dim(), m = n - 1;
  const Layout L{n, m};
  State y{};
  auto pack = [&](const NodeTrack& t) {
    y.fill(0.0);
    for (int k = 0; k < n; ++k) {
      y[L.x() + static_cast<std::size_t>(k)] = t.x(k);
      y[L.v() + static_cast<std::size_t>(k)] = t.v(k);
      for (int a = 0; a < m; ++a) y[L.e(k, a)] = t.E(k, a);
    }
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) y[L.s(a, b)] = t.S(a, b);
  };
  auto unpack = [&]() {
    NodeTrack t{SVec(n), SVec(n), SMat(n, m), SMat(m, m)};
    for (int k = 0; k < n; ++k) {
      t.x(k) = y[L.x() + static_cast<std::size_t>(k)];
      t.v(k) = y[L.v() + static_cast<std::size_t>(k)];
      for (int a = 0; a < m; ++a) t.E(k, a) = y[L.e(k, a)];
    }
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) t.S(a, b) = y[L.s(a, b)];
    return t;
  };
  auto rhs = [&](const State& q, State& dq, double) {
    const CurvatureBundle B = curvature_at(g, get_x(q, L));
    dq.fill(0.0);
    auto vel = [&](int i) { return q[L.v() + static_cast<std::size_t>(i)]; };
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) acc += B.christoffel(k, i, j) * vel(i) * vel(j);
      dq[L.x() + static_cast<std::size_t>(k)] = vel(k);
      dq[L.v() + static_cast<std::size_t>(k)] = -acc;
      for (int a = 0; a < m; ++a) {
        double de = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) de += B.christoffel(k, i, j) * vel(i) * q[L.e(j, a)];
        dq[L.e(k, a)] = -de;
      }
    }
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        double s2 = 0.0;
        for (int c = 0; c < m; ++c) s2 += q[L.s(a, c)] * q[L.s(c, b)];
        double r = 0.0;
        for (int p = 0; p < n; ++p)
          for (int qq = 0; qq < n; ++qq)
            for (int u = 0; u < n; ++u)
              for (int w = 0; w < n; ++w) r += B.riemann(p, qq, u, w) * q[L.e(p, a)] * vel(qq) * vel(u) * q[L.e(w, b)];
        dq[L.s(a, b)] = -(s2 + r);
      }
  };

  pack(st);
  auto stepper = odeint::make_controlled(opt.geodesic.tolerance, opt.geodesic.tolerance, odeint::runge_kutta_dopri5<State>());
  double t = 0.0;
  int steps = 0;
  for (double target : targets) {
    const double dir = target >= t ? 1.0 : -1.0;
    double dt = dir * std::min(std::abs(target - t), 0.02 * std::max(1e-3, st.x.norm()));
    while (dir * (target - t) > 0.0) {
      if (dir * (t + dt - target) > 0.0) dt = target - t;
      if (stepper.try_step(rhs, y, t, dt) == odeint::success) {
        if (dir * (target - t) < 1e-15 * std::max(1.0, std::abs(target))) t = target;
        NodeTrack cur = unpack();
        const SMat gx = g.eval(cur.x);
        cur.E = orthonormalize(cur.E, gx, cur.v);
        cur.S = 0.5 * (cur.S + cur.S.transpose());
        if (cur.S.cwiseAbs().maxCoeff() > 1.0 / opt.focal_floor) {
          std::ostringstream os;
          os << "shape operator blows up at arc parameter " << t << " (|x| = " << cur.x.norm() << ")";
          fail(ErrorCode::FocalPoint, os.str());
        }
        pack(cur);
        stepper.reset();
      }
      if (std::abs(dt) < 1e-14 * std::max(1.0, std::abs(target)) || ++steps > opt.geodesic.max_steps) {
        std::ostringstream os;
        os << "Riccati integration stalled at arc parameter " << t;
        fail(ErrorCode::StepFailure, os.str());
      }
    }
    out.push_back(unpack());
  }
}

}  // namespace

std::vector<EquidistantLeaf> equidistant_evolve(const EmbeddedLeaf& start, const std::vector<double>& offsets,
                                                const RiccatiOptions& opt) {
  const ChartMetric& g = *start.ambient();
  const int n = start.n();
  const Eigen::Index N = start.size();
  std::vector<double> neg, pos;
  for (double o : offsets) (o < 0 ? neg : pos).push_back(o);
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end(), std::greater<double>());

  // tracks[i][k]: node i at the k-th offset of neg then pos.
  std::vector<std::vector<NodeTrack>> tracks(static_cast<std::size_t>(N));
  parallel_for(static_cast<std::size_t>(N), [&](std::size_t b, std::size_t e) {
    for (std::size_t iu = b; iu < e; ++iu) {
      const auto i = static_cast<Eigen::Index>(iu);
      const SMat T = start.tangents(i);
      const SMat gx = g.eval(start.position(i));
      // Orthonormal tangent frame E = T C, so S = C^T A C in it.
      const SMat E = orthonormalize(T, gx, SVec::Zero(n));
      const SMat C = T.colPivHouseholderQr().solve(E);
      NodeTrack st{start.position(i), start.normal(i), E, C.transpose() * start.second_form_frame(i) * C};
      try {
        if (!neg.empty()) flow_node(g, st, neg, opt, tracks[iu]);
        if (!pos.empty()) flow_node(g, st, pos, opt, tracks[iu]);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::DomainViolation) throw;
        std::ostringstream os;
        os << "equidistant flow from node " << i << " left the chart: " << err.what();
        fail(ErrorCode::DomainViolation, os.str());
      }
    }
  });

  std::vector<double> order = neg;
  order.insert(order.end(), pos.begin(), pos.end());
  std::vector<EquidistantLeaf> out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    Mat X(N, n);
    RiccatiState R;
    R.offset = order[k];
    R.H.resize(N);
    R.K.resize(N);
    for (Eigen::Index i = 0; i < N; ++i) {
      const NodeTrack& t = tracks[static_cast<std::size_t>(i)][k];
      X.row(i) = t.x.transpose();
      R.S.push_back(t.S);
      R.frame.push_back(t.E);
      R.H(i) = t.S.trace();
    }
    EquidistantLeaf L{order[k], induced_geometry(start.cloud(), start.ambient(), std::move(X)), std::move(R), 0.0, 0.0};
    L.riccati.K = L.leaf.ricci_normal();
    double smax = 0.0, dmax = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      L.trace_defect = std::max(L.trace_defect, std::abs(L.riccati.H(i) - L.leaf.mean_curvature()(i)));
      const SMat C = L.leaf.tangents(i).colPivHouseholderQr().solve(L.riccati.frame[iu]);
      const SMat A = C.transpose() * L.leaf.second_form_frame(i) * C;
      dmax = std::max(dmax, (A - L.riccati.S[iu]).cwiseAbs().maxCoeff());
      smax = std::max(smax, L.riccati.S[iu].cwiseAbs().maxCoeff());
    }
    L.shape_defect = smax > 0 ? dmax / smax : dmax;
    out.push_back(std::move(L));
  }
  // Report in the caller's order.
  std::vector<EquidistantLeaf> sorted;
  for (double o : offsets)
    for (auto& L : out)
      if (L.offset == o) {
        sorted.push_back(L);
        break;
      }
  return sorted;
}

}  // namespace neckfol
