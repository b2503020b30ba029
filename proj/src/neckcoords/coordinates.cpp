#include "neckfol/neckcoords/coordinates.hpp"

#include "neckfol/chartgeom/curvature.hpp"
#include "neckfol/core/error.hpp"
#include "neckfol/core/parallel.hpp"
#include "neckfol/hypersurface/graph.hpp"
#include "neckfol/spherecalc/operators.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace neckfol {

std::vector<double> fd_weights(double x0, const std::vector<double>& pts, int order) {
  // Fornberg's recursion; c[j][k] is the weight of pts[j] for derivative k.
  const int np = static_cast<int>(pts.size());
  require(np > order && order >= 0, ErrorCode::InvalidArgument, "too few points for this derivative order");
  std::vector<std::vector<double>> c(static_cast<std::size_t>(np), std::vector<double>(static_cast<std::size_t>(order + 1), 0.0));
  double c1 = 1.0;
  double c4 = pts[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < np; ++i) {
    const int mn = std::min(i, order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = pts[static_cast<std::size_t>(i)] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = pts[static_cast<std::size_t>(i)] - pts[static_cast<std::size_t>(j)];
      c2 *= c3;
      auto& ci = c[static_cast<std::size_t>(i)];
      auto& cj = c[static_cast<std::size_t>(j)];
      if (j == i - 1) {
        const auto& cp = c[static_cast<std::size_t>(i - 1)];
        for (int k = mn; k >= 1; --k)
          ci[static_cast<std::size_t>(k)] =
              c1 * (k * cp[static_cast<std::size_t>(k - 1)] - c5 * cp[static_cast<std::size_t>(k)]) / c2;
        ci[0] = -c1 * c5 * cp[0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        cj[static_cast<std::size_t>(k)] = (c4 * cj[static_cast<std::size_t>(k)] - k * cj[static_cast<std::size_t>(k - 1)]) / c3;
      cj[0] = c4 * cj[0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(static_cast<std::size_t>(np));
  for (int j = 0; j < np; ++j) w[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j)][static_cast<std::size_t>(order)];
  return w;
}

namespace {

constexpr std::size_t kQuadPoints = 6;

// Indices of the `count` grid points nearest to k (clamped window).
std::vector<std::size_t> window(std::size_t k, std::size_t count, std::size_t K) {
  const std::size_t half = count / 2;
  std::size_t b = k > half ? k - half : 0;
  if (b + count > K) b = K - count;
  std::vector<std::size_t> idx(count);
  for (std::size_t j = 0; j < count; ++j) idx[j] = b + j;
  return idx;
}

// Weights of the integral over [t[a], t[a+1]] of kernel(t - t[a]) times the
// interpolating polynomial through kQuadPoints grid points around the interval.
template <class Kernel>
std::pair<std::vector<std::size_t>, std::vector<double>> interval_weights(const std::vector<double>& t, std::size_t a,
                                                                          Kernel kernel) {
  const std::size_t K = t.size(), P = std::min(kQuadPoints, K);
  const std::size_t half = P / 2 - 1;
  std::size_t b = a > half ? a - half : 0;
  if (b + P > K) b = K - P;
  const double h = t[a + 1] - t[a];
  const auto n = static_cast<Eigen::Index>(P);
  Mat V(n, n);
  Vec rhs(n);
  for (Eigen::Index p = 0; p < n; ++p) {
    for (Eigen::Index j = 0; j < n; ++j) V(p, j) = std::pow((t[b + static_cast<std::size_t>(j)] - t[a]) / h, p);
    rhs(p) = boost::math::quadrature::gauss<double, 10>::integrate(
        [&](double x) { return kernel(x) * std::pow(x / h, p); }, 0.0, h);
  }
  const Vec w = V.partialPivLu().solve(rhs);
  std::vector<std::size_t> idx(P);
  for (std::size_t j = 0; j < P; ++j) idx[j] = b + j;
  return {idx, std::vector<double>(w.data(), w.data() + n)};
}

double max_abs(const SMat& a) { return a.cwiseAbs().maxCoeff(); }

// Weights w_j with sum_j w_j f(x_j) = integral of the interpolant of f over [a, b].
std::vector<double> adams_weights(const std::vector<double>& x, double a, double b) {
  const auto n = static_cast<Eigen::Index>(x.size());
  const double h = b - a;
  Mat V(n, n);
  Vec rhs(n);
  for (Eigen::Index p = 0; p < n; ++p) {
    for (Eigen::Index j = 0; j < n; ++j) V(p, j) = std::pow((x[static_cast<std::size_t>(j)] - a) / h, p);
    rhs(p) = h / static_cast<double>(p + 1);
  }
  const Vec w = V.partialPivLu().solve(rhs);
  return std::vector<double>(w.data(), w.data() + n);
}

// Point of `leaf` on the ray through q; y is the parameter guess, updated.
SVec project(const SVec& q, const RadialLeaf& leaf, SVec& y) {
  const SVec theta = q.normalized();
  return leaf.radius(theta, y) * theta;
}

}  // namespace

CoordinateMap integrate_radial_metric(const Foliation& f, const std::vector<LapseSolution>& lapses, std::size_t anchor,
                                      const CoordinateConfig& config) {
  const std::size_t K = f.leaves.size();
  require(K >= 5, ErrorCode::GridTooCoarse, "coordinates need at least five leaves");
  require(lapses.size() == K, ErrorCode::InvalidArgument, "one lapse per leaf expected");
  require(anchor < K, ErrorCode::InvalidArgument, "anchor leaf out of range");
  require(config.max_order >= 0 && config.max_order <= 3, ErrorCode::InvalidArgument, "derivative order must be in [0, 3]");
  for (std::size_t k = 1; k < K; ++k)
    require(f.leaves[k].s > f.leaves[k - 1].s, ErrorCode::InvalidArgument, "leaf parameters must increase");

  CoordinateMap map;
  map.cloud = f.leaves[0].leaf.cloud();
  map.metric = f.leaves[0].leaf.ambient();
  map.anchor = anchor;
  const NodeCloud& cloud = *map.cloud;
  const int n = cloud.n();
  const int m = cloud.m();
  const Eigen::Index N = cloud.size();
  const ChartMetric& g = *map.metric;
  for (const auto& L : f.leaves) map.s.push_back(L.s);

  // Lapse and normal fields on each leaf's own parametrization.
  std::vector<FieldInterpolator> fields;
  std::vector<RadialLeaf> surfaces;
  fields.reserve(K);
  surfaces.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    require(lapses[k].u.size() == N, ErrorCode::InvalidArgument, "lapse does not match the cloud");
    Mat uN(N, 1 + n);
    uN.col(0) = lapses[k].u;
    uN.rightCols(n) = f.leaves[k].leaf.normals();
    fields.emplace_back(map.cloud, uN);
    surfaces.emplace_back(map.cloud, f.leaves[k].leaf.positions());
  }

  map.positions.assign(K, Mat(N, n));
  std::vector<Mat> params(K, Mat(N, n));
  map.positions[anchor] = f.leaves[anchor].leaf.positions();
  params[anchor] = cloud.nodes();

  // Flow in tau = log s, dp/dtau = s u N, by an Adams predictor-corrector over the
  // leaves already reached on this side of the anchor (up to order 4), each stage
  // projected radially onto the target leaf.
  std::vector<double> tau(K);
  for (std::size_t k = 0; k < K; ++k) tau[k] = std::log(map.s[k]);
  std::vector<Mat> vel(K, Mat(N, n));
  auto velocity = [&](std::size_t k, const SVec& y) -> SVec {
    const Eigen::RowVectorXd fv = fields[k](y);
    return map.s[k] * fv(0) * fv.segment(1, n).transpose();
  };
  for (Eigen::Index i = 0; i < N; ++i) vel[anchor].row(i) = velocity(anchor, cloud.node(i)).transpose();
  auto sweep = [&](const std::vector<std::size_t>& path, std::size_t step) {
    const std::size_t from = path[step], to = path[step + 1];
    std::vector<std::size_t> hist;
    for (std::size_t j = 0; j < 3 && j <= step; ++j) hist.push_back(path[step - j]);
    std::vector<double> xp, xc{tau[to]};
    for (auto k : hist) {
      xp.push_back(tau[k]);
      xc.push_back(tau[k]);
    }
    const auto wp = adams_weights(xp, tau[from], tau[to]);
    const auto wc = adams_weights(xc, tau[from], tau[to]);
    parallel_for(static_cast<std::size_t>(N), [&](std::size_t b, std::size_t e) {
      for (std::size_t iu = b; iu < e; ++iu) {
        const auto i = static_cast<Eigen::Index>(iu);
        SVec y = params[from].row(i).transpose();
        const SVec p0 = map.positions[from].row(i).transpose();
        SVec hsum = SVec::Zero(n);
        for (std::size_t j = 0; j < hist.size(); ++j) hsum += wp[j] * vel[hist[j]].row(i).transpose();
        SVec p = project(p0 + hsum, surfaces[to], y);
        for (int it = 0; it < 2; ++it) {
          SVec acc = wc[0] * velocity(to, y);
          for (std::size_t j = 1; j < xc.size(); ++j) acc += wc[j] * vel[hist[j - 1]].row(i).transpose();
          p = project(p0 + acc, surfaces[to], y);
        }
        map.positions[to].row(i) = p.transpose();
        params[to].row(i) = y.transpose();
        vel[to].row(i) = velocity(to, y).transpose();
      }
    });
  };
  std::vector<std::size_t> out_path, in_path;
  for (std::size_t k = anchor; k < K; ++k) out_path.push_back(k);
  for (std::size_t k = anchor + 1; k-- > 0;) in_path.push_back(k);
  for (std::size_t st = 0; st + 1 < out_path.size(); ++st) sweep(out_path, st);
  for (std::size_t st = 0; st + 1 < in_path.size(); ++st) sweep(in_path, st);

  map.pulled.reserve(K);
  map.lapse.assign(K, Vec(N));
  for (std::size_t k = 0; k < K; ++k) {
    map.pulled.push_back(induced_geometry(map.cloud, map.metric, map.positions[k]));
    for (Eigen::Index i = 0; i < N; ++i) map.lapse[k](i) = fields[k](params[k].row(i).transpose())(0);
  }

  // d/dtau (s^2 h_s) = 2 s u A in tau = log s, integrated from the anchor as the
  // linear ODE dh/dtau = -2 h + 2 u A / s with the exponential factor integrated
  // exactly (the cone is a fixed point).
  auto forcing = [&](std::size_t k, Eigen::Index i) -> SMat {
    return 2.0 * map.lapse[k](i) * map.pulled[k].second_form_frame(i) / map.s[k];
  };
  std::vector<std::vector<SMat>> h(K, std::vector<SMat>(static_cast<std::size_t>(N)));
  for (Eigen::Index i = 0; i < N; ++i)
    h[anchor][static_cast<std::size_t>(i)] = map.pulled[anchor].metric_frame(i) / (map.s[anchor] * map.s[anchor]);
  for (std::size_t k = anchor; k + 1 < K; ++k) {
    const double dt = tau[k + 1] - tau[k];
    const auto [idx, w] = interval_weights(tau, k, [dt](double x) { return std::exp(-2.0 * (dt - x)); });
    for (Eigen::Index i = 0; i < N; ++i) {
      SMat acc = std::exp(-2.0 * dt) * h[k][static_cast<std::size_t>(i)];
      for (std::size_t j = 0; j < idx.size(); ++j) acc += w[j] * forcing(idx[j], i);
      h[k + 1][static_cast<std::size_t>(i)] = acc;
    }
  }
  for (std::size_t k = anchor; k > 0; --k) {
    const double dt = tau[k] - tau[k - 1];
    const auto [idx, w] = interval_weights(tau, k - 1, [](double x) { return std::exp(2.0 * x); });
    for (Eigen::Index i = 0; i < N; ++i) {
      SMat acc = std::exp(2.0 * dt) * h[k][static_cast<std::size_t>(i)];
      for (std::size_t j = 0; j < idx.size(); ++j) acc -= w[j] * forcing(idx[j], i);
      h[k - 1][static_cast<std::size_t>(i)] = acc;
    }
  }
  map.integrated.assign(K, std::vector<SMat>(static_cast<std::size_t>(N)));
  for (std::size_t k = 0; k < K; ++k)
    for (Eigen::Index i = 0; i < N; ++i)
      map.integrated[k][static_cast<std::size_t>(i)] = map.s[k] * map.s[k] * h[k][static_cast<std::size_t>(i)];

  map.consistency.assign(K, 0.0);
  map.h_deviation.assign(K, 0.0);
  map.u_deviation.assign(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    double diff = 0.0, scale = 0.0, dev = 0.0;
    const double s2 = map.s[k] * map.s[k];
    for (Eigen::Index i = 0; i < N; ++i) {
      const SMat& M = map.pulled[k].metric_frame(i);
      diff = std::max(diff, max_abs(map.integrated[k][static_cast<std::size_t>(i)] - M));
      scale = std::max(scale, max_abs(M));
      dev = std::max(dev, max_abs(M / s2 - SMat::Identity(m, m)));
    }
    map.consistency[k] = diff / scale;
    map.h_deviation[k] = dev;
    map.u_deviation[k] = (map.lapse[k].array() - 1.0).abs().maxCoeff();
  }
  const double worst = *std::max_element(map.consistency.begin(), map.consistency.end());
  if (config.enforce_consistency && worst > config.consistency_tol) {
    std::ostringstream os;
    os << "integrated and pulled-back leaf metrics differ by " << worst << " (relative), above "
       << config.consistency_tol << "; refine the s-grid";
    fail(ErrorCode::GridTooCoarse, os.str());
  }

  // d_s Phi = Psi + d_tau Psi with Psi = Phi / s.
  std::vector<Mat> dsPhi(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto idx = window(k, 5, K);
    std::vector<double> pts;
    for (auto j : idx) pts.push_back(tau[j]);
    const auto w = fd_weights(tau[k], pts, 1);
    Mat D = map.positions[k] / map.s[k];
    for (std::size_t j = 0; j < idx.size(); ++j) D += w[j] * map.positions[idx[j]] / map.s[idx[j]];
    dsPhi[k] = D;
  }

  const int C = 1 + m + m * (m + 1) / 2;
  map.deviation.assign(K, Mat(N, C));
  map.cross_term.assign(K, 0.0);
  map.speed_defect.assign(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const double s = map.s[k];
    std::vector<double> cross(static_cast<std::size_t>(N)), speed(static_cast<std::size_t>(N));
    parallel_for(static_cast<std::size_t>(N), [&](std::size_t b, std::size_t e) {
      for (std::size_t iu = b; iu < e; ++iu) {
        const auto i = static_cast<Eigen::Index>(iu);
        const SMat G = g.eval(map.positions[k].row(i).transpose());
        const SVec v = dsPhi[k].row(i).transpose();
        const SMat& T = map.pulled[k].tangents(i);
        const double vv = v.dot(G * v);
        int c = 0;
        map.deviation[k](i, c++) = vv - 1.0;
        double cr = 0.0;
        for (int a = 0; a < m; ++a) {
          const double gva = v.dot(G * T.col(a));
          map.deviation[k](i, c++) = gva / s;
          cr = std::max(cr, std::abs(gva) / std::sqrt(vv * T.col(a).dot(G * T.col(a))));
        }
        for (int a = 0; a < m; ++a)
          for (int bb = a; bb < m; ++bb)
            map.deviation[k](i, c++) = T.col(a).dot(G * T.col(bb)) / (s * s) - (a == bb ? 1.0 : 0.0);
        cross[iu] = cr;
        speed[iu] = std::abs(std::sqrt(vv) / map.lapse[k](i) - 1.0);
      }
    });
    map.cross_term[k] = *std::max_element(cross.begin(), cross.end());
    map.speed_defect[k] = *std::max_element(speed.begin(), speed.end());
  }

  // Evolution of the second fundamental form along the flow.
  map.est3_defect.assign(K, 0.0);
  std::vector<std::vector<SMat>> rhs(K, std::vector<SMat>(static_cast<std::size_t>(N)));
  for (std::size_t k = 0; k < K; ++k) {
    const EmbeddedLeaf& L = map.pulled[k];
    const SphereField hs = hessian(SphereField::scalar(map.cloud, map.lapse[k]), &L.induced_metric());
    parallel_for(static_cast<std::size_t>(N), [&](std::size_t b, std::size_t e) {
      for (std::size_t iu = b; iu < e; ++iu) {
        const auto i = static_cast<Eigen::Index>(iu);
        const CurvatureBundle B = curvature_at(g, L.position(i));
        const SMat& T = L.tangents(i);
        const SVec Nn = L.normal(i);
        SMat RN = SMat::Zero(m, m);
        for (int a = 0; a < m; ++a)
          for (int bb = 0; bb < m; ++bb) {
            double acc = 0.0;
            for (int p = 0; p < n; ++p)
              for (int q = 0; q < n; ++q)
                for (int r = 0; r < n; ++r)
                  for (int t = 0; t < n; ++t) acc += B.riemann(p, q, r, t) * T(p, a) * Nn(q) * Nn(r) * T(t, bb);
            RN(a, bb) = acc;
          }
        const SMat& A = L.second_form_frame(i);
        const double u = map.lapse[k](i);
        rhs[k][iu] = -hs.frame_matrix(i) + u * A * L.metric_frame(i).inverse() * A - u * RN;
      }
    });
  }
  for (std::size_t k = 0; k < K; ++k) {
    const auto idx = window(k, 5, K);
    std::vector<double> pts;
    for (auto j : idx) pts.push_back(tau[j]);
    const auto w = fd_weights(tau[k], pts, 1);
    double diff = 0.0, scale = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
      SMat dA = SMat::Zero(m, m);
      // d_s A = B + d_tau B with B = A / s.
      for (std::size_t j = 0; j < idx.size(); ++j) dA += w[j] * map.pulled[idx[j]].second_form_frame(i) / map.s[idx[j]];
      dA += map.pulled[k].second_form_frame(i) / map.s[k];
      diff = std::max(diff, max_abs(dA - rhs[k][static_cast<std::size_t>(i)]));
      scale = std::max(scale, std::max(max_abs(dA), max_abs(map.pulled[k].second_form_frame(i)) / map.s[k]));
    }
    map.est3_defect[k] = diff / scale;
  }

  // Derivatives of the deviation in (tau, x): non-decreasing op sequences, op 0 is
  // d_tau and op a + 1 the frame derivative d_a.
  map.raw_derivative_sup.assign(K, {0.0, 0.0, 0.0, 0.0});
  std::vector<Mat> level = map.deviation;
  std::vector<int> last(1, 0);
  auto record = [&](int j) {
    for (std::size_t k = 0; k < K; ++k)
      map.raw_derivative_sup[k][static_cast<std::size_t>(j)] = level[k].size() ? level[k].cwiseAbs().maxCoeff() : 0.0;
  };
  record(0);
  for (int j = 1; j <= config.max_order; ++j) {
    std::vector<int> next_last;
    std::vector<Mat> next(K);
    std::vector<std::vector<Mat>> grads(K);
    for (std::size_t k = 0; k < K; ++k) grads[k] = frame_gradient(cloud, level[k]);
    std::vector<Mat> dtau(K);
    for (std::size_t k = 0; k < K; ++k) {
      const auto idx = window(k, 5, K);
      std::vector<double> pts;
      for (auto jj : idx) pts.push_back(tau[jj]);
      const auto w = fd_weights(tau[k], pts, 1);
      dtau[k] = Mat::Zero(N, level[k].cols());
      for (std::size_t jj = 0; jj < idx.size(); ++jj) dtau[k] += w[jj] * level[idx[jj]];
    }
    std::vector<std::pair<int, int>> plan;  // (op, source sequence)
    for (int q = 0; q < static_cast<int>(last.size()); ++q)
      for (int op = last[static_cast<std::size_t>(q)]; op <= m; ++op) plan.push_back({op, q});
    for (std::size_t k = 0; k < K; ++k) {
      next[k].resize(N, static_cast<Eigen::Index>(plan.size()) * C);
      for (std::size_t p = 0; p < plan.size(); ++p) {
        const int op = plan[p].first;
        const int q = plan[p].second;
        const Mat& src = op == 0 ? dtau[k] : grads[k][static_cast<std::size_t>(op - 1)];
        next[k].middleCols(static_cast<Eigen::Index>(p) * C, C) = src.middleCols(static_cast<Eigen::Index>(q) * C, C);
      }
    }
    for (const auto& p : plan) next_last.push_back(p.first);
    level = std::move(next);
    last = std::move(next_last);
    record(j);
  }
  map.prepared_order = config.max_order;
  return map;
}

double weighted_norm(const CoordinateMap& map, double rho, int l) {
  require(l >= 0 && l <= 3, ErrorCode::InvalidArgument, "derivative order must be in [0, 3]");
  require(l <= map.prepared_order && !map.raw_derivative_sup.empty(), ErrorCode::InvalidArgument,
          "derivatives of this order were not prepared");
  const double lo = map.s.front(), hi = map.s.back();
  const double tol = 1e-9;
  if (rho < lo * (1 - tol) || 2 * rho > hi * (1 + tol)) {
    std::ostringstream os;
    os << "annulus [" << rho << ", " << 2 * rho << "] leaves the foliated range [" << lo << ", " << hi << "]";
    fail(ErrorCode::DomainViolation, os.str());
  }
  double total = 0.0;
  for (int j = 0; j <= l; ++j) {
    double sup = 0.0;
    for (std::size_t k = 0; k < map.s.size(); ++k) {
      const double s = map.s[k];
      if (s < rho * (1 - tol) || s > 2 * rho * (1 + tol)) continue;
      sup = std::max(sup, std::pow(rho / s, j) * map.raw_derivative_sup[k][static_cast<std::size_t>(j)]);
    }
    total += sup;
  }
  return total;
}

}  // namespace neckfol
