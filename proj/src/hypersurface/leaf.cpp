#include "neckfol/hypersurface/leaf.hpp"

#include "neckfol/chartgeom/curvature.hpp"
#include "neckfol/core/binio.hpp"
#include "neckfol/core/error.hpp"
#include "neckfol/core/parallel.hpp"
#include "neckfol/spherecalc/tensor_calc.hpp"

#include <cmath>
#include <sstream>

namespace neckfol {

namespace {

SMat to_ambient(const SMat& E, const SMat& F) { return E * F * E.transpose(); }

// Frame components of an ambient rank-k tensor: contract every slot with E.
std::vector<double> frame_components(const SMat& E, const Mat& values, Eigen::Index i, int n, int m, int rank) {
  int total_m = 1, total_n = 1;
  for (int r = 0; r < rank; ++r) {
    total_m *= m;
    total_n *= n;
  }
  std::vector<double> out(static_cast<std::size_t>(total_m), 0.0);
  std::vector<int> a(static_cast<std::size_t>(rank));
  for (int fm = 0; fm < total_m; ++fm) {
    int rem = fm;
    for (int r = rank - 1; r >= 0; --r) {
      a[static_cast<std::size_t>(r)] = rem % m;
      rem /= m;
    }
    double acc = 0.0;
    for (int an = 0; an < total_n; ++an) {
      int rn = an;
      double w = 1.0;
      for (int r = rank - 1; r >= 0; --r) {
        w *= E(rn % n, a[static_cast<std::size_t>(r)]);
        rn /= n;
      }
      acc += w * values(i, an);
    }
    out[static_cast<std::size_t>(fm)] = acc;
  }
  return out;
}

}  // namespace

double frame_norm(const SMat& hinv, const std::vector<double>& T, int m, int rank) {
  // Raise each slot in turn, then pair with the original.
  std::vector<double> up = T, tmp(T.size());
  int stride = 1;
  for (int r = rank - 1; r >= 0; --r) {
    for (std::size_t c = 0; c < T.size(); ++c) {
      const int idx = static_cast<int>(c / static_cast<std::size_t>(stride)) % m;
      const std::size_t base = c - static_cast<std::size_t>(idx * stride);
      double v = 0.0;
      for (int q = 0; q < m; ++q) v += hinv(idx, q) * up[base + static_cast<std::size_t>(q * stride)];
      tmp[c] = v;
    }
    up.swap(tmp);
    stride *= m;
  }
  double s = 0.0;
  for (std::size_t c = 0; c < T.size(); ++c) s += T[c] * up[c];
  return std::sqrt(std::max(0.0, s));
}

EmbeddedLeaf induced_geometry(CloudPtr cloud, MetricPtr ambient, Mat positions) {
  require(cloud && ambient, ErrorCode::InvalidArgument, "leaf needs a cloud and an ambient metric");
  const int n = cloud->n();
  const int m = cloud->m();
  const Eigen::Index N = cloud->size();
  require(ambient->dim() == n, ErrorCode::InvalidArgument, "leaf and chart dimensions differ");
  require(positions.rows() == N && positions.cols() == n, ErrorCode::InvalidArgument,
          "leaf positions must be one chart point per cloud node");
  for (Eigen::Index i = 0; i < N; ++i)
    if (!ambient->inside(positions.row(i).transpose())) {
      std::ostringstream os;
      os << "leaf point at |x| = " << positions.row(i).norm() << " is outside the chart [" << ambient->r_min() << ", "
         << ambient->r_max() << "]";
      fail(ErrorCode::DomainViolation, os.str());
    }

  EmbeddedLeaf L;
  L.cloud_ = cloud;
  L.ambient_ = ambient;
  L.X_ = std::move(positions);
  L.N_ = Mat::Zero(N, n);
  L.nu_ = Mat::Zero(N, n);
  L.T_.assign(static_cast<std::size_t>(N), SMat());
  L.gf_.assign(static_cast<std::size_t>(N), SMat());
  L.Af_.assign(static_cast<std::size_t>(N), SMat());
  L.H_ = Vec::Zero(N);
  L.gS_ = SphereField(cloud, 2);
  L.A_ = SphereField(cloud, 2);

  const std::vector<Mat> DX = frame_gradient(*cloud, L.X_);
  const std::vector<Mat> HX = frame_hessian(*cloud, L.X_);
  std::vector<int> bad(static_cast<std::size_t>(N), 0);

  parallel_for(static_cast<std::size_t>(N), [&](std::size_t b, std::size_t e) {
    for (std::size_t iu = b; iu < e; ++iu) {
      const auto i = static_cast<Eigen::Index>(iu);
      const SVec x = L.X_.row(i).transpose();
      SMat T(n, m);
      for (int a = 0; a < m; ++a) T.col(a) = DX[static_cast<std::size_t>(a)].row(i).transpose();
      Eigen::JacobiSVD<SMat> svd(T);
      const auto& sv = svd.singularValues();
      if (!(sv(m - 1) > 1e-9 * sv(0))) {
        bad[iu] = 1;
        continue;
      }
      // The covector annihilating the tangent space.
      Eigen::HouseholderQR<SMat> qr(T);
      const SMat Q = qr.householderQ();
      SVec nu = Q.col(n - 1);
      const double radial = nu.dot(x) / x.norm();
      if (std::abs(radial) < 1e-8) {
        bad[iu] = 2;
        continue;
      }
      if (radial < 0) nu = -nu;
      const MetricJet J = ambient->jet(x, 1);
      std::array<double, kMaxDim * kMaxDim * kMaxDim> gam{};
      christoffel_at(*ambient, x, gam.data());
      const SMat ginv = J.g.inverse();
      const double len = std::sqrt(nu.dot(ginv * nu));
      const SVec conormal = nu / len;
      const SVec normal = ginv * conormal;
      const SMat gf = T.transpose() * J.g * T;
      SMat Af(m, m);
      for (int a = 0; a < m; ++a)
        for (int c = a; c < m; ++c) {
          SVec acc = HX[static_cast<std::size_t>(cloud->hess_index(a, c))].row(i).transpose();
          for (int k = 0; k < n; ++k)
            for (int p = 0; p < n; ++p)
              for (int q = 0; q < n; ++q)
                acc(k) += gam[static_cast<std::size_t>((k * n + p) * n + q)] * T(p, a) * T(q, c);
          Af(a, c) = Af(c, a) = -conormal.dot(acc);
        }
      const SMat& E = cloud->frame(i);
      L.T_[iu] = T;
      L.gf_[iu] = gf;
      L.Af_[iu] = Af;
      L.N_.row(i) = normal.transpose();
      L.nu_.row(i) = conormal.transpose();
      L.H_(i) = (gf.inverse() * Af).trace();
      L.gS_.set_matrix(i, to_ambient(E, gf));
      L.A_.set_matrix(i, to_ambient(E, Af));
    }
  });
  for (Eigen::Index i = 0; i < N; ++i) {
    if (bad[static_cast<std::size_t>(i)] == 1)
      fail(ErrorCode::DegenerateEmbedding, "leaf tangent map loses rank at node " + std::to_string(i));
    if (bad[static_cast<std::size_t>(i)] == 2)
      fail(ErrorCode::DegenerateEmbedding, "leaf is not a radial graph near node " + std::to_string(i));
  }
  return L;
}

EmbeddedLeaf coordinate_sphere(CloudPtr cloud, MetricPtr ambient, double radius) {
  Mat X = radius * cloud->nodes();
  return induced_geometry(std::move(cloud), std::move(ambient), std::move(X));
}

EmbeddedLeaf with_ambient(const EmbeddedLeaf& leaf, MetricPtr ambient) {
  return induced_geometry(leaf.cloud(), std::move(ambient), leaf.positions());
}

Vec EmbeddedLeaf::second_form_norm2() const {
  Vec out(size());
  for (Eigen::Index i = 0; i < size(); ++i) {
    const SMat S = metric_frame(i).inverse() * second_form_frame(i);
    out(i) = (S * S).trace();
  }
  return out;
}

Vec EmbeddedLeaf::ricci_normal() const {
  Vec out(size());
  parallel_for(static_cast<std::size_t>(size()), [&](std::size_t b, std::size_t e) {
    for (std::size_t iu = b; iu < e; ++iu) {
      const auto i = static_cast<Eigen::Index>(iu);
      const CurvatureBundle B = curvature_at(*ambient_, position(i));
      const SVec Nn = normal(i);
      out(i) = Nn.dot(B.ric * Nn);
    }
  });
  return out;
}

double EmbeddedLeaf::max_principal_curvature() const {
  double k = 0.0;
  for (Eigen::Index i = 0; i < size(); ++i) {
    Eigen::GeneralizedSelfAdjointEigenSolver<SMat> es(second_form_frame(i), metric_frame(i), Eigen::EigenvaluesOnly);
    k = std::max(k, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return k;
}

CodazziResidual codazzi_residual(const EmbeddedLeaf& leaf) {
  const NodeCloud& c = *leaf.cloud();
  const int n = c.n();
  const int m = c.m();
  const SphereField dA = exterior_covariant(leaf.second_form(), &leaf.induced_metric());
  const SphereField dlA = codifferential(leaf.second_form(), &leaf.induced_metric());
  const SphereField dH = differential(SphereField::scalar(leaf.cloud(), leaf.mean_curvature()));
  std::vector<double> r_ext(static_cast<std::size_t>(c.size())), r_cod(static_cast<std::size_t>(c.size()));
  parallel_for(static_cast<std::size_t>(c.size()), [&](std::size_t b, std::size_t e) {
    for (std::size_t iu = b; iu < e; ++iu) {
      const auto i = static_cast<Eigen::Index>(iu);
      const SMat& E = c.frame(i);
      const SMat& T = leaf.tangents(i);
      const SVec Nn = leaf.normal(i);
      const CurvatureBundle B = curvature_at(*leaf.ambient(), leaf.position(i));
      const SMat hinv = leaf.metric_frame(i).inverse();
      // Rm(T_a, T_b, N, T_c).
      std::vector<double> D = frame_components(E, dA.values(), i, n, m, 3);
      for (int a = 0; a < m; ++a)
        for (int bb = 0; bb < m; ++bb)
          for (int cc = 0; cc < m; ++cc) {
            double r = 0.0;
            for (int p = 0; p < n; ++p)
              for (int q = 0; q < n; ++q)
                for (int s = 0; s < n; ++s)
                  for (int t = 0; t < n; ++t)
                    r += B.riemann(p, q, s, t) * T(p, a) * T(q, bb) * Nn(s) * T(t, cc);
            D[static_cast<std::size_t>((a * m + bb) * m + cc)] -= r;
          }
      r_ext[iu] = frame_norm(hinv, D, m, 3);
      std::vector<double> v(static_cast<std::size_t>(m));
      const SVec ricN = B.ric * Nn;
      for (int a = 0; a < m; ++a) {
        double dla = 0.0, dh = 0.0;
        for (int p = 0; p < n; ++p) {
          dla += E(p, a) * dlA.values()(i, p);
          dh += E(p, a) * dH.values()(i, p);
        }
        v[static_cast<std::size_t>(a)] = dla + ricN.dot(T.col(a)) + dh;
      }
      r_cod[iu] = frame_norm(hinv, v, m, 1);
    }
  });
  CodazziResidual out;
  for (std::size_t i = 0; i < r_ext.size(); ++i) {
    out.exterior = std::max(out.exterior, r_ext[i]);
    out.codifferential = std::max(out.codifferential, r_cod[i]);
  }
  return out;
}

double gauss_residual(const EmbeddedLeaf& leaf) {
  const NodeCloud& c = *leaf.cloud();
  const int n = c.n();
  const int m = c.m();
  require(m >= 2, ErrorCode::InvalidArgument, "the traced Gauss equation needs leaves of dimension >= 2");
  const SphereField RicS = ricci_tensor(leaf.induced_metric());
  std::vector<double> r(static_cast<std::size_t>(c.size()));
  parallel_for(static_cast<std::size_t>(c.size()), [&](std::size_t b, std::size_t e) {
    for (std::size_t iu = b; iu < e; ++iu) {
      const auto i = static_cast<Eigen::Index>(iu);
      const SMat& T = leaf.tangents(i);
      const SVec Nn = leaf.normal(i);
      const CurvatureBundle B = curvature_at(*leaf.ambient(), leaf.position(i));
      const SMat hinv = leaf.metric_frame(i).inverse();
      const SMat& A = leaf.second_form_frame(i);
      const SMat intrinsic = RicS.frame_matrix(i);
      SMat expect = T.transpose() * B.ric * T + leaf.mean_curvature()(i) * A - A * hinv * A;
      for (int a = 0; a < m; ++a)
        for (int bb = 0; bb < m; ++bb) {
          double s = 0.0;
          for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q)
              for (int u = 0; u < n; ++u)
                for (int w = 0; w < n; ++w) s += B.riemann(p, q, u, w) * Nn(p) * T(q, a) * T(u, bb) * Nn(w);
          expect(a, bb) -= s;
        }
      const SMat D = intrinsic - expect;
      r[iu] = frame_norm(hinv, std::vector<double>(D.data(), D.data() + m * m), m, 2);
    }
  });
  double worst = 0.0;
  for (double v : r) worst = std::max(worst, v);
  return worst;
}

void save_leaf(const std::string& path, const EmbeddedLeaf& leaf) {
  BinWriter w(path, kLeafCacheKind, kLeafCacheVersion);
  const int n = leaf.n(), m = leaf.m();
  const Eigen::Index N = leaf.size();
  w.i64(n);
  w.i64(N);
  w.str(leaf.ambient()->describe());
  w.mat(leaf.positions());
  w.mat(leaf.normals());
  Mat nu(N, n), T(N, n * m), gf(N, m * m), Af(N, m * m);
  for (Eigen::Index i = 0; i < N; ++i) {
    nu.row(i) = leaf.conormal(i).transpose();
    for (int a = 0; a < n * m; ++a) T(i, a) = leaf.tangents(i)(a % n, a / n);
    for (int a = 0; a < m * m; ++a) {
      gf(i, a) = leaf.metric_frame(i)(a % m, a / m);
      Af(i, a) = leaf.second_form_frame(i)(a % m, a / m);
    }
  }
  w.mat(nu);
  w.mat(T);
  w.mat(gf);
  w.mat(Af);
  w.vec(leaf.mean_curvature());
  w.close();
}

EmbeddedLeaf load_leaf(const std::string& path, CloudPtr cloud, MetricPtr ambient) {
  BinReader r(path, kLeafCacheKind, kLeafCacheVersion);
  const int n = static_cast<int>(r.i64());
  const Eigen::Index N = r.i64();
  const std::string desc = r.str();
  require(n == cloud->n() && N == cloud->size(), ErrorCode::IoError, "leaf cache does not match the cloud");
  require(desc == ambient->describe(), ErrorCode::IoError, "leaf cache was built for a different metric: " + desc);
  const int m = n - 1;
  EmbeddedLeaf L;
  L.cloud_ = cloud;
  L.ambient_ = std::move(ambient);
  L.X_ = r.mat();
  L.N_ = r.mat();
  L.nu_ = r.mat();
  const Mat T = r.mat(), gf = r.mat(), Af = r.mat();
  L.H_ = r.vec();
  require(L.X_.rows() == N && T.cols() == n * m && gf.cols() == m * m, ErrorCode::IoError, "leaf cache is malformed");
  L.gS_ = SphereField(cloud, 2);
  L.A_ = SphereField(cloud, 2);
  for (Eigen::Index i = 0; i < N; ++i) {
    SMat Ti(n, m), gi(m, m), Ai(m, m);
    for (int a = 0; a < n * m; ++a) Ti(a % n, a / n) = T(i, a);
    for (int a = 0; a < m * m; ++a) {
      gi(a % m, a / m) = gf(i, a);
      Ai(a % m, a / m) = Af(i, a);
    }
    L.T_.push_back(Ti);
    L.gf_.push_back(gi);
    L.Af_.push_back(Ai);
    L.gS_.set_matrix(i, to_ambient(cloud->frame(i), gi));
    L.A_.set_matrix(i, to_ambient(cloud->frame(i), Ai));
  }
  return L;
}

}  // namespace neckfol
