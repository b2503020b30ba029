#include "neckfol/chartgeom/curvature.hpp"
#include "neckfol/core/error.hpp"

#include <cmath>

namespace neckfol {

namespace {

inline int i3(int n, int a, int b, int c) { return (a * n + b) * n + c; }
inline int i4(int n, int a, int b, int c, int d) { return ((a * n + b) * n + c) * n + d; }

// Gamma_{ij,l} (first kind) at [i3(i,j,l)] and Gamma^k_ij at [i3(k,i,j)].
void christoffels(const MetricJet& J, const SMat& ginv, double* first, double* second) {
  const int n = J.n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l)
        first[i3(n, i, j, l)] = 0.5 * (J.dg[i](j, l) + J.dg[j](i, l) - J.dg[l](i, j));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0;
        for (int l = 0; l < n; ++l) s += ginv(k, l) * first[i3(n, i, j, l)];
        second[i3(n, k, i, j)] = s;
      }
}

}  // namespace

double CurvatureBundle::rm_norm2() const {
  // Raise indices one slot at a time.
  std::array<double, kMaxDim * kMaxDim * kMaxDim * kMaxDim> a = rm, b{};
  for (int slot = 0; slot < 4; ++slot) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            int idx[4] = {i, j, k, l};
            double s = 0;
            for (int m = 0; m < n; ++m) {
              int src[4] = {i, j, k, l};
              src[slot] = m;
              s += ginv(idx[slot], m) * a[i4(n, src[0], src[1], src[2], src[3])];
            }
            b[i4(n, i, j, k, l)] = s;
          }
    a = b;
  }
  double s = 0;
  const int total = n * n * n * n;
  for (int q = 0; q < total; ++q) s += a[q] * rm[q];
  return s;
}

double CurvatureBundle::ric_norm() const {
  const SMat m = ginv * ric;
  return std::sqrt(std::max(0.0, (m * m).trace()));
}

CurvatureBundle curvature_from_jet(const MetricJet& J, const SVec& x) {
  require(J.order >= 2, ErrorCode::InvalidArgument, "curvature needs a second-order jet");
  const int n = J.n;
  CurvatureBundle c;
  c.n = n;
  c.x = x;
  c.g = J.g;
  c.ginv = J.g.inverse();
  std::array<double, kMaxDim * kMaxDim * kMaxDim> first{};
  christoffels(J, c.ginv, first.data(), c.gamma.data());

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          // d_i Gamma_{jk,l} - d_j Gamma_{ik,l}
          const double dgi = 0.5 * (J.ddg[i][j](k, l) + J.ddg[i][k](j, l) - J.ddg[i][l](j, k));
          const double dgj = 0.5 * (J.ddg[j][i](k, l) + J.ddg[j][k](i, l) - J.ddg[j][l](i, k));
          double v = dgi - dgj;
          for (int m = 0; m < n; ++m)
            v += first[i3(n, j, l, m)] * c.gamma[i3(n, m, i, k)] - first[i3(n, i, l, m)] * c.gamma[i3(n, m, j, k)];
          c.rm[i4(n, i, j, k, l)] = v;
        }

  c.ric = SMat::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      double s = 0;
      for (int i = 0; i < n; ++i)
        for (int l = 0; l < n; ++l) s += c.ginv(i, l) * c.rm[i4(n, i, j, k, l)];
      c.ric(j, k) = s;
    }
  c.scalar = (c.ginv.cwiseProduct(c.ric)).sum();

  // Orthonormal frame E = L^{-T}, g = L L^T.
  Eigen::LLT<SMat> llt(J.g);
  const SMat L = llt.matrixL();
  const SMat E = L.inverse().transpose();
  std::array<double, kMaxDim * kMaxDim * kMaxDim * kMaxDim> a = c.rm, b{};
  for (int slot = 0; slot < 4; ++slot) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            int idx[4] = {i, j, k, l};
            double s = 0;
            for (int m = 0; m < n; ++m) {
              int src[4] = {i, j, k, l};
              src[slot] = m;
              s += E(m, idx[slot]) * a[i4(n, src[0], src[1], src[2], src[3])];
            }
            b[i4(n, i, j, k, l)] = s;
          }
    a = b;
  }
  const int np = n * (n - 1) / 2;
  c.op = Mat::Zero(np, np);
  int P = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, ++P) {
      int Q = 0;
      for (int k = 0; k < n; ++k)
        for (int l = k + 1; l < n; ++l, ++Q) c.op(P, Q) = a[i4(n, i, j, l, k)];
    }
  return c;
}

CurvatureBundle curvature_at(const ChartMetric& metric, const SVec& x) {
  return curvature_from_jet(metric.jet(x, 2), x);
}

double curvature_operator_det(const ChartMetric& metric, const SVec& x) {
  return curvature_at(metric, x).op.determinant();
}

void christoffel_at(const ChartMetric& metric, const SVec& x, double* gamma) {
  const MetricJet J = metric.jet(x, 1);
  std::array<double, kMaxDim * kMaxDim * kMaxDim> first{};
  christoffels(J, J.g.inverse(), first.data(), gamma);
}

}  // namespace neckfol
