#include "neckfol/spherecalc/operators.hpp"

#include "neckfol/core/error.hpp"
#include "neckfol/core/parallel.hpp"

#include <Eigen/Cholesky>

namespace neckfol {

std::vector<Mat> frame_gradient(const NodeCloud& cloud, const Mat& F) {
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(cloud.m()));
  for (int a = 0; a < cloud.m(); ++a) out.push_back(cloud.apply(cloud.grad_op(a), F));
  return out;
}

std::vector<Mat> frame_hessian(const NodeCloud& cloud, const Mat& F) {
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(cloud.hess_count()));
  for (int h = 0; h < cloud.hess_count(); ++h) out.push_back(cloud.apply(cloud.hess_op_at(h), F));
  return out;
}

SMat FrameMetric::ambient_inverse(const NodeCloud& cloud, Eigen::Index i) const {
  const SMat& E = cloud.frame(i);
  return E * hinv[static_cast<std::size_t>(i)] * E.transpose();
}

FrameMetric round_frame_metric(const NodeCloud& cloud) {
  FrameMetric fm;
  const int m = cloud.m();
  const auto N = static_cast<std::size_t>(cloud.size());
  fm.m = m;
  fm.round = true;
  fm.h.assign(N, SMat::Identity(m, m));
  fm.hinv.assign(N, SMat::Identity(m, m));
  std::array<SMat, kMaxDim> zero;
  for (int c = 0; c < m; ++c) zero[static_cast<std::size_t>(c)] = SMat::Zero(m, m);
  fm.C.assign(N, zero);
  fm.density = Vec::Ones(cloud.size());
  return fm;
}

FrameMetric frame_metric(const SphereField& h) {
  if (h.rank() != 2) fail(ErrorCode::InvalidArgument, "metric field must have rank 2");
  const NodeCloud& cloud = *h.cloud();
  const int m = cloud.m();
  const int n = cloud.n();
  const Eigen::Index N = cloud.size();
  FrameMetric fm;
  fm.m = m;
  fm.h.resize(static_cast<std::size_t>(N));
  fm.hinv.resize(static_cast<std::size_t>(N));
  fm.C.resize(static_cast<std::size_t>(N));
  fm.density.resize(N);
  const std::vector<Mat> dH = frame_gradient(cloud, h.values());
  bool bad = false;
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    const SMat& E = cloud.frame(i);
    SMat hf = h.frame_matrix(i);
    hf = 0.5 * (hf + hf.transpose());
    Eigen::LLT<Mat> llt(hf);
    if (llt.info() != Eigen::Success || llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0) {
      bad = true;
      break;
    }
    fm.h[ii] = hf;
    fm.hinv[ii] = llt.solve(Mat::Identity(m, m));
    fm.density(i) = llt.matrixL().toDenseMatrix().diagonal().prod();
    // (nabla_a h)_{bd} in frame components.
    std::array<SMat, kMaxDim> dh;
    for (int a = 0; a < m; ++a) {
      SMat D(n, n);
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) D(p, q) = dH[static_cast<std::size_t>(a)](i, p * n + q);
      dh[static_cast<std::size_t>(a)] = E.transpose() * D * E;
    }
    for (int c = 0; c < m; ++c) {
      SMat Cc = SMat::Zero(m, m);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          double v = 0.0;
          for (int d = 0; d < m; ++d)
            v += fm.hinv[ii](c, d) *
                 (dh[static_cast<std::size_t>(a)](b, d) + dh[static_cast<std::size_t>(b)](a, d) - dh[static_cast<std::size_t>(d)](a, b));
          Cc(a, b) = 0.5 * v;
        }
      fm.C[ii][static_cast<std::size_t>(c)] = Cc;
    }
  }
  if (bad) fail(ErrorCode::DegenerateMetric, "sphere metric is not positive definite at some node");
  return fm;
}

FrameMetric frame_metric_or_round(const NodeCloud& cloud, const SphereField* h) {
  return h ? frame_metric(*h) : round_frame_metric(cloud);
}

Mat ScalarOperator::apply(const Mat& F) const {
  const NodeCloud& c = *cloud;
  Mat out = zeroth.asDiagonal() * F;
  for (int h = 0; h < c.hess_count(); ++h) out += hess.col(h).asDiagonal() * c.apply(c.hess_op_at(h), F);
  for (int a = 0; a < c.m(); ++a) out += grad.col(a).asDiagonal() * c.apply(c.grad_op(a), F);
  return out;
}

Vec ScalarOperator::apply(const Vec& f) const {
  Mat F = f;
  return apply(F).col(0);
}

bool sparse_columns(const Mat& E) {
  return E.size() > 0 && static_cast<double>((E.array() != 0.0).count()) <= 0.05 * static_cast<double>(E.size());
}

Mat ScalarOperator::apply_dense(const Mat& E) const {
  // sum_op diag(c_op) (S_op E + corr_op P E): combine the low-rank parts first.
  const NodeCloud& c = *cloud;
  Mat comb = Mat::Zero(c.size(), c.band_projector().rows());
  Mat out = zeroth.asDiagonal() * E;
  if (sparse_columns(E)) {
    // Orbit-extension matrices: assemble the summed stencil once and multiply sparse.
    const SpMat Es = E.sparseView();
    std::vector<Eigen::Triplet<double>> trip;
    auto add = [&](const CloudOperator& op, const Vec& coef) {
      for (Eigen::Index i = 0; i < op.rows(); ++i)
        for (auto p = op.rowptr[static_cast<std::size_t>(i)]; p < op.rowptr[static_cast<std::size_t>(i + 1)]; ++p)
          trip.emplace_back(i, op.cols[static_cast<std::size_t>(p)], coef(i) * op.vals[static_cast<std::size_t>(p)]);
      if (op.corr.size() > 0) comb += coef.asDiagonal() * op.corr;
    };
    for (int h = 0; h < c.hess_count(); ++h) add(c.hess_op_at(h), hess.col(h));
    for (int a = 0; a < c.m(); ++a) add(c.grad_op(a), grad.col(a));
    SpMat S(c.size(), c.size());
    S.setFromTriplets(trip.begin(), trip.end());
    out += Mat(S * Es);
    const Mat PE = c.band_projector() * Es;
    out.noalias() += comb * PE;
    return out;
  }
  const Mat PE = c.band_projector() * E;
  auto add = [&](const CloudOperator& op, const Vec& coef) {
    out += coef.asDiagonal() * c.apply_stencil(op, E);
    if (op.corr.size() > 0) comb += coef.asDiagonal() * op.corr;
  };
  for (int h = 0; h < c.hess_count(); ++h) add(c.hess_op_at(h), hess.col(h));
  for (int a = 0; a < c.m(); ++a) add(c.grad_op(a), grad.col(a));
  out.noalias() += comb * PE;
  return out;
}

ScalarOperator laplace_beltrami(CloudPtr cloud, const SphereField* h) {
  const NodeCloud& c = *cloud;
  const int m = c.m();
  const FrameMetric fm = frame_metric_or_round(c, h);
  ScalarOperator op;
  op.cloud = cloud;
  op.hess = Mat::Zero(c.size(), c.hess_count());
  op.grad = Mat::Zero(c.size(), m);
  op.zeroth = Vec::Zero(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const auto ii = static_cast<std::size_t>(i);
    const SMat& hi = fm.hinv[ii];
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b) op.hess(i, c.hess_index(a, b)) = (a == b ? 1.0 : 2.0) * hi(a, b);
    for (int cc = 0; cc < m; ++cc) {
      double v = 0.0;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) v += hi(a, b) * fm.C[ii][static_cast<std::size_t>(cc)](a, b);
      op.grad(i, cc) = -v;
    }
  }
  return op;
}

Vec laplacian(const NodeCloud& cloud, const Vec& f, const SphereField* h) {
  if (!h) return cloud.laplacian(f);
  return laplace_beltrami(h->cloud(), h).apply(f);
}

SphereField differential(const SphereField& f) {
  if (f.rank() != 0) fail(ErrorCode::InvalidArgument, "differential expects a scalar field");
  const NodeCloud& c = *f.cloud();
  const auto d = frame_gradient(c, f.values());
  SphereField out(f.cloud(), 1);
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    SVec g = SVec::Zero(c.m());
    for (int a = 0; a < c.m(); ++a) g(a) = d[static_cast<std::size_t>(a)](i, 0);
    out.set_vector(i, c.frame(i) * g);
  }
  return out;
}

SphereField gradient(const SphereField& f, const SphereField* h) {
  SphereField df = differential(f);
  if (!h) return df;
  const NodeCloud& c = *f.cloud();
  const FrameMetric fm = frame_metric(*h);
  for (Eigen::Index i = 0; i < c.size(); ++i) df.set_vector(i, fm.ambient_inverse(c, i) * df.vector_at(i));
  return df;
}

SphereField hessian(const SphereField& f, const SphereField* h) {
  if (f.rank() != 0) fail(ErrorCode::InvalidArgument, "hessian expects a scalar field");
  const NodeCloud& c = *f.cloud();
  const int m = c.m();
  const auto d = frame_gradient(c, f.values());
  const auto hs = frame_hessian(c, f.values());
  const FrameMetric fm = frame_metric_or_round(c, h);
  SphereField out(f.cloud(), 2);
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const auto ii = static_cast<std::size_t>(i);
    SMat H(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b) {
        double v = hs[static_cast<std::size_t>(c.hess_index(a, b))](i, 0);
        for (int cc = 0; cc < m; ++cc) v -= fm.C[ii][static_cast<std::size_t>(cc)](a, b) * d[static_cast<std::size_t>(cc)](i, 0);
        H(a, b) = H(b, a) = v;
      }
    const SMat& E = c.frame(i);
    out.set_matrix(i, E * H * E.transpose());
  }
  return out;
}

}  // namespace neckfol
