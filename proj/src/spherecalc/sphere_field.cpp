#include "neckfol/spherecalc/sphere_field.hpp"

#include "neckfol/core/error.hpp"
#include "neckfol/core/parallel.hpp"

#include <cmath>

namespace neckfol {

namespace {

int ipow(int b, int e) {
  int r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// Applies A to slot `slot` of a rank-k tensor stored as a flat array of n^k entries.
void apply_slot(const SMat& A, int n, int rank, int slot, const double* in, double* out) {
  const int stride = ipow(n, rank - 1 - slot);
  const int total = ipow(n, rank);
  for (int c = 0; c < total; ++c) {
    const int idx = (c / stride) % n;
    const int base = c - idx * stride;
    double v = 0.0;
    for (int q = 0; q < n; ++q) v += A(idx, q) * in[base + q * stride];
    out[c] = v;
  }
}

// Pushforward of a rank-k tensor by the orthogonal map A (all slots).
void transform(const SMat& A, int n, int rank, const double* in, double* out) {
  const int total = ipow(n, rank);
  std::vector<double> a(in, in + total), b(static_cast<std::size_t>(total));
  for (int s = 0; s < rank; ++s) {
    apply_slot(A, n, rank, s, a.data(), b.data());
    a.swap(b);
  }
  std::copy(a.begin(), a.end(), out);
}

}  // namespace

SphereField::SphereField(CloudPtr cloud, int rank) : cloud_(std::move(cloud)), rank_(rank) {
  if (rank < 0 || rank > 4) fail(ErrorCode::InvalidArgument, "field rank must be in [0, 4]");
  values_ = Mat::Zero(cloud_->size(), ipow(cloud_->n(), rank));
}

SphereField::SphereField(CloudPtr cloud, int rank, Mat values) : SphereField(std::move(cloud), rank) {
  if (values.rows() != values_.rows() || values.cols() != values_.cols())
    fail(ErrorCode::InvalidArgument, "field values have the wrong shape");
  values_ = std::move(values);
}

SphereField SphereField::scalar(CloudPtr cloud, const Vec& f) {
  Mat v = f;
  return SphereField(std::move(cloud), 0, std::move(v));
}

SphereField SphereField::round_metric(CloudPtr cloud) {
  SphereField g(cloud, 2);
  const int n = cloud->n();
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    SVec x = cloud->node(i);
    g.set_matrix(i, SMat::Identity(n, n) - x * x.transpose());
  }
  return g;
}

SVec SphereField::vector_at(Eigen::Index i) const { return values_.row(i).transpose(); }

void SphereField::set_vector(Eigen::Index i, const SVec& v) { values_.row(i) = v.transpose(); }

SMat SphereField::matrix_at(Eigen::Index i) const {
  const int n = dim();
  SMat m(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) m(a, b) = values_(i, a * n + b);
  return m;
}

void SphereField::set_matrix(Eigen::Index i, const SMat& m) {
  const int n = dim();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) values_(i, a * n + b) = m(a, b);
}

SMat SphereField::frame_matrix(Eigen::Index i) const {
  const SMat& E = cloud_->frame(i);
  return E.transpose() * matrix_at(i) * E;
}

double SphereField::tangency_defect() const {
  if (rank_ == 0) return 0.0;
  const int n = dim();
  const int total = components();
  const double scale = std::max(1.0, values_.cwiseAbs().maxCoeff());
  double worst = 0.0;
  std::vector<double> in(static_cast<std::size_t>(total)), out(static_cast<std::size_t>(total));
  for (Eigen::Index i = 0; i < size(); ++i) {
    SMat X = cloud_->node(i) * cloud_->node(i).transpose();
    for (int c = 0; c < total; ++c) in[static_cast<std::size_t>(c)] = values_(i, c);
    for (int s = 0; s < rank_; ++s) {
      apply_slot(X, n, rank_, s, in.data(), out.data());
      for (double v : out) worst = std::max(worst, std::abs(v));
    }
  }
  return worst / scale;
}

double SphereField::symmetry_defect() const {
  if (rank_ != 2) return 0.0;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < size(); ++i) {
    SMat m = matrix_at(i);
    worst = std::max(worst, (m - m.transpose()).cwiseAbs().maxCoeff());
  }
  return worst;
}

SphereField SphereField::projected(bool symmetrize) const {
  SphereField out = *this;
  if (rank_ == 0) return out;
  const int n = dim();
  const int total = components();
  std::vector<double> a(static_cast<std::size_t>(total)), b(static_cast<std::size_t>(total));
  for (Eigen::Index i = 0; i < size(); ++i) {
    SVec x = cloud_->node(i);
    SMat P = SMat::Identity(n, n) - x * x.transpose();
    for (int c = 0; c < total; ++c) a[static_cast<std::size_t>(c)] = values_(i, c);
    transform(P, n, rank_, a.data(), b.data());
    for (int c = 0; c < total; ++c) out.values_(i, c) = b[static_cast<std::size_t>(c)];
    if (symmetrize && rank_ == 2) {
      SMat m = out.matrix_at(i);
      out.set_matrix(i, 0.5 * (m + m.transpose()));
    }
  }
  return out;
}

SphereField& SphereField::operator+=(const SphereField& o) {
  if (o.rank_ != rank_ || o.size() != size()) fail(ErrorCode::InvalidArgument, "field shape mismatch");
  values_ += o.values_;
  return *this;
}

SphereField& SphereField::operator-=(const SphereField& o) {
  if (o.rank_ != rank_ || o.size() != size()) fail(ErrorCode::InvalidArgument, "field shape mismatch");
  values_ -= o.values_;
  return *this;
}

SphereField& SphereField::operator*=(double s) {
  values_ *= s;
  return *this;
}

FieldInterpolator::FieldInterpolator(CloudPtr cloud, const Mat& values) : cloud_(std::move(cloud)) {
  coef_ = cloud_->band_projector() * values;
  tail_ = values - cloud_->band_basis() * coef_;
  const int m = cloud_->m();
  for (int a = 0; a < m; ++a) tail_grad_.push_back(cloud_->apply(cloud_->grad_op(a), tail_));
  for (int h = 0; h < cloud_->hess_count(); ++h) tail_hess_.push_back(cloud_->apply(cloud_->hess_op_at(h), tail_));
}

Eigen::RowVectorXd FieldInterpolator::operator()(const SVec& y) const {
  Mat pt = y.transpose();
  return at(pt).row(0);
}

Mat FieldInterpolator::at(const Mat& points) const {
  const int m = cloud_->m();
  Mat out = cloud_->band_values_at(points) * coef_;
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    SVec y = points.row(p).transpose();
    const Eigen::Index i = cloud_->nearest_node(y);
    const SVec u = cloud_->frame(i).transpose() * y;
    Eigen::RowVectorXd v = tail_.row(i);
    for (int a = 0; a < m; ++a) {
      v += u(a) * tail_grad_[static_cast<std::size_t>(a)].row(i);
      for (int b = a; b < m; ++b) {
        const double w = (a == b) ? 0.5 : 1.0;
        v += w * u(a) * u(b) * tail_hess_[static_cast<std::size_t>(cloud_->hess_index(a, b))].row(i);
      }
    }
    out.row(p) += v;
  }
  return out;
}

SphereField group_average(const SphereField& f, const GroupAction& g) {
  const CloudPtr& cloud = f.cloud();
  const int n = cloud->n();
  if (g.dim() != n) fail(ErrorCode::GroupMismatch, "group acts on a different dimension");
  const int rank = f.rank();
  const int total = f.components();
  SphereField out(cloud, rank);
  const auto perm = cloud->closure_permutations(g, 1e-10);
  std::unique_ptr<FieldInterpolator> interp;
  if (!perm) interp = std::make_unique<FieldInterpolator>(cloud, f.values());
  std::vector<double> a(static_cast<std::size_t>(total)), b(static_cast<std::size_t>(total));
  for (int e = 0; e < g.order(); ++e) {
    const SMat& ge = g.elements()[static_cast<std::size_t>(e)];
    const SMat ginv = ge.transpose();
    Mat src;
    if (perm) {
      // g^{-1} x_i = x_j  <=>  x_i = g x_j.
      const auto& pe = (*perm)[static_cast<std::size_t>(e)];
      src.resize(f.size(), total);
      for (Eigen::Index j = 0; j < f.size(); ++j) src.row(pe[static_cast<std::size_t>(j)]) = f.values().row(j);
    } else {
      Mat pts = cloud->nodes() * ginv.transpose();
      src = interp->at(pts);
    }
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      for (int c = 0; c < total; ++c) a[static_cast<std::size_t>(c)] = src(i, c);
      transform(ge, n, rank, a.data(), b.data());
      for (int c = 0; c < total; ++c) out.values()(i, c) += b[static_cast<std::size_t>(c)];
    }
  }
  out.values() /= static_cast<double>(g.order());
  out.set_reference(f.reference());
  return out;
}

double holder_seminorm(const SphereField& f, double alpha) {
  const CloudPtr& cloud = f.cloud();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    for (auto j : cloud->neighbors(i)) {
      if (j == i) continue;
      const double d = (cloud->node(i) - cloud->node(j)).norm();
      if (d <= 0.0) continue;
      worst = std::max(worst, (f.values().row(i) - f.values().row(j)).norm() / std::pow(d, alpha));
    }
  }
  return worst;
}

}  // namespace neckfol
