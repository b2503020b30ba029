#include "neckfol/cmcsolve/jacobi.hpp"

#include "neckfol/core/error.hpp"


namespace neckfol {

JacobiOperator jacobi_operator(const EmbeddedLeaf& leaf) {
  JacobiOperator op{leaf, leaf.second_form_norm2(), leaf.ricci_normal(), 1.0, {}, {}};
  double lam = 0.0;
  for (Eigen::Index i = 0; i < leaf.size(); ++i) lam += leaf.metric_frame(i).trace() / leaf.m();
  op.conformal_scale = lam / static_cast<double>(leaf.size());
  op.lb_induced = laplace_beltrami(leaf.cloud(), &leaf.induced_metric());
  op.lb_round = laplace_beltrami(leaf.cloud(), nullptr);
  return op;
}

Vec jacobi_apply(const JacobiOperator& op, const Vec& w) {
  const NodeCloud& c = *op.leaf.cloud();
  const double inv = 1.0 / op.conformal_scale;
  Vec out = inv * c.laplacian(w) + op.lb_induced.apply(w) - inv * op.lb_round.apply(w);
  out.array() += op.potential().array() * w.array();
  return out;
}

Mat jacobi_apply_dense(const JacobiOperator& op, const Mat& E) {
  const NodeCloud& c = *op.leaf.cloud();
  const double inv = 1.0 / op.conformal_scale;
  Mat out = sparse_columns(E) ? Mat(inv * (c.laplacian_dense() * SpMat(E.sparseView()))) : Mat(inv * (c.laplacian_dense() * E));
  // Both strong-form operators share the cloud's stencils, so apply their difference once.
  ScalarOperator diff = op.lb_induced;
  diff.hess -= inv * op.lb_round.hess;
  diff.grad -= inv * op.lb_round.grad;
  diff.zeroth -= inv * op.lb_round.zeroth;
  out += diff.apply_dense(E);
  out += op.potential().asDiagonal() * E;
  return out;
}

InvariantReduction::InvariantReduction(const NodeCloud& cloud, const GroupAction& g) {
  const auto perms = cloud.closure_permutations(g);
  if (!perms) fail(ErrorCode::GroupMismatch, "node cloud is not closed under " + g.name());
  const Eigen::Index N = cloud.size();
  orbit_of_.assign(static_cast<std::size_t>(N), -1);
  for (Eigen::Index i = 0; i < N; ++i) {
    if (orbit_of_[static_cast<std::size_t>(i)] >= 0) continue;
    const auto k = static_cast<Eigen::Index>(reps_.size());
    reps_.push_back(i);
    double count = 0;
    for (const auto& p : *perms) {
      const auto j = static_cast<std::size_t>(p[static_cast<std::size_t>(i)]);
      if (orbit_of_[j] < 0) {
        orbit_of_[j] = k;
        count += 1;
      }
    }
    orbit_size_.push_back(count);
  }
}

Vec InvariantReduction::reduce(const Vec& f) const {
  Vec r = Vec::Zero(size());
  for (std::size_t i = 0; i < orbit_of_.size(); ++i) r(orbit_of_[i]) += f(static_cast<Eigen::Index>(i));
  for (Eigen::Index k = 0; k < size(); ++k) r(k) /= orbit_size_[static_cast<std::size_t>(k)];
  return r;
}

Vec InvariantReduction::extend(const Vec& r) const {
  Vec f(full_size());
  for (std::size_t i = 0; i < orbit_of_.size(); ++i) f(static_cast<Eigen::Index>(i)) = r(orbit_of_[i]);
  return f;
}

Mat InvariantReduction::extension_matrix() const {
  Mat E = Mat::Zero(full_size(), size());
  for (std::size_t i = 0; i < orbit_of_.size(); ++i) E(static_cast<Eigen::Index>(i), orbit_of_[i]) = 1.0;
  return E;
}

Mat InvariantReduction::reduce_rows(const Mat& M) const {
  Mat r = Mat::Zero(size(), M.cols());
  for (std::size_t i = 0; i < orbit_of_.size(); ++i) r.row(orbit_of_[i]) += M.row(static_cast<Eigen::Index>(i));
  for (Eigen::Index k = 0; k < size(); ++k) r.row(k) /= orbit_size_[static_cast<std::size_t>(k)];
  return r;
}

double InvariantReduction::invariance_defect(const Vec& f) const {
  return (f - extend(reduce(f))).cwiseAbs().maxCoeff();
}

}  // namespace neckfol
