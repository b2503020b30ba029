#pragma once

#include "neckfol/spherecalc/node_cloud.hpp"

#include <memory>

namespace neckfol {

// Tensor field on a node cloud, stored per node in ambient R^n components:
// values(i, c) with c = ((i1 * n + i2) * n + ...) for rank k. Rank 0 is scalar,
// 1 a (co)vector, 2 a 2-tensor, 3 and 4 arise as derivatives.
class SphereField {
 public:
  SphereField() = default;
  SphereField(CloudPtr cloud, int rank);
  SphereField(CloudPtr cloud, int rank, Mat values);

  static SphereField scalar(CloudPtr cloud, const Vec& f);
  // The round metric, P = Id - x x^T at each node.
  static SphereField round_metric(CloudPtr cloud);

  const CloudPtr& cloud() const { return cloud_; }
  int rank() const { return rank_; }
  int dim() const { return cloud_->n(); }
  Eigen::Index size() const { return values_.rows(); }
  int components() const { return static_cast<int>(values_.cols()); }

  Mat& values() { return values_; }
  const Mat& values() const { return values_; }
  Vec scalar_values() const { return values_.col(0); }

  SVec vector_at(Eigen::Index i) const;
  void set_vector(Eigen::Index i, const SVec& v);
  SMat matrix_at(Eigen::Index i) const;
  void set_matrix(Eigen::Index i, const SMat& m);
  // Frame components E^T T E of a 2-tensor at node i.
  SMat frame_matrix(Eigen::Index i) const;

  // Reference metric (null: round).
  const std::shared_ptr<const SphereField>& reference() const { return reference_; }
  void set_reference(std::shared_ptr<const SphereField> h) { reference_ = std::move(h); }

  // max over nodes and slots of |T contracted with x| (relative to max |T|).
  double tangency_defect() const;
  double symmetry_defect() const;
  // Projects every slot tangentially (and symmetrizes rank-2 fields if asked).
  SphereField projected(bool symmetrize = false) const;

  SphereField& operator+=(const SphereField& o);
  SphereField& operator-=(const SphereField& o);
  SphereField& operator*=(double s);
  friend SphereField operator+(SphereField a, const SphereField& b) { return a += b; }
  friend SphereField operator-(SphereField a, const SphereField& b) { return a -= b; }
  friend SphereField operator*(double s, SphereField a) { return a *= s; }

 private:
  CloudPtr cloud_;
  int rank_ = 0;
  Mat values_;
  std::shared_ptr<const SphereField> reference_;
};

// Evaluates a field at arbitrary unit vectors: exact band part plus a
// second-order Taylor expansion of the remainder about the nearest node.
class FieldInterpolator {
 public:
  FieldInterpolator(CloudPtr cloud, const Mat& values);
  Eigen::RowVectorXd operator()(const SVec& y) const;
  Mat at(const Mat& points) const;

 private:
  CloudPtr cloud_;
  Mat coef_;
  Mat tail_;
  std::vector<Mat> tail_grad_;
  std::vector<Mat> tail_hess_;
};

// (1/|G|) sum_g g . f o g^{-1}. Uses node permutations when the cloud is closed
// under G, interpolation otherwise.
SphereField group_average(const SphereField& f, const GroupAction& g);

// Max of |f_i - f_j| / |x_i - x_j|^alpha over stencil neighbor pairs (scalar fields
// or the Frobenius norm of tensor differences).
double holder_seminorm(const SphereField& f, double alpha);

}  // namespace neckfol
