#pragma once

#include "neckfol/chartgeom/chart_metric.hpp"
#include "neckfol/spherecalc/sphere_field.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace neckfol {

// A hypersurface of a chart given as an embedding of the node cloud's sphere,
// node i -> X.row(i), with its induced geometry. Tensors on the leaf are pulled
// back to the sphere and stored as SphereFields; frame quantities use the
// cloud's tangent frames. Normals point outward: <N, x>_Euclid > 0 for the
// conormal gN, i.e. g(N, radial) > 0.
class EmbeddedLeaf {
 public:
  const CloudPtr& cloud() const { return cloud_; }
  const MetricPtr& ambient() const { return ambient_; }
  int n() const { return cloud_->n(); }
  int m() const { return cloud_->m(); }
  Eigen::Index size() const { return X_.rows(); }

  const Mat& positions() const { return X_; }
  SVec position(Eigen::Index i) const { return X_.row(i).transpose(); }
  // Unit normal N (vector) and conormal g N (covector), chart components.
  SVec normal(Eigen::Index i) const { return N_.row(i).transpose(); }
  SVec conormal(Eigen::Index i) const { return nu_.row(i).transpose(); }
  const Mat& normals() const { return N_; }
  // dX applied to the cloud frame: n x m, column a = d_a X.
  const SMat& tangents(Eigen::Index i) const { return T_[static_cast<std::size_t>(i)]; }
  // Frame components (m x m) of the induced metric and second fundamental form.
  const SMat& metric_frame(Eigen::Index i) const { return gf_[static_cast<std::size_t>(i)]; }
  const SMat& second_form_frame(Eigen::Index i) const { return Af_[static_cast<std::size_t>(i)]; }

  const SphereField& induced_metric() const { return gS_; }
  const SphereField& second_form() const { return A_; }
  const Vec& mean_curvature() const { return H_; }

  // |A|^2 and Ric(N, N) per node.
  Vec second_form_norm2() const;
  Vec ricci_normal() const;
  // Largest |principal curvature| over the leaf.
  double max_principal_curvature() const;

  friend EmbeddedLeaf induced_geometry(CloudPtr cloud, MetricPtr ambient, Mat positions);
  friend EmbeddedLeaf load_leaf(const std::string& path, CloudPtr cloud, MetricPtr ambient);

 private:
  CloudPtr cloud_;
  MetricPtr ambient_;
  Mat X_, N_, nu_;
  std::vector<SMat> T_, gf_, Af_;
  SphereField gS_, A_;
  Vec H_;
};

// Computes normal, induced metric, second fundamental form A(X, Y) = <X, nabla_Y N>
// and H = tr A. Throws DomainViolation outside the chart and DegenerateEmbedding
// when dX loses rank.
EmbeddedLeaf induced_geometry(CloudPtr cloud, MetricPtr ambient, Mat positions);

// Coordinate sphere {|x| = radius} of the chart.
EmbeddedLeaf coordinate_sphere(CloudPtr cloud, MetricPtr ambient, double radius);

// Same embedding, different ambient metric.
EmbeddedLeaf with_ambient(const EmbeddedLeaf& leaf, MetricPtr ambient);

struct CodazziResidual {
  double exterior = 0.0;       // sup |d A - Rm(., .)N|
  double codifferential = 0.0;  // sup |delta A + Ric(N, .) + dH|
};

// Sup-norm residuals (measured with the induced metric) of the Codazzi
// equation and its contraction. Sign conventions as in curvature.hpp; with
// delta = -tr nabla the contraction reads delta A = -Ric(N, .) - dH.
CodazziResidual codazzi_residual(const EmbeddedLeaf& leaf);

// Sup over nodes of |Ric(g_S) - (Ric - Rm(N, ., ., N) + H A - A o A)| in the
// induced metric: the traced Gauss equation. Needs m >= 2.
double gauss_residual(const EmbeddedLeaf& leaf);

// Pointwise norm of a frame tensor (rank 1..3) with all slots raised by h^{-1}.
double frame_norm(const SMat& hinv, const std::vector<double>& T, int m, int rank);

inline constexpr std::uint32_t kLeafCacheKind = 0x4C454146;  // "LEAF"
inline constexpr std::uint32_t kLeafCacheVersion = 1;

void save_leaf(const std::string& path, const EmbeddedLeaf& leaf);
// Restores a leaf with its cached geometry; the cloud and ambient metric must be
// the ones it was built with (checked by size, dimension and metric description).
EmbeddedLeaf load_leaf(const std::string& path, CloudPtr cloud, MetricPtr ambient);

}  // namespace neckfol
