#pragma once

#include "neckfol/chartgeom/group_action.hpp"
#include "neckfol/core/types.hpp"

#include <array>
#include <memory>
#include <optional>
#include <string>

namespace neckfol {

// Metric and its first two coordinate derivatives at a point:
// dg[k](i,j) = d_k g_ij, ddg[k][l](i,j) = d_k d_l g_ij.
struct MetricJet {
  int n = 0;
  int order = 0;
  SMat g;
  std::array<SMat, kMaxDim> dg;
  std::array<std::array<SMat, kMaxDim>, kMaxDim> ddg;

  void reset(int dim, int ord);
};

enum class DerivMode { Analytic, FiniteDifference };

// A smooth metric on the annular chart {r_min <= |x| <= r_max} of R^n / G in
// Cartesian coordinates. Evaluation is pure and safe for concurrent use.
class ChartMetric {
 public:
  ChartMetric(int n, GroupAction group, double r_min, double r_max, DerivMode mode, std::string provenance);
  virtual ~ChartMetric() = default;

  int dim() const { return n_; }
  const GroupAction& group() const { return group_; }
  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }
  DerivMode mode() const { return mode_; }
  const std::string& provenance() const { return provenance_; }

  bool inside(const SVec& x, double margin = 0.0) const;
  // Throws DomainViolation outside the chart and NonPositiveDefinite if g is degenerate.
  MetricJet jet(const SVec& x, int order) const;
  SMat eval(const SVec& x) const { return jet(x, 0).g; }

  // Finite-difference step used at radius r (relative step).
  static double fd_step(double r) { return 1e-5 * r; }

  // Riemannian volume of {|x| <= radius} including the excluded core, when a
  // closed form is known.
  virtual std::optional<double> core_volume(double radius) const { return std::nullopt; }
  virtual std::string describe() const = 0;

 protected:
  virtual void jet_impl(const SVec& x, int order, MetricJet& out) const = 0;

 private:
  int n_;
  GroupAction group_;
  double r_min_;
  double r_max_;
  DerivMode mode_;
  std::string provenance_;
};

using MetricPtr = std::shared_ptr<const ChartMetric>;

}  // namespace neckfol
