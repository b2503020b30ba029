#include "neckfol/chartgeom/chart_metric.hpp"
#include "neckfol/core/error.hpp"

#include <sstream>

namespace neckfol {

void MetricJet::reset(int dim, int ord) {
  n = dim;
  order = ord;
  g = SMat::Zero(dim, dim);
  if (ord >= 1)
    for (int k = 0; k < dim; ++k) dg[k] = SMat::Zero(dim, dim);
  if (ord >= 2)
    for (int k = 0; k < dim; ++k)
      for (int l = 0; l < dim; ++l) ddg[k][l] = SMat::Zero(dim, dim);
}

ChartMetric::ChartMetric(int n, GroupAction group, double r_min, double r_max, DerivMode mode,
                         std::string provenance)
    : n_(n), group_(std::move(group)), r_min_(r_min), r_max_(r_max), mode_(mode),
      provenance_(std::move(provenance)) {
  require(group_.dim() == n, ErrorCode::GroupMismatch, "group dimension differs from chart dimension");
  require(r_min > 0.0 && r_max > r_min, ErrorCode::InvalidArgument, "chart annulus must satisfy 0 < r_min < r_max");
}

bool ChartMetric::inside(const SVec& x, double margin) const {
  if (x.size() != n_) return false;
  const double r = x.norm();
  return r >= r_min_ + margin && r <= r_max_ - margin;
}

MetricJet ChartMetric::jet(const SVec& x, int order) const {
  require(x.size() == n_, ErrorCode::InvalidArgument, "point has wrong dimension");
  if (!inside(x)) {
    std::ostringstream os;
    os << provenance_ << ": |x| = " << x.norm() << " outside [" << r_min_ << ", " << r_max_ << "]";
    fail(ErrorCode::DomainViolation, os.str());
  }
  MetricJet out;
  out.reset(n_, order);
  jet_impl(x, order, out);
  Eigen::LLT<SMat> llt(out.g);
  if (llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << provenance_ << ": metric not positive definite at |x| = " << x.norm();
    fail(ErrorCode::NonPositiveDefinite, os.str());
  }
  return out;
}

}  // namespace neckfol
