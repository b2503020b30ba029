#include "neckfol/chartgeom/gluing.hpp"
#include "neckfol/chartgeom/models.hpp"
#include "neckfol/core/error.hpp"

#include <cmath>
#include <functional>
#include <set>
#include <sstream>

namespace neckfol {

double cutoff_chi(double s, double* d1, double* d2) {
  if (d1) *d1 = 0.0;
  if (d2) *d2 = 0.0;
  if (s <= 1.0) return 1.0;
  if (s >= 2.0) return 0.0;
  const double u = 2.0 - s, v = s - 1.0;
  const double A = std::exp(-1.0 / u), B = std::exp(-1.0 / v);
  // phi' = phi/u^2, phi'' = phi (1/u^4 - 2/u^3)
  const double A1 = -A / (u * u), A2 = A * (1.0 / std::pow(u, 4) - 2.0 / std::pow(u, 3));
  const double B1 = B / (v * v), B2 = B * (1.0 / std::pow(v, 4) - 2.0 / std::pow(v, 3));
  const double S = A + B;
  const double chi = A / S;
  const double N = A1 * B - A * B1;
  if (d1) *d1 = N / (S * S);
  if (d2) {
    const double N1 = A2 * B - A * B2;
    const double D = S * S, D1 = 2 * S * (A1 + B1);
    *d2 = (N1 * D - N * D1) / (D * D);
  }
  return chi;
}

namespace {

class GluedMetric : public ChartMetric {
 public:
  GluedMetric(MetricPtr orbifold, MetricPtr ale_pulled, double t)
      : ChartMetric(orbifold->dim(), orbifold->group(), ale_pulled->r_min(), orbifold->r_max(), DerivMode::Analytic,
                    "glued"),
        orb_(std::move(orbifold)), ale_(std::move(ale_pulled)), t_(t), q_(std::pow(t, 0.25)) {}

  std::optional<double> core_volume(double radius) const override {
    if (radius <= q_) return ale_->core_volume(radius);
    return std::nullopt;
  }

  std::string describe() const override {
    std::ostringstream os;
    os << "glued(" << orb_->describe() << " <- " << ale_->describe() << ", t=" << t_ << ")";
    return os.str();
  }

 protected:
  void jet_impl(const SVec& x, int order, MetricJet& out) const override {
    const int n = dim();
    const double r = x.norm();
    const double s = r / q_;
    if (s >= 2.0) {
      out = orb_->jet(x, order);
      return;
    }
    if (s <= 1.0) {
      out = ale_->jet(x, order);
      return;
    }
    double c1, c2;
    const double chi = cutoff_chi(s, &c1, &c2);
    const MetricJet b = ale_->jet(x, order);
    const MetricJet o = orb_->jet(x, order);
    const SMat diff = b.g - o.g;
    out.g = chi * b.g + (1.0 - chi) * o.g;
    if (order < 1) return;
    SVec dchi(n);
    for (int k = 0; k < n; ++k) dchi[k] = c1 * x[k] / (r * q_);
    for (int k = 0; k < n; ++k) out.dg[k] = dchi[k] * diff + chi * b.dg[k] + (1.0 - chi) * o.dg[k];
    if (order < 2) return;
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        const double ddchi = c2 * x[k] * x[l] / (r * r * q_ * q_) +
                             (c1 / q_) * ((k == l ? 1.0 / r : 0.0) - x[k] * x[l] / (r * r * r));
        out.ddg[k][l] = ddchi * diff + dchi[k] * (b.dg[l] - o.dg[l]) + dchi[l] * (b.dg[k] - o.dg[k]) +
                        chi * b.ddg[k][l] + (1.0 - chi) * o.ddg[k][l];
      }
  }

 private:
  MetricPtr orb_;
  MetricPtr ale_;
  double t_;
  double q_;
};

}  // namespace

MetricPtr naive_glue(MetricPtr orbifold, MetricPtr ale, double t, const SMat& gauge, double eps0) {
  require(t > 0.0 && t < std::pow(eps0, 4), ErrorCode::ScaleOutOfRange, "relative scale t must lie in (0, eps0^4)");
  require(orbifold->dim() == ale->dim(), ErrorCode::GroupMismatch, "dimension mismatch between blocks");
  require(orbifold->group().same_as(ale->group()), ErrorCode::GroupMismatch,
          "asymptotic group of the ALE block differs from the singularity group");
  const int n = orbifold->dim();
  const SMat phi = gauge.size() == 0 ? SMat(SMat::Identity(n, n)) : gauge;
  require(orbifold->group().normalized_by(phi), ErrorCode::GroupMismatch,
          "gauge rotation is not an isometry of the quotient cone");
  const double q = std::pow(t, 0.25);
  auto pulled = affine_pullback(std::move(ale), phi, std::sqrt(t));
  require(orbifold->r_min() <= q, ErrorCode::ScaleOutOfRange, "orbifold chart does not reach the gluing annulus");
  require(pulled->r_max() >= 2.0 * q, ErrorCode::ScaleOutOfRange, "ALE chart does not reach the gluing annulus");
  require(pulled->r_min() < q, ErrorCode::ScaleOutOfRange, "ALE core does not fit inside r < t^{1/4}");
  return std::make_shared<GluedMetric>(std::move(orbifold), std::move(pulled), t);
}

TreeMetric build_tree_metric(const GluingTree& tree) {
  // Owner block of every singular point; "" denotes the orbifold.
  std::map<std::string, std::string> owner;
  std::map<std::string, MetricPtr> point_chart;
  auto add_points = [&](const BlockSpec& b, const std::string& block_id) {
    for (const auto& p : b.points) {
      require(!owner.count(p.id), ErrorCode::InvalidArgument, "duplicate singular point id " + p.id);
      require(p.chart != nullptr, ErrorCode::InvalidArgument, "singular point " + p.id + " has no chart");
      owner[p.id] = block_id;
      point_chart[p.id] = p.chart;
    }
  };
  add_points(tree.orbifold, "");
  std::map<std::string, const BlockSpec*> blocks;
  for (const auto& b : tree.ale_blocks) {
    require(!b.id.empty() && !blocks.count(b.id), ErrorCode::InvalidArgument, "ALE block ids must be unique");
    require(b.metric != nullptr, ErrorCode::InvalidArgument, "ALE block " + b.id + " has no metric");
    require(b.points.size() <= 1, ErrorCode::InvalidArgument,
            "ALE block " + b.id + " has several singular points; one chart per block is supported");
    blocks[b.id] = &b;
    add_points(b, b.id);
  }

  // The gluing map must be one-to-one onto singular points, and each block glued once.
  std::map<std::string, const GluingSpec*> glued_at;  // point -> gluing
  std::map<std::string, const GluingSpec*> glue_of;   // block -> gluing
  for (const auto& g : tree.gluings) {
    require(blocks.count(g.block), ErrorCode::InvalidArgument, "gluing references unknown block " + g.block);
    require(owner.count(g.target), ErrorCode::InvalidArgument, "gluing references unknown point " + g.target);
    require(!glued_at.count(g.target), ErrorCode::CyclicTree, "singular point " + g.target + " is hit twice");
    require(!glue_of.count(g.block), ErrorCode::CyclicTree, "block " + g.block + " is glued twice");
    require(g.t > 0.0 && g.t < std::pow(tree.eps0, 4), ErrorCode::ScaleOutOfRange,
            "relative scale of block " + g.block + " outside (0, eps0^4)");
    glued_at[g.target] = &g;
    glue_of[g.block] = &g;
  }
  for (const auto& [id, b] : blocks)
    require(glue_of.count(id), ErrorCode::InvalidArgument, "ALE block " + id + " is not glued anywhere");

  // Walk from each block to the root; a repeated block means a cycle.
  TreeMetric out;
  for (const auto& [id, b] : blocks) {
    std::set<std::string> seen;
    std::string cur = id;
    double T = 1.0;
    int depth = 0;
    while (!cur.empty()) {
      require(seen.insert(cur).second, ErrorCode::CyclicTree, "gluing tree has a cycle through " + cur);
      const GluingSpec* g = glue_of.at(cur);
      T *= g->t;
      ++depth;
      cur = owner.at(g->target);
    }
    out.absolute_scales[id] = T;
    out.depth[id] = depth;
  }

  // Deepest bubbles first: a block's metric is its own chart with its children glued in.
  std::function<MetricPtr(const std::string&)> block_metric;
  std::function<MetricPtr(const std::string&)> point_metric = [&](const std::string& pid) -> MetricPtr {
    auto it = glued_at.find(pid);
    if (it == glued_at.end()) return point_chart.at(pid);
    const GluingSpec& g = *it->second;
    return naive_glue(point_chart.at(pid), block_metric(g.block), g.t, g.gauge, tree.eps0);
  };
  block_metric = [&](const std::string& bid) -> MetricPtr {
    const BlockSpec& b = *blocks.at(bid);
    if (b.points.empty()) return b.metric;
    return point_metric(b.points.front().id);
  };
  for (const auto& p : tree.orbifold.points) out.charts[p.id] = point_metric(p.id);
  return out;
}

}  // namespace neckfol
