#pragma once

#include "neckfol/chartgeom/chart_metric.hpp"

#include <map>
#include <string>
#include <vector>

namespace neckfol {

// chi = 1 on [0,1], 0 on [2, inf), phi(2-s)/(phi(2-s)+phi(s-1)) between, phi(u) = exp(-1/u).
double cutoff_chi(double s, double* d1 = nullptr, double* d2 = nullptr);

// g = chi(t^{-1/4} r) * phi^T g_b(phi x / sqrt t) phi + (1 - chi) * g_o:
// the rescaled ALE metric t * g_b on r <= t^{1/4}, the orbifold metric on r >= 2 t^{1/4}.
MetricPtr naive_glue(MetricPtr orbifold, MetricPtr ale, double t, const SMat& gauge, double eps0 = 1.0);

struct SingularPointSpec {
  std::string id;
  MetricPtr chart;  // chart of the block around this point; its group is the point's group
};

struct BlockSpec {
  std::string id;
  std::vector<SingularPointSpec> points;
  MetricPtr metric;  // ALE blocks: the chart at infinity (ignored for the orbifold block)
};

struct GluingSpec {
  std::string block;   // ALE block id
  std::string target;  // singular point id in another block
  double t = 0.0;
  SMat gauge;  // empty means identity
};

struct GluingTree {
  BlockSpec orbifold;
  std::vector<BlockSpec> ale_blocks;
  std::vector<GluingSpec> gluings;
  double eps0 = 1.0;
};

struct TreeMetric {
  // Glued chart around each singular point of the orbifold block.
  std::map<std::string, MetricPtr> charts;
  // Absolute scale T_j (product of relative scales to the root) per ALE block.
  std::map<std::string, double> absolute_scales;
  // Depth of each ALE block below the root.
  std::map<std::string, int> depth;
};

// Deepest-first naive gluing along the tree.
TreeMetric build_tree_metric(const GluingTree& tree);

}  // namespace neckfol
