#pragma once

#include "neckfol/cmcsolve/solver.hpp"
#include "neckfol/foliation/riccati.hpp"

#include <optional>
#include <string>
#include <vector>

namespace neckfol {

struct FoliationLeaf {
  double s = 0.0;  // H = (n-1) / s
  EmbeddedLeaf leaf;
  IFTReport report;
  CmcCheck check;
};

struct FoliationConfig {
  double r0 = 0.125;        // local foliations cover s in [s_c / (1 + 2 r0), s_c (1 + 2 r0)]
  int local_steps = 2;       // leaves on each side of the center
  double grid_ratio = 0.0;   // global s-grid ratio; 0 means 1 + r0
  bool weld = true;          // re-derive each global leaf from its neighbor's equidistant
  double weld_tol = 1e-5;
  std::string checkpoint_dir;  // empty: no checkpointing
  CmcConfig cmc;
  RiccatiOptions riccati;
};

// Ordered leaves with the separation function of each adjacent pair: leaf k+1
// as a normal graph over leaf k.
struct Foliation {
  std::vector<FoliationLeaf> leaves;
  std::vector<Vec> separations;
  double s_min = 0.0, s_max = 0.0;
  // Per adjacent pair: min and max of w / (s' - s).
  std::vector<double> min_slope, max_slope;
  // Per global leaf: sup normal height of the welded leaf over the direct one.
  std::vector<double> weld_defect;
  // min over nodes of |x| per leaf, strictly increasing.
  std::vector<double> min_radius;
};

// Equidistants of a CMC center leaf perturbed to H = (n-1)/s. Throws NotCMC,
// LeafCrossing, and solver errors.
Foliation local_foliate(const EmbeddedLeaf& center, const GroupAction& group, const FoliationConfig& config = {});

// Coordinate spheres (radius matched to the target mean curvature) on a geometric
// grid from rho_in to rho_out, each solved to a CMC leaf, then welded and checked
// for nesting. Throws InvalidArgument for an
// empty annulus, LeafCrossing, and per-leaf errors tagged with s.
Foliation global_foliate(MetricPtr metric, CloudPtr cloud, const GroupAction& group, double rho_in, double rho_out,
                         const FoliationConfig& config = {});

// Computes separations, slopes and radii; throws LeafCrossing on a non-positive separation.
void verify_nesting(Foliation& f, const GeodesicOptions& geo = {});

inline constexpr std::uint32_t kFoliationCacheKind = 0x464F4C49;  // "FOLI"
inline constexpr std::uint32_t kFoliationCacheVersion = 1;

// Writes an index (s values, reports' key numbers) plus one leaf cache per leaf into dir.
void save_foliation(const std::string& dir, const Foliation& f);
Foliation load_foliation(const std::string& dir, CloudPtr cloud, MetricPtr metric);

}  // namespace neckfol
