#pragma once

#include "neckfol/hypersurface/graph.hpp"

#include <vector>

namespace neckfol {

// Shape operator S(X) = nabla_X N of an equidistant leaf, per node, in a frame
// transported parallel along the normal geodesic (columns: ambient vectors).
struct RiccatiState {
  double offset = 0.0;  // arc parameter from the start leaf
  std::vector<SMat> S;
  std::vector<SMat> frame;
  Vec H;  // tr S
  Vec K;  // tr of X -> Rm(X, N) N, i.e. Ric(N, N)
};

struct EquidistantLeaf {
  double offset = 0.0;
  EmbeddedLeaf leaf;
  RiccatiState riccati;
  double trace_defect = 0.0;  // sup |tr S - H of the recomputed leaf|
  double shape_defect = 0.0;  // sup |S - A(e, e)| / sup |S|, A from the recomputed leaf
};

struct RiccatiOptions {
  GeodesicOptions geodesic;
  double focal_floor = 1e-8;  // FocalPoint once a principal curvature exceeds 1 / focal_floor
};

// Integrates (x, N, frame, S) along the normal geodesics with
// dS/ds = -(S^2 + Rm(., N) N), re-orthonormalizing the frame after every step,
// and recomputes each leaf directly from the flowed positions. Throws FocalPoint,
// DomainViolation, StepFailure.
std::vector<EquidistantLeaf> equidistant_evolve(const EmbeddedLeaf& start, const std::vector<double>& offsets,
                                                const RiccatiOptions& opt = {});

}  // namespace neckfol
