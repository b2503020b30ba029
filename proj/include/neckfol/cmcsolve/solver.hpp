#pragma once

#include "neckfol/cmcsolve/jacobi.hpp"
#include "neckfol/hypersurface/graph.hpp"

#include <vector>

namespace neckfol {

struct CmcConfig {
  double tol_rel = 1e-8;    // sup |H - target| <= tol_rel * target
  int max_iterations = 40;
  int stall_limit = 5;       // consecutive non-contracting steps before ContractFailure
  bool newton = false;       // refresh J at every iterate instead of freezing it at the base leaf
  double r0_fraction = 0.1;  // r0 = r0_fraction * s, s = (n-1) / target
  bool probe_remainder = true;
  double drift_tol = 1e-6;   // allowed non-invariant part of the residual, relative to target
  GeodesicOptions geodesic;
};

// Constants and history of the fixed-point iteration w -> w + J^{-1}(H(Sigma(w)) - target).
struct IFTReport {
  double q = 0.0;  // fitted ||Q(w)|| <= q ||w||^2
  double c = 0.0;  // ||J^{-1}|| on invariant functions, sup norm (0: leaf was already CMC)
  double r0 = 0.0;
  double r = 0.0;  // min(r0, 1 / (2 q c))
  double initial_residual = 0.0;
  double final_residual = 0.0;
  std::vector<double> residuals;  // sup |H - target| before each update
  std::vector<double> ratios;
  bool contract_holds = false;         // ||Phi(0)|| <= r / (2c)
  bool contraction_certified = false;  // every ratio after the first <= 1/2
  bool contract_violation_but_converged = false;
  bool converged = false;
  int iterations = 0;
  double bound_constant = 0.0;  // ||w|| / ||Phi(0)||
  double symmetry_drift = 0.0;
  double seconds = 0.0;
  Vec w;
};

struct CmcResult {
  EmbeddedLeaf leaf;
  Vec w;
  IFTReport report;
};

// Sigma(w) with H = target_H, w Gamma-invariant. Throws ContractFailure,
// NearSingular (J not invertible on invariant functions), GraphCollision,
// GroupMismatch (residual drifts out of the invariant subspace).
CmcResult solve_cmc(const EmbeddedLeaf& leaf, double target_H, const GroupAction& group, const CmcConfig& config = {});

struct CmcCheck {
  double s = 0.0;          // (n-1) / mean H
  double mean_H = 0.0;
  double H_spread = 0.0;   // sup |H - mean H|
  double a0_norm = 0.0;    // sup |A - g_Sigma / s|
  double rm_sup = 0.0;     // sup of the ambient |Rm| on the leaf
  double ratio = 0.0;      // a0_norm / rm_sup (0 when rm_sup = 0)
  double roundness = 0.0;  // sup |g_Sigma / lambda - round| in the round frame, lambda optimal constant
  double einstein_deficit = 0.0;  // sup |Ric(g_Sigma) - (R/m) g_Sigma|_{g_Sigma} / (R/m), R the mean scalar curvature
};

// A posteriori control of a CMC leaf. Throws NotCMC when H varies by more than
// 10 * tol_rel * mean H.
CmcCheck cmc_posteriori_check(const EmbeddedLeaf& leaf, double tol_rel = 1e-8);

}  // namespace neckfol
