#pragma once

#include "neckfol/foliation/foliation.hpp"
#include "neckfol/neckcoords/lapse.hpp"

#include <array>
#include <vector>

namespace neckfol {

struct CoordinateConfig {
  double consistency_tol = 1e-4;  // integrated vs pulled-back s^2 h_s, relative
  bool enforce_consistency = true;
  int max_order = 2;               // highest derivative order prepared for weighted norms (<= 3)
};

// Phi(s, x) on the foliation's s-grid, x ranging over the cloud's nodes.
// Node x follows the flow d/ds Phi = u N from the anchor leaf, where
// Phi(s_anchor, x) is the anchor leaf's own node x.
struct CoordinateMap {
  CloudPtr cloud;
  MetricPtr metric;
  std::vector<double> s;
  std::size_t anchor = 0;
  std::vector<Mat> positions;        // Phi(s_k, .), N x n
  std::vector<EmbeddedLeaf> pulled;  // leaf k parametrized by x
  std::vector<Vec> lapse;            // u_s(Phi(s_k, x))
  std::vector<std::vector<SMat>> integrated;  // s^2 h_s from d/ds(s^2 h_s) = 2 u A, frame components

  // Diagnostics per leaf.
  std::vector<double> consistency;  // sup |integrated - pulled-back| / sup |pulled-back|
  std::vector<double> cross_term;   // sup |g(d_s Phi, e)| / (|d_s Phi| |e|) over unit frame vectors e
  std::vector<double> speed_defect;  // sup | |d_s Phi|_g / u - 1 |
  std::vector<double> est3_defect;   // FD d_s A vs -Hess u + u A.A - u Rm(., N, N, .), relative (interior leaves)
  std::vector<double> h_deviation;   // sup |h_s - round| (frame entries)
  std::vector<double> u_deviation;   // sup |u - 1|

  // Components of Phi*g - g_e in the orthonormal frame (d_sigma, e_a / sigma)
  // of the rescaled cone, per leaf (N x (1 + m + m(m+1)/2)), and the sup of
  // their derivatives of order j in (tau = log s, x) per leaf.
  std::vector<Mat> deviation;
  std::vector<std::array<double, 4>> raw_derivative_sup;
  int prepared_order = -1;
};

// Builds Phi from the anchor leaf (index into f.leaves) and the lapses on every
// leaf, integrates s^2 h_s and prepares the deviation fields. The s-grid must be
// increasing with at least 5 leaves. Throws GridTooCoarse when the integrated and
// pulled-back metrics disagree beyond consistency_tol (if enforced).
CoordinateMap integrate_radial_metric(const Foliation& f, const std::vector<LapseSolution>& lapses, std::size_t anchor,
                                      const CoordinateConfig& config = {});

// || Phi_rho^* g / rho^2 - g_e ||_{C^l(A_e(1, 2))}, sampled on the grid leaves
// with s in [rho, 2 rho]: sum over j <= l of the sup of order-j derivatives.
// Throws DomainViolation when [rho, 2 rho] leaves the grid.
double weighted_norm(const CoordinateMap& map, double rho, int l);

// Weights of the derivative of order `order` at x0 from values at pts (Fornberg).
std::vector<double> fd_weights(double x0, const std::vector<double>& pts, int order);

}  // namespace neckfol
