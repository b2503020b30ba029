#include "neckfol/cmcsolve/solver.hpp"

#include "neckfol/chartgeom/curvature.hpp"
#include "neckfol/core/error.hpp"
#include "neckfol/core/parallel.hpp"
#include "neckfol/spherecalc/tensor_calc.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace neckfol {

namespace {

double sup(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

struct ReducedJacobi {
  Eigen::PartialPivLU<Mat> lu;
  double inverse_norm = 0.0;
};

ReducedJacobi factor(const JacobiOperator& J, const InvariantReduction& red) {
  const Mat Jred = red.reduce_rows(jacobi_apply_dense(J, red.extension_matrix()));
  ReducedJacobi out{Eigen::PartialPivLU<Mat>(Jred), 0.0};
  const Mat inv = out.lu.inverse();
  out.inverse_norm = inv.cwiseAbs().rowwise().sum().maxCoeff();
  const double norm = Jred.cwiseAbs().rowwise().sum().maxCoeff();
  if (!std::isfinite(out.inverse_norm) || out.inverse_norm * norm > 1e10) {
    std::ostringstream os;
    os << "Jacobi operator is not invertible on invariant functions (condition ~ " << out.inverse_norm * norm << ")";
    fail(ErrorCode::NearSingular, os.str());
  }
  return out;
}

struct Iterate {
  EmbeddedLeaf leaf;
  Mat velocities;
};

Iterate graph_of(const EmbeddedLeaf& base, const Vec& w, double bound, const GeodesicOptions& geo) {
  const double s = sup(w);
  if (s >= bound) {
    std::ostringstream os;
    os << "CMC iterate has sup |w| = " << s << " beyond the normal collision bound " << bound;
    fail(ErrorCode::GraphCollision, os.str());
  }
  NormalFlow flow = normal_exponential(base, w, geo);
  return {induced_geometry(base.cloud(), base.ambient(), std::move(flow.positions)), std::move(flow.velocities)};
}

}  // namespace

CmcResult solve_cmc(const EmbeddedLeaf& leaf, double target_H, const GroupAction& group, const CmcConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  require(target_H > 0, ErrorCode::InvalidArgument, "target mean curvature must be positive (outward mean-convex leaves)");
  const InvariantReduction red(*leaf.cloud(), group);
  const double s = leaf.m() / target_H;
  const double tol = config.tol_rel * target_H;
  const double bound = collision_bound(leaf);

  IFTReport rep;
  rep.r0 = config.r0_fraction * s;
  const Eigen::Index N = leaf.size();
  Vec w = Vec::Zero(N);
  Vec residual = (leaf.mean_curvature().array() - target_H).matrix();
  rep.symmetry_drift = red.invariance_defect(residual);
  rep.initial_residual = sup(residual);
  rep.residuals.push_back(rep.initial_residual);

  if (rep.initial_residual <= tol) {
    // Already CMC: nothing to invert.
    rep.converged = true;
    rep.contract_holds = rep.contraction_certified = true;
    rep.final_residual = rep.initial_residual;
    rep.r = rep.r0;
    rep.w = w;
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {leaf, w, rep};
  }
  const JacobiOperator J0 = jacobi_operator(leaf);
  ReducedJacobi F = factor(J0, red);
  rep.c = F.inverse_norm;

  if (config.probe_remainder) {
    // Q(w) = H(Sigma(w)) - H(Sigma) + J w along the first Picard direction.
    Vec v = red.extend(F.lu.solve(red.reduce(residual)));
    if (sup(v) > 0) v /= sup(v);
    for (double eps : {0.02 * s, 0.01 * s, 0.005 * s}) {
      const Vec we = eps * v;
      const Iterate it = graph_of(leaf, we, bound, config.geodesic);
      const Vec Q = it.leaf.mean_curvature() - leaf.mean_curvature() + jacobi_apply(J0, we);
      rep.q = std::max(rep.q, sup(Q) / (eps * eps));
    }
    rep.r = rep.q > 0 ? std::min(rep.r0, 1.0 / (2.0 * rep.q * rep.c)) : rep.r0;
    rep.contract_holds = rep.initial_residual <= rep.r / (2.0 * rep.c);
  } else {
    rep.r = rep.r0;
    rep.contract_holds = true;
  }

  EmbeddedLeaf current = leaf;
  Mat velocities;
  int stalls = 0;
  while (sup(residual) > tol) {
    if (rep.iterations >= config.max_iterations) {
      std::ostringstream os;
      os << "CMC iteration did not reach " << tol << " in " << config.max_iterations << " steps (last residual "
         << sup(residual) << ")";
      fail(ErrorCode::ContractFailure, os.str());
    }
    const double drift = red.invariance_defect(residual);
    rep.symmetry_drift = std::max(rep.symmetry_drift, drift);
    if (drift > config.drift_tol * target_H + 1e-3 * sup(residual)) {
      std::ostringstream os;
      os << "mean curvature residual left the invariant subspace (defect " << drift << ")";
      fail(ErrorCode::GroupMismatch, os.str());
    }
    Vec dw;
    if (config.newton && rep.iterations > 0) {
      const ReducedJacobi Fk = factor(jacobi_operator(current), red);
      dw = red.extend(Fk.lu.solve(red.reduce(residual)));
      // Normal displacement of the current leaf per unit change of the base parameter.
      const ChartMetric& g = *leaf.ambient();
      for (Eigen::Index i = 0; i < N; ++i) {
        const SVec v = velocities.row(i).transpose();
        dw(i) /= current.normal(i).dot(g.eval(current.position(i)) * v);
      }
    } else {
      dw = red.extend(F.lu.solve(red.reduce(residual)));
    }
    w += dw;
    const Iterate next = graph_of(leaf, w, bound, config.geodesic);
    current = next.leaf;
    velocities = next.velocities;
    residual = (current.mean_curvature().array() - target_H).matrix();
    ++rep.iterations;
    const double prev = rep.residuals.back();
    rep.residuals.push_back(sup(residual));
    const double ratio = rep.residuals.back() / std::max(prev, 1e-300);
    rep.ratios.push_back(ratio);
    stalls = ratio >= 1.0 ? stalls + 1 : 0;
    if (stalls >= config.stall_limit) {
      std::ostringstream os;
      os << "CMC residual failed to contract for " << stalls << " consecutive steps (residual " << rep.residuals.back()
         << ")";
      fail(ErrorCode::ContractFailure, os.str());
    }
  }
  rep.converged = true;
  rep.final_residual = sup(residual);
  rep.contraction_certified = true;
  for (std::size_t k = 1; k < rep.ratios.size(); ++k)
    if (rep.ratios[k] > 0.5) rep.contraction_certified = false;
  rep.contract_violation_but_converged = !rep.contract_holds;
  rep.bound_constant = rep.initial_residual > 0 ? sup(w) / rep.initial_residual : 0.0;
  rep.w = w;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {current, w, rep};
}

CmcCheck cmc_posteriori_check(const EmbeddedLeaf& leaf, double tol_rel) {
  CmcCheck out;
  const Vec& H = leaf.mean_curvature();
  out.mean_H = H.mean();
  out.H_spread = sup((H.array() - out.mean_H).matrix());
  if (!(out.mean_H > 0) || out.H_spread > 10.0 * tol_rel * out.mean_H) {
    std::ostringstream os;
    os << "leaf mean curvature varies by " << out.H_spread << " around " << out.mean_H;
    fail(ErrorCode::NotCMC, os.str());
  }
  const int m = leaf.m();
  out.s = m / out.mean_H;
  double lam = 0.0;
  for (Eigen::Index i = 0; i < leaf.size(); ++i) lam += leaf.metric_frame(i).trace() / m;
  lam /= static_cast<double>(leaf.size());

  const SphereField ric = ricci_tensor(leaf.induced_metric());
  double R = 0.0;
  std::vector<double> scal(static_cast<std::size_t>(leaf.size()));
  for (Eigen::Index i = 0; i < leaf.size(); ++i) {
    scal[static_cast<std::size_t>(i)] = (leaf.metric_frame(i).inverse() * ric.frame_matrix(i)).trace();
    R += scal[static_cast<std::size_t>(i)];
  }
  R /= static_cast<double>(leaf.size());

  std::vector<double> a0(static_cast<std::size_t>(leaf.size())), rm(a0.size()), rd(a0.size()), ed(a0.size());
  parallel_for(a0.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t iu = b; iu < e; ++iu) {
      const auto i = static_cast<Eigen::Index>(iu);
      const SMat& g = leaf.metric_frame(i);
      const SMat hinv = g.inverse();
      const SMat A0 = leaf.second_form_frame(i) - g / out.s;
      a0[iu] = frame_norm(hinv, std::vector<double>(A0.data(), A0.data() + m * m), m, 2);
      rm[iu] = std::sqrt(std::max(0.0, curvature_at(*leaf.ambient(), leaf.position(i)).rm_norm2()));
      rd[iu] = (g / lam - SMat::Identity(m, m)).cwiseAbs().maxCoeff();
      const SMat D = ric.frame_matrix(i) - (R / m) * g;
      ed[iu] = frame_norm(hinv, std::vector<double>(D.data(), D.data() + m * m), m, 2) / std::abs(R / m);
    }
  });
  for (std::size_t i = 0; i < a0.size(); ++i) {
    out.a0_norm = std::max(out.a0_norm, a0[i]);
    out.rm_sup = std::max(out.rm_sup, rm[i]);
    out.roundness = std::max(out.roundness, rd[i]);
    out.einstein_deficit = std::max(out.einstein_deficit, ed[i]);
  }
  out.ratio = out.rm_sup > 0 ? out.a0_norm / out.rm_sup : 0.0;
  return out;
}

}  // namespace neckfol
