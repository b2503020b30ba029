#include "neckfol/foliation/foliation.hpp"

#include "neckfol/core/binio.hpp"
#include "neckfol/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

namespace neckfol {

namespace {

double sup(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

std::string leaf_file(const std::string& dir, std::size_t k) {
  char name[32];
  std::snprintf(name, sizeof name, "leaf_%03zu.nfbc", k);
  return (std::filesystem::path(dir) / name).string();
}

FoliationLeaf finish_leaf(double s, CmcResult r, double tol_rel) {
  FoliationLeaf L{s, std::move(r.leaf), std::move(r.report), {}};
  L.check = cmc_posteriori_check(L.leaf, tol_rel);
  return L;
}

[[noreturn]] void rethrow_at(const Error& e, double s) {
  std::ostringstream os;
  os << "leaf s = " << s << ": " << e.what();
  throw Error(e.code(), os.str());
}

}  // namespace

void verify_nesting(Foliation& f, const GeodesicOptions& geo) {
  f.separations.clear();
  f.min_slope.clear();
  f.max_slope.clear();
  f.min_radius.clear();
  for (const auto& L : f.leaves) f.min_radius.push_back(L.leaf.positions().rowwise().norm().minCoeff());
  for (std::size_t k = 0; k + 1 < f.leaves.size(); ++k) {
    const FoliationLeaf& a = f.leaves[k];
    const FoliationLeaf& b = f.leaves[k + 1];
    const double ds = b.s - a.s;
    const Vec w = normal_height(a.leaf, b.leaf.positions(), Vec::Constant(a.leaf.size(), ds), geo);
    f.min_slope.push_back(w.minCoeff() / ds);
    f.max_slope.push_back(w.maxCoeff() / ds);
    f.separations.push_back(w);
    if (!(w.minCoeff() > 0.0)) {
      std::ostringstream os;
      os << "leaves s = " << a.s << " and s = " << b.s << " cross: min separation " << w.minCoeff();
      fail(ErrorCode::LeafCrossing, os.str());
    }
    if (!(f.min_radius[k + 1] > f.min_radius[k])) {
      std::ostringstream os;
      os << "min radius does not increase from s = " << a.s << " to s = " << b.s;
      fail(ErrorCode::LeafCrossing, os.str());
    }
  }
}

Foliation local_foliate(const EmbeddedLeaf& center, const GroupAction& group, const FoliationConfig& config) {
  require(config.r0 > 0 && config.r0 < 1.0 / 6.0, ErrorCode::InvalidArgument, "r0 must lie in (0, 1/6)");
  require(config.local_steps >= 1, ErrorCode::InvalidArgument, "local foliation needs at least one step per side");
  const CmcCheck c0 = cmc_posteriori_check(center, config.cmc.tol_rel);
  const double sc = c0.s;
  std::vector<double> svals, offsets;
  for (int k = config.local_steps; k >= 1; --k) svals.push_back(sc / (1.0 + 2.0 * config.r0 * k / config.local_steps));
  svals.push_back(sc);
  for (int k = 1; k <= config.local_steps; ++k) svals.push_back(sc * (1.0 + 2.0 * config.r0 * k / config.local_steps));
  for (double s : svals)
    if (s != sc) offsets.push_back(s - sc);
  const std::vector<EquidistantLeaf> eq = equidistant_evolve(center, offsets, config.riccati);

  Foliation f;
  for (double s : svals) {
    try {
      if (s == sc) {
        IFTReport rep;
        rep.converged = true;
        rep.initial_residual = rep.final_residual = c0.H_spread;
        f.leaves.push_back({sc, center, rep, c0});
        continue;
      }
      const EquidistantLeaf* src = nullptr;
      for (const auto& e : eq)
        if (e.offset == s - sc) src = &e;
      f.leaves.push_back(finish_leaf(s, solve_cmc(src->leaf, center.m() / s, group, config.cmc), config.cmc.tol_rel));
    } catch (const Error& e) {
      rethrow_at(e, s);
    }
  }
  f.s_min = svals.front();
  f.s_max = svals.back();
  verify_nesting(f, config.cmc.geodesic);
  return f;
}

namespace {

// Coordinate sphere whose mean H is m / s, by secant on log radius. Near a
// bolt the coordinate radius and s differ by O(1) factors.
EmbeddedLeaf matched_sphere(const CloudPtr& cloud, const MetricPtr& metric, double s) {
  const int m = cloud->m();
  const double lo = metric->r_min() * (1 + 1e-3), hi = metric->r_max() * (1 - 1e-3);
  auto clamp = [&](double r) { return std::min(hi, std::max(lo, r)); };
  auto defect = [&](const EmbeddedLeaf& L) { return std::log(L.mean_curvature().mean() * s / m); };
  double r0 = clamp(s);
  EmbeddedLeaf L0 = coordinate_sphere(cloud, metric, r0);
  double f0 = defect(L0);
  if (std::abs(f0) < 1e-3) return L0;
  double r1 = clamp(r0 * (f0 > 0 ? 1.05 : 0.95));
  EmbeddedLeaf L1 = coordinate_sphere(cloud, metric, r1);
  double f1 = defect(L1);
  for (int it = 0; it < 40 && std::abs(f1) > 1e-6 && f1 != f0; ++it) {
    const double l2 = std::log(r1) - f1 * (std::log(r1) - std::log(r0)) / (f1 - f0);
    r0 = r1;
    f0 = f1;
    L0 = L1;
    r1 = clamp(std::exp(std::clamp(l2, std::log(r1) - 0.5, std::log(r1) + 0.5)));
    L1 = coordinate_sphere(cloud, metric, r1);
    f1 = defect(L1);
  }
  return std::abs(f1) < std::abs(f0) ? L1 : L0;
}

}  // namespace

Foliation global_foliate(MetricPtr metric, CloudPtr cloud, const GroupAction& group, double rho_in, double rho_out,
                         const FoliationConfig& config) {
  require(rho_in > 0 && rho_in < rho_out, ErrorCode::InvalidArgument, "annulus needs 0 < rho_in < rho_out");
  const double ratio = config.grid_ratio > 0 ? config.grid_ratio : 1.0 + config.r0;
  require(ratio > 1.0, ErrorCode::InvalidArgument, "grid ratio must exceed 1");
  const int steps = std::max(1, static_cast<int>(std::ceil(std::log(rho_out / rho_in) / std::log(ratio) - 1e-9)));
  const double q = std::pow(rho_out / rho_in, 1.0 / steps);
  std::vector<double> svals;
  for (int k = 0; k <= steps; ++k) svals.push_back(k == steps ? rho_out : rho_in * std::pow(q, k));
  if (!config.checkpoint_dir.empty()) std::filesystem::create_directories(config.checkpoint_dir);

  const int m = cloud->m();
  Foliation f;
  f.s_min = rho_in;
  f.s_max = rho_out;
  for (std::size_t k = 0; k < svals.size(); ++k) {
    const double s = svals[k];
    try {
      const std::string path = config.checkpoint_dir.empty() ? "" : leaf_file(config.checkpoint_dir, k);
      if (!path.empty() && std::filesystem::exists(path)) {
        EmbeddedLeaf L = load_leaf(path, cloud, metric);
        const double H = L.mean_curvature().mean();
        if (std::abs(H * s / m - 1.0) < 1e-6) {
          IFTReport rep;
          rep.converged = true;
          rep.final_residual = sup((L.mean_curvature().array() - m / s).matrix());
          f.leaves.push_back({s, L, rep, cmc_posteriori_check(L, config.cmc.tol_rel)});
          continue;
        }
      }
      f.leaves.push_back(
          finish_leaf(s, solve_cmc(matched_sphere(cloud, metric, s), m / s, group, config.cmc), config.cmc.tol_rel));
      if (!path.empty()) save_leaf(path, f.leaves.back().leaf);
    } catch (const Error& e) {
      rethrow_at(e, s);
    }
  }
  if (config.weld) {
    // The proof's uniqueness argument: the CMC leaf grown from the neighbor's
    // equidistant must be the directly solved one.
    f.weld_defect.push_back(0.0);
    for (std::size_t k = 1; k < f.leaves.size(); ++k) {
      const FoliationLeaf& prev = f.leaves[k - 1];
      const FoliationLeaf& cur = f.leaves[k];
      try {
        const auto eq = equidistant_evolve(prev.leaf, {cur.s - prev.s}, config.riccati);
        const CmcResult grown = solve_cmc(eq.front().leaf, m / cur.s, group, config.cmc);
        const Vec d = normal_height(cur.leaf, grown.leaf.positions(), Vec::Zero(cur.leaf.size()), config.cmc.geodesic);
        f.weld_defect.push_back(sup(d));
      } catch (const Error& e) {
        rethrow_at(e, cur.s);
      }
      if (f.weld_defect.back() > config.weld_tol * cur.s) {
        std::ostringstream os;
        os << "leaf s = " << cur.s << " grown from s = " << prev.s << " differs from the direct solve by "
           << f.weld_defect.back();
        fail(ErrorCode::LeafCrossing, os.str());
      }
    }
  }
  verify_nesting(f, config.cmc.geodesic);
  return f;
}

void save_foliation(const std::string& dir, const Foliation& f) {
  std::filesystem::create_directories(dir);
  BinWriter w((std::filesystem::path(dir) / "foliation.nfbc").string(), kFoliationCacheKind, kFoliationCacheVersion);
  w.f64(f.s_min);
  w.f64(f.s_max);
  w.u64(f.leaves.size());
  for (std::size_t k = 0; k < f.leaves.size(); ++k) {
    const FoliationLeaf& L = f.leaves[k];
    w.f64(L.s);
    w.i64(L.report.iterations);
    w.f64(L.report.initial_residual);
    w.f64(L.report.final_residual);
    w.f64(L.report.q);
    w.f64(L.report.c);
    save_leaf(leaf_file(dir, k), L.leaf);
  }
  w.close();
}

Foliation load_foliation(const std::string& dir, CloudPtr cloud, MetricPtr metric) {
  BinReader r((std::filesystem::path(dir) / "foliation.nfbc").string(), kFoliationCacheKind, kFoliationCacheVersion);
  Foliation f;
  f.s_min = r.f64();
  f.s_max = r.f64();
  const auto count = r.u64();
  require(count < 100000, ErrorCode::IoError, "foliation index is malformed");
  for (std::uint64_t k = 0; k < count; ++k) {
    FoliationLeaf L{r.f64(), EmbeddedLeaf{}, {}, {}};
    L.report.iterations = static_cast<int>(r.i64());
    L.report.initial_residual = r.f64();
    L.report.final_residual = r.f64();
    L.report.q = r.f64();
    L.report.c = r.f64();
    L.report.converged = true;
    L.leaf = load_leaf(leaf_file(dir, static_cast<std::size_t>(k)), cloud, metric);
    L.check = cmc_posteriori_check(L.leaf, 1e-6);
    f.leaves.push_back(std::move(L));
  }
  return f;
}

}  // namespace neckfol
