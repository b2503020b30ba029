#include "neckfol/orchestrator/config.hpp"

#include "neckfol/chartgeom/metric_spec.hpp"
#include "neckfol/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

namespace neckfol {

using nlohmann::json;

int RunConfig::preset_nodes(const std::string& preset) {
  if (preset == "coarse") return 1000;
  if (preset == "default") return 2000;
  if (preset == "fine") return 3000;
  fail(ErrorCode::ConfigError, "unknown resolution preset '" + preset + "' (coarse, default, fine)");
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) fail(ErrorCode::ConfigError, "unknown key '" + k + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

RunConfig config_from_json(const json& j, const std::string& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  check_keys(j, {"metric", "eps", "eps0", "discretization", "annulus", "stages", "tolerances", "coords", "output"},
             "config");
  if (j.contains("metric")) {
    const json& m = j.at("metric");
    check_keys(m, {"kind", "spec", "orbifold", "ale", "t", "gauge", "tree_file", "point"}, "metric");
    read(m, "kind", c.metric.kind);
    read(m, "spec", c.metric.spec);
    read(m, "orbifold", c.metric.orbifold);
    read(m, "ale", c.metric.ale);
    read(m, "t", c.metric.t);
    read(m, "gauge", c.metric.gauge);
    read(m, "tree_file", c.metric.tree_file);
    read(m, "point", c.metric.point);
  }
  read(j, "eps", c.eps);
  read(j, "eps0", c.eps0);
  if (j.contains("discretization")) {
    const json& d = j.at("discretization");
    check_keys(d, {"resolution", "node_count", "seed", "degree", "radial_nodes", "grid_ratio"}, "discretization");
    read(d, "resolution", c.resolution);
    c.node_count = RunConfig::preset_nodes(c.resolution);
    read(d, "node_count", c.node_count);
    read(d, "seed", c.seed);
    read(d, "degree", c.degree);
    read(d, "radial_nodes", c.radial_nodes);
    read(d, "grid_ratio", c.grid_ratio);
  }
  if (j.contains("annulus")) {
    check_keys(j.at("annulus"), {"rho_in", "rho_out"}, "annulus");
    read(j.at("annulus"), "rho_in", c.rho_in);
    read(j.at("annulus"), "rho_out", c.rho_out);
  }
  read(j, "stages", c.stages);
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    check_keys(t, {"cmc", "weld", "weld_tol", "consistency", "cross_term"}, "tolerances");
    read(t, "cmc", c.cmc_tol);
    read(t, "weld", c.weld);
    read(t, "weld_tol", c.weld_tol);
    read(t, "consistency", c.consistency_tol);
    read(t, "cross_term", c.cross_tol);
  }
  if (j.contains("coords")) {
    check_keys(j.at("coords"), {"max_order", "expect_profile"}, "coords");
    read(j.at("coords"), "max_order", c.max_order);
    read(j.at("coords"), "expect_profile", c.expect_profile);
  }
  if (j.contains("output")) {
    check_keys(j.at("output"), {"dir", "cache_dir", "workers"}, "output");
    read(j.at("output"), "dir", c.out_dir);
    read(j.at("output"), "cache_dir", c.cache_dir);
    read(j.at("output"), "workers", c.workers);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, "config '" + path + "' is not valid JSON: " + e.what());
  }
  const auto dir = std::filesystem::absolute(path).parent_path().string();
  return config_from_json(j, dir);
}

json config_to_json(const RunConfig& c) {
  json j;
  j["metric"] = {{"kind", c.metric.kind}, {"spec", c.metric.spec},   {"orbifold", c.metric.orbifold},
                 {"ale", c.metric.ale},   {"t", c.metric.t},         {"gauge", c.metric.gauge},
                 {"tree_file", c.metric.tree_file}, {"point", c.metric.point}};
  j["eps"] = c.eps;
  j["eps0"] = c.eps0;
  j["discretization"] = {{"resolution", c.resolution}, {"node_count", c.node_count},   {"seed", c.seed},
                         {"degree", c.degree},         {"radial_nodes", c.radial_nodes}, {"grid_ratio", c.grid_ratio}};
  j["annulus"] = {{"rho_in", c.rho_in}, {"rho_out", c.rho_out}};
  j["stages"] = c.stages;
  j["tolerances"] = {{"cmc", c.cmc_tol},
                     {"weld", c.weld},
                     {"weld_tol", c.weld_tol},
                     {"consistency", c.consistency_tol},
                     {"cross_term", c.cross_tol}};
  j["coords"] = {{"max_order", c.max_order}, {"expect_profile", c.expect_profile}};
  j["output"] = {{"dir", c.out_dir}, {"cache_dir", c.cache_dir}, {"workers", c.workers}};
  return j;
}

void validate(const RunConfig& c) {
  const std::set<std::string> kinds{"builtin", "glued", "tree"};
  require(kinds.count(c.metric.kind) == 1, ErrorCode::ConfigError, "metric.kind must be builtin, glued or tree");
  if (c.metric.kind == "builtin") {
    require(!c.metric.spec.empty(), ErrorCode::ConfigError, "builtin metric needs metric.spec");
    require(c.rho_in > 0 && c.rho_out > c.rho_in, ErrorCode::ConfigError,
            "builtin metrics need an explicit annulus with 0 < rho_in < rho_out");
  }
  if (c.metric.kind == "glued") {
    require(c.metric.t > 0, ErrorCode::ConfigError, "metric.t must be positive");
    require(c.metric.gauge.empty() || c.metric.gauge.size() == 16, ErrorCode::ConfigError, "gauge must have 16 entries");
  }
  if (c.metric.kind == "tree") {
    require(!c.metric.tree_file.empty() && !c.metric.point.empty(), ErrorCode::ConfigError,
            "tree metrics need metric.tree_file and metric.point");
    const auto p = std::filesystem::path(c.base_dir) / c.metric.tree_file;
    require(std::filesystem::exists(p), ErrorCode::ConfigError, "tree file '" + p.string() + "' does not exist");
  }
  require(c.eps > 0 && c.eps0 > 0, ErrorCode::ConfigError, "eps and eps0 must be positive");
  require(c.node_count > 0 && c.degree > 0 && c.radial_nodes > 0, ErrorCode::ConfigError,
          "discretization sizes must be positive");
  require(c.grid_ratio > 1.0, ErrorCode::ConfigError, "grid_ratio must exceed 1");
  require(c.cmc_tol > 0 && c.weld_tol > 0 && c.consistency_tol > 0 && c.cross_tol > 0, ErrorCode::ConfigError,
          "tolerances must be positive");
  require(c.max_order >= 0 && c.max_order <= 3, ErrorCode::ConfigError, "coords.max_order must be in [0, 3]");
  require(c.workers >= 1, ErrorCode::ConfigError, "workers must be at least 1");
  if (c.rho_in != 0 || c.rho_out != 0)
    require(c.rho_in > 0 && c.rho_out > c.rho_in, ErrorCode::ConfigError, "annulus needs 0 < rho_in < rho_out");
  // Each stage needs the ones before it.
  const std::vector<std::string> order{"glue", "foliate", "coords"};
  std::set<std::string> seen;
  for (const auto& s : c.stages) {
    if (s == "checks" || s == "spectrum") continue;
    auto it = std::find(order.begin(), order.end(), s);
    require(it != order.end(), ErrorCode::ConfigError, "unknown stage '" + s + "'");
    for (auto p = order.begin(); p != it; ++p)
      require(seen.count(*p) == 1, ErrorCode::ConfigError, "stage '" + s + "' requires '" + *p + "' before it");
    seen.insert(s);
  }
}

std::string config_hash(const RunConfig& c) {
  json j = config_to_json(c);
  j.erase("output");
  j["metric"]["tree_file"] = c.metric.tree_file.empty()
                                 ? std::string()
                                 : std::filesystem::weakly_canonical(std::filesystem::path(c.base_dir) / c.metric.tree_file).string();
  const std::string text = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

GluingTree load_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot open tree file '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, "tree file '" + path + "' is not valid JSON: " + e.what());
  }
  check_keys(j, {"eps0", "orbifold", "ale", "gluings"}, "tree");
  auto block = [](const json& b, bool ale) {
    check_keys(b, {"id", "metric", "points"}, "tree block");
    BlockSpec out;
    read(b, "id", out.id);
    if (ale) {
      std::string spec;
      read(b, "metric", spec);
      out.metric = make_metric(spec);
    }
    if (b.contains("points"))
      for (const auto& p : b.at("points")) {
        check_keys(p, {"id", "chart"}, "singular point");
        SingularPointSpec sp;
        read(p, "id", sp.id);
        std::string chart;
        read(p, "chart", chart);
        sp.chart = make_metric(chart);
        out.points.push_back(sp);
      }
    return out;
  };
  GluingTree tree;
  read(j, "eps0", tree.eps0);
  require(j.contains("orbifold"), ErrorCode::ConfigError, "tree needs an orbifold block");
  tree.orbifold = block(j.at("orbifold"), false);
  if (j.contains("ale"))
    for (const auto& b : j.at("ale")) tree.ale_blocks.push_back(block(b, true));
  if (j.contains("gluings"))
    for (const auto& g : j.at("gluings")) {
      check_keys(g, {"block", "target", "t", "gauge"}, "gluing");
      GluingSpec gs;
      read(g, "block", gs.block);
      read(g, "target", gs.target);
      read(g, "t", gs.t);
      std::vector<double> gauge;
      read(g, "gauge", gauge);
      if (!gauge.empty()) {
        const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(gauge.size()))));
        require(n * n == static_cast<int>(gauge.size()), ErrorCode::ConfigError, "gauge must be square");
        gs.gauge = SMat(n, n);
        for (int r = 0; r < n; ++r)
          for (int q = 0; q < n; ++q) gs.gauge(r, q) = gauge[static_cast<std::size_t>(r * n + q)];
      }
      tree.gluings.push_back(gs);
    }
  return tree;
}

}  // namespace neckfol
