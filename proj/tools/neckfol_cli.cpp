// neckfol command line: runs pipeline stages from a JSON config and writes
// reports, CSV sweeps and caches under the output directory. Exit status is 0
// iff every asserted check passed.
#include "neckfol/core/error.hpp"
#include "neckfol/core/parallel.hpp"
#include "neckfol/orchestrator/config.hpp"
#include "neckfol/orchestrator/pipeline.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace neckfol;

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::string resolution;
};

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.workers) c.workers = *o.workers;
  if (o.seed) c.seed = *o.seed;
  if (!o.resolution.empty()) {
    c.resolution = o.resolution;
    c.node_count = RunConfig::preset_nodes(o.resolution);
  }
  return c;
}

void print(const RunReport& r) {
  for (const auto& s : r.stages) {
    std::printf("stage %-9s %-8s %8.1fs", s.name.c_str(), s.status.c_str(), s.seconds);
    if (!s.error.empty()) std::printf("  %s", s.error.c_str());
    std::printf("\n");
  }
  for (const auto& c : r.checks) {
    const char* tag = c.passed ? "PASS" : (c.asserted ? "FAIL" : "info");
    std::printf("%s  %s: %.3g (threshold %.3g)%s%s\n", tag, c.name.c_str(), c.measured, c.threshold,
                c.detail.empty() ? "" : "  ", c.detail.c_str());
  }
  std::printf("%s: %d asserted check(s) failed\n", r.ok() ? "ok" : "FAILED", r.failures());
}

int report_cmd(const Overrides& o) {
  const RunConfig c = resolve(o);
  int failed = 0, seen = 0;
  for (const char* name : {"glue", "foliate", "coords", "check", "spectrum"}) {
    const fs::path p = fs::path(c.out_dir) / (std::string(name) + "_report.json");
    if (!fs::exists(p)) continue;
    ++seen;
    std::ifstream in(p);
    const auto j = nlohmann::json::parse(in);
    const bool ok = j.at("ok").get<bool>();
    std::printf("%-9s %s  config %s  failures %d\n", name, ok ? "ok" : "FAILED",
                j.at("config_hash").get<std::string>().c_str(), j.at("failures").get<int>());
    for (const auto& s : j.at("stages"))
      for (const auto& [k, v] : s.at("scalars").items())
        if (v.is_number()) std::printf("    %s.%s = %.6g\n", s.at("name").get<std::string>().c_str(), k.c_str(), v.get<double>());
    if (!ok) ++failed;
  }
  if (seen == 0) {
    std::fprintf(stderr, "no reports in '%s'\n", c.out_dir.c_str());
    return 2;
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CMC neck foliations and neck coordinates on glued Einstein metrics"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "output directory");
  app.add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "node cloud seed");
  app.add_option("--resolution", o.resolution, "node count preset")
      ->check(CLI::IsMember({"coarse", "default", "fine"}));

  struct Sub {
    const char* name;
    const char* help;
    std::vector<std::string> stages;
  };
  const std::vector<Sub> subs{
      {"glue", "build the glued metric and its curvature profile", {"glue"}},
      {"foliate", "glue, then foliate the neck by CMC spheres", {"glue", "foliate"}},
      {"coords", "foliate, then build neck coordinates and fit the decay profile", {"glue", "foliate", "coords"}},
      {"spectrum", "spectral checks of the round Laplacian on the node cloud", {"spectrum"}},
  };
  for (const auto& s : subs) app.add_subcommand(s.name, s.help);
  app.add_subcommand("check", "identity and invariant checks (spectrum, Codazzi, Lichnerowicz, volume)");
  app.add_subcommand("report", "summarize reports already written to the output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "report") return report_cmd(o);
    RunConfig c = resolve(o);
    RunReport r;
    if (cmd == "check") {
      validate(c);
      set_workers(c.workers);
      fs::create_directories(c.out_dir);
      r = run_checks(c);
      write_report(r, (fs::path(c.out_dir) / "check_report.json").string());
    } else {
      for (const auto& s : subs)
        if (cmd == s.name) c.stages = s.stages;
      r = run_pipeline(c, cmd);
    }
    print(r);
    return r.ok() ? 0 : 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
