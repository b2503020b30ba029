#include "doctest.h"
#include "neckfol/core/error.hpp"
#include "neckfol/orchestrator/config.hpp"
#include "neckfol/orchestrator/pipeline.hpp"

#include <filesystem>
#include <fstream>

using namespace neckfol;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("neckfol_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json flat_config(const fs::path& out) {
  return {{"metric", {{"kind", "builtin"}, {"spec", "flat_cone{n=4,group=Z2}"}}},
          {"annulus", {{"rho_in", 0.5}, {"rho_out", 2.0}}},
          {"discretization", {{"resolution", "coarse"}, {"seed", 5}}},
          {"coords", {{"expect_profile", false}}},
          {"output", {{"dir", out.string()}}}};
}

const CheckItem& find(const RunReport& r, const std::string& prefix) {
  for (const auto& c : r.checks)
    if (c.name.rfind(prefix, 0) == 0) return c;
  FAIL("no check named " << prefix);
  static CheckItem none;
  return none;
}

}  // namespace

TEST_CASE("config parsing and validation") {
  const fs::path dir = scratch("config");
  SUBCASE("unknown keys are rejected") {
    json j = flat_config(dir);
    j["tolerances"] = {{"cmc_tolerance", 1e-8}};
    CHECK_THROWS_AS(config_from_json(j), Error);
  }
  SUBCASE("missing tree file fails before any computation") {
    json j = {{"metric", {{"kind", "tree"}, {"tree_file", "absent.json"}, {"point", "p"}}}};
    try {
      validate(config_from_json(j, dir.string()));
      FAIL("expected ConfigError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConfigError);
    }
  }
  SUBCASE("stage order") {
    json j = flat_config(dir);
    j["stages"] = {"coords", "glue"};
    CHECK_THROWS_AS(validate(config_from_json(j)), Error);
  }
  SUBCASE("resolution presets") {
    json j = flat_config(dir);
    j["discretization"]["resolution"] = "fine";
    CHECK(config_from_json(j).node_count == 3000);
    j["discretization"]["resolution"] = "ultra";
    CHECK_THROWS_AS(config_from_json(j), Error);
  }
  SUBCASE("hash ignores output settings and round-trips") {
    const RunConfig a = config_from_json(flat_config(dir));
    RunConfig b = a;
    b.out_dir = "elsewhere";
    b.workers = 4;
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    CHECK(config_hash(config_from_json(config_to_json(a))) == config_hash(a));
    b.seed = 6;
    CHECK(config_hash(a) != config_hash(b));
  }
}

TEST_CASE("u-shape detection") {
  std::vector<DecaySample> s;
  for (int i = 0; i < 9; ++i) {
    const double r = 0.01 * std::pow(2.0, i);
    s.push_back({r, 1e-4 * std::pow(r, -2) + 1e-2 * r * r});
  }
  CHECK(u_shaped(s));
  std::vector<DecaySample> mono(s.begin(), s.begin() + 4);
  CHECK_FALSE(u_shaped(mono));
  std::vector<DecaySample> flat(5, DecaySample{1.0, 1.0});
  for (int i = 0; i < 5; ++i) flat[static_cast<std::size_t>(i)].rho = i + 1.0;
  CHECK_FALSE(u_shaped(flat));
}

TEST_CASE("flat cone pipeline") {
  const fs::path out = scratch("flat");
  const RunConfig cfg = config_from_json(flat_config(out));
  const RunReport r = run_pipeline(cfg, "coords");
  for (const auto& s : r.stages) {
    INFO(s.name << ": " << s.error);
    CHECK(s.status == "ok");
  }
  for (const auto& c : r.checks) {
    INFO(c.name << " measured " << c.measured << " threshold " << c.threshold << " " << c.detail);
    CHECK((c.passed || !c.asserted));
  }
  CHECK(r.ok());
  CHECK(find(r, "coords: integrated").measured < 1e-6);
  CHECK(find(r, "coords: cross term").measured < 1e-6);
  CHECK(find(r, "coords: lapse").measured < 1e-8);
  CHECK(find(r, "foliate: leaves have constant").measured < 1e-6);
  CHECK(fs::exists(out / "coords_report.json"));
  CHECK(fs::exists(out / "coords_sweep.csv"));
  CHECK(fs::exists(out / "foliation.csv"));
  CHECK(fs::exists(out / "glue_profile.csv"));

  std::ifstream in(out / "coords_report.json");
  const json j = json::parse(in);
  CHECK(j.at("ok").get<bool>());
  CHECK(j.at("config_hash").get<std::string>() == config_hash(cfg));
}
