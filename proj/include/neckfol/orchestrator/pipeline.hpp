#pragma once

#include "neckfol/neckcoords/coordinates.hpp"
#include "neckfol/neckcoords/decay.hpp"
#include "neckfol/orchestrator/config.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace neckfol {

// One pass/fail entry with its measured value. Items that are not asserted are
// reported but do not affect the exit status; expected failures (an error the
// configuration must raise) pass when the error occurs.
struct CheckItem {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
  bool asserted = true;
  bool expected_failure = false;
};

struct StageReport {
  std::string name;
  std::string status = "skipped";  // ok | failed | skipped
  double seconds = 0.0;
  std::string error;
  std::map<std::string, double> scalars;
  std::vector<std::string> artifacts;
};

struct RunReport {
  std::string command;
  std::string config_hash;
  std::vector<StageReport> stages;
  std::vector<CheckItem> checks;

  // True when every stage that ran succeeded and every asserted item passed.
  bool ok() const;
  int failures() const;
  nlohmann::json to_json() const;
};

// Everything the stages share.
struct PipelineState {
  RunConfig config;
  MetricPtr metric;
  GroupAction group;
  double scale = 0.0;        // absolute scale T of the bubble (0 for builtin metrics)
  double rho1 = 0.0, rho2 = 0.0;
  double rho_in = 0.0, rho_out = 0.0;
  CloudPtr cloud;
  std::optional<Foliation> foliation;
  std::vector<LapseSolution> lapses;
  std::optional<CoordinateMap> map;
  std::vector<DecaySample> sweep;               // l = 0 norms
  std::vector<std::vector<double>> sweep_orders;  // norms for l = 0..max_order per sample
  std::optional<DecayProfile> profile;
  std::string fit_error;
  double rho_bar = 0.0;
};

// Builds the chart metric and the neck scales (no files written).
PipelineState prepare(const RunConfig& config);

// Stage bodies. Each fills its StageReport, appends check items and writes its
// artifacts into config.out_dir. Errors propagate.
void stage_glue(PipelineState& st, StageReport& rep, std::vector<CheckItem>& items);
void stage_foliate(PipelineState& st, StageReport& rep, std::vector<CheckItem>& items);
void stage_coords(PipelineState& st, StageReport& rep, std::vector<CheckItem>& items);
void stage_spectrum(PipelineState& st, StageReport& rep, std::vector<CheckItem>& items);

// Runs config.stages in order; a failing stage is recorded with its name and the
// remaining stages are skipped. Writes <out>/<command>_report.json.
RunReport run_pipeline(const RunConfig& config, const std::string& command = "pipeline");

// Property battery over the configured discretization: spectral gap, harmonic
// eigenvalues, resonance of the full space, Codazzi and Gauss residuals, Riccati
// cross-check, Lichnerowicz identity, traceless Rayleigh bound, volume ratio.
// Failures become report entries.
RunReport run_checks(const RunConfig& config);

// U shape of a sweep: non-increasing up to one step before the minimum,
// non-decreasing from one step after it, and both ends at least `contrast`
// times the minimum.
bool u_shaped(const std::vector<DecaySample>& s, double contrast = 2.0);

void write_report(const RunReport& report, const std::string& path);

}  // namespace neckfol
