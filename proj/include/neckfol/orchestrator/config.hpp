#pragma once

#include "neckfol/chartgeom/gluing.hpp"

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace neckfol {

// Where the ambient chart comes from.
struct MetricConfig {
  std::string kind = "glued";  // builtin | glued | tree
  std::string spec;            // builtin: e.g. "flat_cone{n=4,group=Z2}"
  std::string orbifold = "flat_cone{n=4,group=Z2}";
  std::string ale = "eguchi_hanson{a=1.0}";
  double t = 1e-4;
  std::vector<double> gauge;  // n*n row-major rotation; empty is the identity
  std::string tree_file;      // tree: gluing tree file, relative to the config file
  std::string point;          // tree: singular point whose glued chart is used
};

struct RunConfig {
  MetricConfig metric;
  double eps = 0.25;  // neck annulus A(sqrt(T) / (8 eps), 8 eps)
  double eps0 = 1.0;

  std::string resolution = "default";
  int node_count = 2000;
  std::uint64_t seed = 1;
  int degree = 8;  // spectral basis degree
  int radial_nodes = 64;
  // Twelve leaves per octave resolves the gluing cutoff (it spans one octave in s).
  double grid_ratio = 1.0594630943592953;  // 2^(1/12)
  double rho_in = 0.0, rho_out = 0.0;  // 0: derived from the neck scales

  std::vector<std::string> stages{"glue", "foliate", "coords"};

  double cmc_tol = 1e-8;
  bool weld = true;
  double weld_tol = 1e-5;
  double consistency_tol = 1e-4;
  double cross_tol = 1e-5;
  int max_order = 2;
  bool expect_profile = true;  // assert the U-shaped sweep and the decay fit

  std::string out_dir = "neckfol_out";
  std::string cache_dir;  // empty: <out_dir>/cache
  int workers = 1;
  std::string base_dir = ".";  // directory of the config file

  // Node counts of the resolution presets.
  static int preset_nodes(const std::string& preset);
};

// Parses a JSON config; unknown keys are ConfigErrors. Relative paths resolve
// against the file's directory.
RunConfig load_config(const std::string& path);
RunConfig config_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
nlohmann::json config_to_json(const RunConfig& c);

// Checks referenced files, tolerances and stage order. Throws ConfigError.
void validate(const RunConfig& c);

// FNV-1a of the canonical JSON of the fields that affect results (not out_dir,
// cache_dir or workers), as 16 hex digits.
std::string config_hash(const RunConfig& c);

// Reads a gluing tree file (JSON): orbifold block with points, ALE blocks,
// gluings with relative scales and optional gauges.
GluingTree load_tree(const std::string& path);

}  // namespace neckfol
