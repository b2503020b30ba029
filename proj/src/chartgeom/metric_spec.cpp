#include "neckfol/chartgeom/metric_spec.hpp"
#include "neckfol/chartgeom/models.hpp"
#include "neckfol/core/error.hpp"

#include <algorithm>
#include <cctype>

namespace neckfol {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\n");
  return s.substr(b, e - b + 1);
}

double number(const NamedSpec& spec, const std::string& key, double fallback) {
  auto it = spec.params.find(key);
  if (it == spec.params.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (...) {
    fail(ErrorCode::ConfigError, "parameter " + key + " of " + spec.name + " is not a number");
  }
}

}  // namespace

NamedSpec parse_named_spec(const std::string& text) {
  NamedSpec out;
  const std::string s = trim(text);
  const auto lb = s.find('{');
  if (lb == std::string::npos) {
    out.name = s;
    return out;
  }
  require(s.back() == '}', ErrorCode::ConfigError, "unbalanced braces in '" + text + "'");
  out.name = trim(s.substr(0, lb));
  const std::string body = s.substr(lb + 1, s.size() - lb - 2);
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto comma = body.find(',', pos);
    if (comma == std::string::npos) comma = body.size();
    const std::string item = trim(body.substr(pos, comma - pos));
    if (!item.empty()) {
      const auto eq = item.find('=');
      require(eq != std::string::npos, ErrorCode::ConfigError, "expected key=value in '" + text + "'");
      out.params[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
    }
    pos = comma + 1;
  }
  return out;
}

MetricPtr make_metric(const std::string& text) {
  const NamedSpec spec = parse_named_spec(text);
  const int n = static_cast<int>(number(spec, "n", 4));
  const std::string group = spec.params.count("group") ? spec.params.at("group") : "Z2";
  if (spec.name == "flat_cone") {
    return flat_cone(n, GroupAction::parse(n, group), number(spec, "r_min", 1e-3), number(spec, "r_max", 1e3));
  }
  if (spec.name == "round_sphere_chart") {
    return round_sphere_chart(n, GroupAction::parse(n, group), number(spec, "r_min", 1e-3),
                              number(spec, "r_max", 3.0));
  }
  if (spec.name == "eguchi_hanson") {
    const double a = number(spec, "a", 1.0);
    return eguchi_hanson(a, number(spec, "r_min_factor", 1.05), number(spec, "r_max", 1e4));
  }
  fail(ErrorCode::ConfigError, "unknown metric '" + spec.name + "'");
}

}  // namespace neckfol
