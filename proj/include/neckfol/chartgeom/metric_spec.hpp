#pragma once

#include "neckfol/chartgeom/chart_metric.hpp"

#include <map>
#include <string>

namespace neckfol {

struct NamedSpec {
  std::string name;
  std::map<std::string, std::string> params;
};

// Parses "name{key=value,key=value}" (braces optional).
NamedSpec parse_named_spec(const std::string& text);

// Builtin metrics by name: flat_cone{n=4,group=Z2}, round_sphere_chart{n=4,group=Z2},
// eguchi_hanson{a=1.0}; optional r_min / r_max overrides.
MetricPtr make_metric(const std::string& text);

}  // namespace neckfol
