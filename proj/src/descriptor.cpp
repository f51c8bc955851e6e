#include "tpqi/descriptor.hpp"

namespace tpqi {

std::string to_string(Variant v) {
  switch (v) {
  case Variant::vpt: return "vpt";
  case Variant::curvature_only: return "curvature";
  case Variant::distance_only: return "distance";
  case Variant::linear_error: return "linear";
  }
  return "";
}

std::string to_string(DistanceOption o) {
  switch (o) {
  case DistanceOption::norm_first: return "norm_first";
  case DistanceOption::norm_second: return "norm_second";
  case DistanceOption::sum_of_norms: return "sum_of_norms";
  case DistanceOption::norm_of_sum: return "norm_of_sum";
  case DistanceOption::point_to_line: return "point_to_line";
  }
  return "";
}

Variant parse_variant(const std::string& s) {
  if (s == "vpt") return Variant::vpt;
  if (s == "curvature" || s == "curvature_only") return Variant::curvature_only;
  if (s == "distance" || s == "distance_only") return Variant::distance_only;
  if (s == "linear" || s == "linear_error") return Variant::linear_error;
  throw ConfigError("unknown descriptor '" + s + "' (expected vpt, curvature, distance or linear)");
}

DistanceOption parse_distance_option(const std::string& s) {
  for (auto o : {DistanceOption::norm_first, DistanceOption::norm_second,
                 DistanceOption::sum_of_norms, DistanceOption::norm_of_sum,
                 DistanceOption::point_to_line})
    if (s == to_string(o)) return o;
  throw ConfigError("unknown distance option '" + s + "'");
}

} // namespace tpqi
