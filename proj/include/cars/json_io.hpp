#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "cars/error.hpp"
#include "cars/fitness.hpp"
#include "cars/problem.hpp"

namespace cars {

using json = nlohmann::json;

// Non-finite doubles have no JSON spelling; they travel as null.
inline json number_to_json(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline double number_from_json(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw json::type_error::create(302, "expected number or null", &j);
  return j.get<double>();
}

inline json values_to_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number_to_json(x));
  return a;
}

inline std::vector<double> values_from_json(const json& j) {
  std::vector<double> v;
  if (j.is_array()) {
    for (const auto& x : j) v.push_back(number_from_json(x));
  } else {
    v.push_back(number_from_json(j));
  }
  return v;
}

inline json value_map_to_json(const ValueMap& m) {
  json o = json::object();
  for (const auto& [k, v] : m) o[k] = values_to_json(v);
  return o;
}

inline ValueMap value_map_from_json(const json& j) {
  if (!j.is_object()) throw json::type_error::create(302, "expected object", &j);
  ValueMap m;
  for (const auto& [k, v] : j.items()) m[k] = values_from_json(v);
  return m;
}

inline json range_to_json(const Range& r) { return json::array({number_to_json(r.min), number_to_json(r.max)}); }
inline Range range_from_json(const json& j) {
  return {number_from_json(j.at(0)), number_from_json(j.at(1))};
}

inline json constants_to_json(const NormalizationConstants& c) {
  json o;
  o["objectives"] = json::array();
  for (const auto& r : c.objectives) o["objectives"].push_back(range_to_json(r));
  o["penalties"] = json::array();
  for (const auto& r : c.penalties) o["penalties"].push_back(range_to_json(r));
  o["aggregate"] = range_to_json(c.aggregate);
  return o;
}

inline NormalizationConstants constants_from_json(const json& j) {
  NormalizationConstants c;
  for (const auto& r : j.at("objectives")) c.objectives.push_back(range_from_json(r));
  for (const auto& r : j.at("penalties")) c.penalties.push_back(range_from_json(r));
  c.aggregate = range_from_json(j.at("aggregate"));
  return c;
}

namespace detail {

inline Scale parse_scale(const std::string& s) {
  if (s == "linear") return Scale::linear;
  if (s == "log") return Scale::log;
  if (s == "grid") return Scale::grid;
  throw ConfigError("unknown scale '" + s + "'");
}

inline ObjectiveKind parse_objective_kind(const std::string& s) {
  if (s == "max") return ObjectiveKind::max;
  if (s == "min") return ObjectiveKind::min;
  if (s == "target") return ObjectiveKind::target;
  if (s == "min_range") return ObjectiveKind::min_range;
  throw ConfigError("unknown objective kind '" + s + "'");
}

inline BoundaryKind parse_boundary_kind(const std::string& s) {
  if (s == "range") return BoundaryKind::range;
  if (s == "target") return BoundaryKind::target;
  if (s == "larger") return BoundaryKind::larger;
  throw ConfigError("unknown boundary kind '" + s + "'");
}

// "all" or a list of operating point indices; absent means all.
inline std::vector<std::size_t> parse_ops(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  const auto& v = j.at(key);
  if (v.is_string()) {
    if (v.get<std::string>() != "all") throw ConfigError(std::string(key) + " must be \"all\" or a list");
    return {};
  }
  return v.get<std::vector<std::size_t>>();
}

inline std::vector<Interval> parse_limits(BoundaryKind kind, const json& j) {
  std::vector<Interval> out;
  auto one = [&](const json& v) {
    if (kind == BoundaryKind::range) {
      if (!v.is_array() || v.size() != 2) throw ConfigError("range limit must be [lo, hi]");
      out.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
    } else {
      const double x = v.get<double>();
      out.push_back({x, x});
    }
  };
  if (kind == BoundaryKind::range) {
    // [lo, hi] for every covered point, or [[lo, hi], ...] per point.
    if (j.is_array() && !j.empty() && j.at(0).is_array())
      for (const auto& v : j) one(v);
    else
      one(j);
  } else if (j.is_array()) {
    for (const auto& v : j) one(v);
  } else {
    one(j);
  }
  return out;
}

}  // namespace detail

/// Parses the `parameters`, `objectives`, `boundaries` and
/// `operating_points` keys of a problem config. Throws ConfigError.
inline ProblemSpec problem_from_json(const json& j) {
  try {
    ProblemSpec s;
    s.name = j.value("name", std::string("problem"));
    s.n_operating_points = j.value("operating_points", std::size_t{1});
    for (const auto& p : j.at("parameters")) {
      ParameterDef d;
      d.name = p.at("name").get<std::string>();
      d.scale = detail::parse_scale(p.at("scale").get<std::string>());
      if (d.scale == Scale::grid) {
        d.grid_values = p.at("values").get<std::vector<double>>();
        d.op_count = d.grid_values.size();
      } else {
        const auto b = p.at("bounds").get<std::vector<double>>();
        if (b.size() != 2) throw ConfigError("parameter '" + d.name + "': bounds must be [lo, hi]");
        d.lo = b[0];
        d.hi = b[1];
        d.op_count = p.value("operating_points", std::size_t{1});
      }
      s.parameters.push_back(std::move(d));
    }
    if (j.contains("objectives"))
      for (const auto& o : j.at("objectives")) {
        ObjectiveDef d;
        d.name = o.at("name").get<std::string>();
        d.kind = detail::parse_objective_kind(o.at("kind").get<std::string>());
        if (d.kind == ObjectiveKind::target) d.targets = values_from_json(o.at("values"));
        d.ops = detail::parse_ops(o, "operating_points");
        s.objectives.push_back(std::move(d));
      }
    if (j.contains("boundaries"))
      for (const auto& b : j.at("boundaries")) {
        BoundaryDef d;
        d.name = b.at("name").get<std::string>();
        d.kind = detail::parse_boundary_kind(b.at("kind").get<std::string>());
        d.limits = detail::parse_limits(d.kind, b.at("values"));
        d.ops = detail::parse_ops(b, "operating_points");
        s.boundaries.push_back(std::move(d));
      }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("problem config: ") + e.what());
  }
}

}  // namespace cars
