#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cars/error.hpp"

namespace cars {

enum class Scale { linear, log, grid };
enum class ObjectiveKind { max, min, target, min_range };
enum class BoundaryKind { range, target, larger };

// measurement or parameter name -> one value per operating point
using ValueMap = std::map<std::string, std::vector<double>>;

struct ParameterDef {
  std::string name;
  Scale scale = Scale::linear;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> grid_values;  // grid only, one per operating point
  std::size_t op_count = 1;
};

struct ObjectiveDef {
  std::string name;
  ObjectiveKind kind = ObjectiveKind::max;
  std::vector<double> targets;   // target only, one per covered operating point
  std::vector<std::size_t> ops;  // covered operating points; filled by validate()
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct BoundaryDef {
  std::string name;
  BoundaryKind kind = BoundaryKind::range;
  // One entry per covered operating point. target: lo == hi == target.
  // larger: lo is the (strict) threshold, hi unused.
  std::vector<Interval> limits;
  std::vector<std::size_t> ops;
};

// One sampled axis of the unit hypercube.
struct DimensionDescriptor {
  std::size_t parameter = 0;  // index into ProblemSpec::parameters
  std::string name;
  std::size_t op = 0;
  Scale scale = Scale::linear;
  double lo = 0.0;
  double hi = 1.0;
};

struct ProblemSpec {
  std::string name;
  std::vector<ParameterDef> parameters;
  std::vector<ObjectiveDef> objectives;
  std::vector<BoundaryDef> boundaries;
  std::size_t n_operating_points = 1;

  // Checks invariants and fills defaulted operating-point scopes.
  // Throws ConfigError.
  void validate();

  // Union of measurement names objectives and boundaries refer to.
  std::set<std::string> required_measurements() const;
};

inline const char* to_string(Scale s) {
  switch (s) {
    case Scale::linear: return "linear";
    case Scale::log: return "log";
    case Scale::grid: return "grid";
  }
  return "?";
}

inline const char* to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::max: return "max";
    case ObjectiveKind::min: return "min";
    case ObjectiveKind::target: return "target";
    case ObjectiveKind::min_range: return "min_range";
  }
  return "?";
}

inline const char* to_string(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::range: return "range";
    case BoundaryKind::target: return "target";
    case BoundaryKind::larger: return "larger";
  }
  return "?";
}

namespace detail {

inline std::vector<std::size_t> all_ops(std::size_t n) {
  std::vector<std::size_t> ops(n);
  for (std::size_t i = 0; i < n; ++i) ops[i] = i;
  return ops;
}

inline void check_ops(const std::string& what, const std::vector<std::size_t>& ops,
                      std::size_t n_ops) {
  std::set<std::size_t> seen;
  for (auto op : ops) {
    if (op >= n_ops)
      throw ConfigError(what + ": operating point " + std::to_string(op) + " out of range");
    if (!seen.insert(op).second)
      throw ConfigError(what + ": duplicate operating point " + std::to_string(op));
  }
}

}  // namespace detail

inline void ProblemSpec::validate() {
  if (n_operating_points < 1) throw ConfigError("n_operating_points must be >= 1");
  if (parameters.empty()) throw ConfigError("problem has no parameters");

  std::set<std::string> names;
  std::size_t sampled = 0;
  for (const auto& p : parameters) {
    const std::string what = "parameter '" + p.name + "'";
    if (p.name.empty()) throw ConfigError("parameter with empty name");
    if (!names.insert(p.name).second) throw ConfigError(what + " declared twice");
    switch (p.scale) {
      case Scale::linear:
        if (!(p.lo < p.hi)) throw ConfigError(what + ": linear bounds need lo < hi");
        break;
      case Scale::log:
        if (!(0.0 < p.lo && p.lo < p.hi)) throw ConfigError(what + ": log bounds need 0 < lo < hi");
        break;
      case Scale::grid:
        if (p.grid_values.size() != n_operating_points)
          throw ConfigError(what + ": grid needs exactly one value per operating point");
        break;
    }
    if (p.scale != Scale::grid) {
      if (p.op_count != 1 && p.op_count != n_operating_points)
        throw ConfigError(what + ": op_count must be 1 or the number of operating points");
      if (!std::isfinite(p.lo) || !std::isfinite(p.hi))
        throw ConfigError(what + ": bounds must be finite");
      sampled += p.op_count;
    }
  }
  if (sampled == 0) throw ConfigError("problem has no sampled parameters");

  for (auto& o : objectives) {
    const std::string what = "objective '" + o.name + "'";
    if (o.name.empty()) throw ConfigError("objective with empty name");
    if (o.ops.empty()) o.ops = detail::all_ops(n_operating_points);
    detail::check_ops(what, o.ops, n_operating_points);
    if (o.kind == ObjectiveKind::target && o.targets.size() != o.ops.size()) {
      if (o.targets.size() == 1)
        o.targets.assign(o.ops.size(), o.targets.front());
      else
        throw ConfigError(what + ": target needs one value per covered operating point");
    }
    if (o.kind == ObjectiveKind::min_range && o.ops.size() < 2)
      throw ConfigError(what + ": min_range must span at least 2 operating points");
  }

  for (auto& b : boundaries) {
    const std::string what = "boundary '" + b.name + "'";
    if (b.name.empty()) throw ConfigError("boundary with empty name");
    if (b.ops.empty()) b.ops = detail::all_ops(n_operating_points);
    detail::check_ops(what, b.ops, n_operating_points);
    if (b.limits.size() == 1 && b.ops.size() > 1) b.limits.assign(b.ops.size(), b.limits.front());
    if (b.limits.size() != b.ops.size())
      throw ConfigError(what + ": needs one limit per covered operating point");
    for (const auto& l : b.limits) {
      if (!std::isfinite(l.lo) || (b.kind == BoundaryKind::range && !std::isfinite(l.hi)))
        throw ConfigError(what + ": limits must be finite");
      if (b.kind == BoundaryKind::range && l.lo > l.hi)
        throw ConfigError(what + ": range needs lo <= hi");
    }
  }
}

inline std::set<std::string> ProblemSpec::required_measurements() const {
  std::set<std::string> out;
  for (const auto& o : objectives) out.insert(o.name);
  for (const auto& b : boundaries) out.insert(b.name);
  return out;
}

// One descriptor per (non-grid parameter x operating point), declaration
// order, operating points ascending.
inline std::vector<DimensionDescriptor> sampled_dimensions(const ProblemSpec& spec) {
  std::vector<DimensionDescriptor> dims;
  for (std::size_t i = 0; i < spec.parameters.size(); ++i) {
    const auto& p = spec.parameters[i];
    if (p.scale == Scale::grid) continue;
    for (std::size_t op = 0; op < p.op_count; ++op) {
      std::string name = p.op_count == 1 ? p.name : p.name + "@" + std::to_string(op);
      dims.push_back({i, std::move(name), op, p.scale, p.lo, p.hi});
    }
  }
  return dims;
}

inline double to_physical(const DimensionDescriptor& dim, double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("unit coordinate outside [0,1]");
  switch (dim.scale) {
    case Scale::linear:
      return dim.lo + u * (dim.hi - dim.lo);
    case Scale::log: {
      if (u == 0.0) return dim.lo;
      if (u == 1.0) return dim.hi;
      const double a = std::log(dim.lo);
      return std::exp(a + u * (std::log(dim.hi) - a));
    }
    case Scale::grid:
      break;
  }
  throw std::domain_error("grid dimension has no unit mapping");
}

// Inverse of to_physical; not clamped.
inline double to_unit(const DimensionDescriptor& dim, double x) {
  switch (dim.scale) {
    case Scale::linear:
      return (x - dim.lo) / (dim.hi - dim.lo);
    case Scale::log: {
      const double a = std::log(dim.lo);
      return (std::log(x) - a) / (std::log(dim.hi) - a);
    }
    case Scale::grid:
      break;
  }
  throw std::domain_error("grid dimension has no unit mapping");
}

inline Interval subdomain_unit_interval(std::size_t j, std::size_t n_sub) {
  if (n_sub == 0 || j >= n_sub) throw std::out_of_range("sub-domain index out of range");
  const double n = static_cast<double>(n_sub);
  return {static_cast<double>(j) / n, j + 1 == n_sub ? 1.0 : static_cast<double>(j + 1) / n};
}

// Physical parameter values for a unit-space point. Every parameter gets one
// value per operating point; single-op parameters are broadcast.
inline ValueMap physical_parameters(const ProblemSpec& spec,
                                    std::span<const DimensionDescriptor> dims,
                                    std::span<const double> unit) {
  if (unit.size() != dims.size()) throw std::invalid_argument("point/dimension size mismatch");
  ValueMap out;
  for (const auto& p : spec.parameters) {
    if (p.scale == Scale::grid) out[p.name] = p.grid_values;
  }
  for (std::size_t d = 0; d < dims.size(); ++d) {
    const auto& p = spec.parameters[dims[d].parameter];
    auto& v = out[p.name];
    const double x = to_physical(dims[d], unit[d]);
    if (p.op_count == 1)
      v.assign(spec.n_operating_points, x);
    else {
      v.resize(spec.n_operating_points);
      v[dims[d].op] = x;
    }
  }
  return out;
}

}  // namespace cars
