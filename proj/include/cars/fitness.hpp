#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "cars/problem.hpp"

namespace cars {

// Penalty weights: CARS works on normalized values, the GA on raw ones and
// needs the stronger weight to keep boundary conditions dominant.
inline constexpr double cars_rho = 100.0;
inline constexpr double ga_rho = 10'000.0;
inline constexpr double ga_failed_objective = -1e6;

// Square root of the Canberra distance, with 0/0 := 0.
inline double canberra_sqrt(double value, double target) {
  const double den = std::abs(value) + std::abs(target);
  if (den == 0.0) return 0.0;
  return std::sqrt(std::abs(value - target) / den);
}

// Penalty for a single operating point; 0 iff the condition holds. A value
// sitting exactly on a strict "larger" threshold has zero distance but is
// still a violation, so it gets the smallest representable distance instead.
inline double boundary_penalty(BoundaryKind kind, const Interval& limit, double value,
                               double rho) {
  static const double on_threshold = std::sqrt(std::numeric_limits<double>::epsilon());
  switch (kind) {
    case BoundaryKind::target:
      return rho * canberra_sqrt(value, limit.lo);
    case BoundaryKind::range:
      if (value < limit.lo) return rho * canberra_sqrt(value, limit.lo);
      if (value > limit.hi) return rho * canberra_sqrt(value, limit.hi);
      return 0.0;
    case BoundaryKind::larger:
      if (value > limit.lo) return 0.0;
      return rho * std::max(canberra_sqrt(value, limit.lo), on_threshold);
  }
  return 0.0;
}

// Mean per-operating-point penalty. `meas` holds one value per operating point
// of the problem.
inline double boundary_penalty(const BoundaryDef& b, std::span<const double> meas, double rho) {
  double sum = 0.0;
  for (std::size_t i = 0; i < b.ops.size(); ++i)
    sum += boundary_penalty(b.kind, b.limits[i], meas[b.ops[i]], rho);
  return sum / static_cast<double>(b.ops.size());
}

inline double objective_fitness(const ObjectiveDef& o, std::span<const double> meas) {
  const auto n = static_cast<double>(o.ops.size());
  double sum = 0.0;
  switch (o.kind) {
    case ObjectiveKind::max:
      for (auto op : o.ops) sum += meas[op];
      return sum / n;
    case ObjectiveKind::min:
      for (auto op : o.ops) sum -= meas[op];
      return sum / n;
    case ObjectiveKind::target:
      for (std::size_t i = 0; i < o.ops.size(); ++i)
        sum -= canberra_sqrt(meas[o.ops[i]], o.targets[i]);
      return sum / n;
    case ObjectiveKind::min_range: {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (auto op : o.ops) {
        lo = std::min(lo, meas[op]);
        hi = std::max(hi, meas[op]);
      }
      return -hi + lo;
    }
  }
  return 0.0;
}

struct Range {
  double min = 0.0;
  double max = 0.0;
};

// Rescales with first-batch extremes. A degenerate range maps to 0.5.
inline double normalize(double value, const Range& c) {
  if (!(c.max > c.min)) return 0.5;
  return (value - c.min) / (c.max - c.min);
}

namespace detail {

inline bool measurement_ok(const ValueMap& meas, const std::string& name, std::size_t n_ops) {
  auto it = meas.find(name);
  if (it == meas.end() || it->second.size() != n_ops) return false;
  return std::all_of(it->second.begin(), it->second.end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace detail

// True when every measurement the problem needs is present and finite.
inline bool measurements_usable(const ProblemSpec& spec, const ValueMap& meas) {
  for (const auto& o : spec.objectives)
    if (!detail::measurement_ok(meas, o.name, spec.n_operating_points)) return false;
  for (const auto& b : spec.boundaries)
    if (!detail::measurement_ok(meas, b.name, spec.n_operating_points)) return false;
  return true;
}

// Unnormalized per-objective fitness and per-boundary penalty.
struct RawFitness {
  std::vector<double> objectives;
  std::vector<double> penalties;
  bool failed = false;
};

inline RawFitness raw_fitness(const ProblemSpec& spec, const ValueMap& meas, double rho) {
  RawFitness r;
  if (!measurements_usable(spec, meas)) {
    r.failed = true;
    return r;
  }
  for (const auto& o : spec.objectives) r.objectives.push_back(objective_fitness(o, meas.at(o.name)));
  for (const auto& b : spec.boundaries) r.penalties.push_back(boundary_penalty(b, meas.at(b.name), rho));
  return r;
}

inline bool is_valid(const ProblemSpec& spec, const ValueMap& meas) {
  for (const auto& b : spec.boundaries) {
    if (!detail::measurement_ok(meas, b.name, spec.n_operating_points)) return false;
    const auto& v = meas.at(b.name);
    for (std::size_t i = 0; i < b.ops.size(); ++i)
      if (boundary_penalty(b.kind, b.limits[i], v[b.ops[i]], 1.0) != 0.0) return false;
  }
  return true;
}

// First-batch extremes for every objective and boundary, plus a separate pair
// for the aggregate so the final scalar lands near [0, 1] as well.
struct NormalizationConstants {
  std::vector<Range> objectives;
  std::vector<Range> penalties;
  Range aggregate;
};

struct FitnessBreakdown {
  RawFitness raw;
  std::vector<double> objectives_norm;
  std::vector<double> penalties_norm;
  double aggregate = 0.0;  // mean(objectives_norm) - mean(penalties_norm)
  double scalar = 0.0;     // aggregate rescaled with the aggregate constants
};

inline double mean_or_zero(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// CARS aggregate before the final rescale.
inline double cars_aggregate(const RawFitness& raw, const NormalizationConstants& c,
                             std::vector<double>* obj_norm = nullptr,
                             std::vector<double>* pen_norm = nullptr) {
  std::vector<double> on(raw.objectives.size());
  std::vector<double> pn(raw.penalties.size());
  for (std::size_t i = 0; i < on.size(); ++i) on[i] = normalize(raw.objectives[i], c.objectives[i]);
  for (std::size_t i = 0; i < pn.size(); ++i) pn[i] = normalize(raw.penalties[i], c.penalties[i]);
  const double agg = mean_or_zero(on) - mean_or_zero(pn);
  if (obj_norm) *obj_norm = std::move(on);
  if (pen_norm) *pen_norm = std::move(pn);
  return agg;
}

// Failed samples are excluded; if all failed every range stays degenerate.
inline NormalizationConstants freeze_constants(const ProblemSpec& spec,
                                               std::span<const RawFitness> first_batch) {
  NormalizationConstants c;
  const double inf = std::numeric_limits<double>::infinity();
  c.objectives.assign(spec.objectives.size(), Range{inf, -inf});
  c.penalties.assign(spec.boundaries.size(), Range{inf, -inf});
  bool any = false;
  for (const auto& r : first_batch) {
    if (r.failed) continue;
    any = true;
    for (std::size_t i = 0; i < r.objectives.size(); ++i) {
      c.objectives[i].min = std::min(c.objectives[i].min, r.objectives[i]);
      c.objectives[i].max = std::max(c.objectives[i].max, r.objectives[i]);
    }
    for (std::size_t i = 0; i < r.penalties.size(); ++i) {
      c.penalties[i].min = std::min(c.penalties[i].min, r.penalties[i]);
      c.penalties[i].max = std::max(c.penalties[i].max, r.penalties[i]);
    }
  }
  if (!any) {
    for (auto& r : c.objectives) r = {};
    for (auto& r : c.penalties) r = {};
    c.aggregate = {};
    return c;
  }
  c.aggregate = {inf, -inf};
  for (const auto& r : first_batch) {
    if (r.failed) continue;
    const double a = cars_aggregate(r, c);
    c.aggregate.min = std::min(c.aggregate.min, a);
    c.aggregate.max = std::max(c.aggregate.max, a);
  }
  return c;
}

inline FitnessBreakdown cars_breakdown(RawFitness raw, const NormalizationConstants& c) {
  FitnessBreakdown b;
  if (raw.failed) {
    b.raw = std::move(raw);
    b.scalar = 0.0;
    return b;
  }
  b.aggregate = cars_aggregate(raw, c, &b.objectives_norm, &b.penalties_norm);
  b.scalar = normalize(b.aggregate, c.aggregate);
  b.raw = std::move(raw);
  return b;
}

// GA objective vector: every boundary penalty is subtracted from each raw
// objective value independently.
inline std::vector<double> ga_objectives(const ProblemSpec& spec, const ValueMap& meas) {
  const std::size_t m = std::max<std::size_t>(spec.objectives.size(), 1);
  const RawFitness r = raw_fitness(spec, meas, ga_rho);
  if (r.failed) return std::vector<double>(m, ga_failed_objective);
  const double pen = std::accumulate(r.penalties.begin(), r.penalties.end(), 0.0);
  std::vector<double> out = r.objectives;
  if (out.empty()) out.push_back(0.0);
  for (auto& v : out) v -= pen;
  return out;
}

}  // namespace cars
