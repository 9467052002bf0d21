#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "cars/error.hpp"
#include "cars/evaluator.hpp"
#include "cars/problem.hpp"

namespace cars {

// Boost converter stand-in (C1 [F], L1 [H], fsw [Hz]). Smooth algebraic model,
// not a circuit simulation:
//   vmean   = 12 * (1 + 1 / (1 + 40 * L1 * fsw))        output rises when the
//                                                        inductor runs dry
//   vrip    = 0.7 / (C1 * fsw) + 0.05 * sqrt(L1 / C1)    switching ripple plus
//                                                        LC overshoot
//   eff_tot = 1 / (1 + 500 * C1 + 29 * L1)               energy parked in C1/L1
// Ripple wants a large C1 while eff_tot wants a small one.
struct BoostMeasurements {
  double vmean;
  double vrip;
  double eff_tot;
};

inline BoostMeasurements boost_surrogate(double c1, double l1, double fsw) {
  return {12.0 * (1.0 + 1.0 / (1.0 + 40.0 * l1 * fsw)),
          0.7 / (c1 * fsw) + 0.05 * std::sqrt(l1 / c1),
          1.0 / (1.0 + 500.0 * c1 + 29.0 * l1)};
}

inline ProblemSpec boost_problem() {
  ProblemSpec s;
  s.name = "boost";
  s.n_operating_points = 1;
  s.parameters = {{"C1", Scale::log, 1e-9, 1e-3, {}, 1},
                  {"L1", Scale::log, 1e-6, 100e-3, {}, 1},
                  {"fsw", Scale::log, 100.0, 1e6, {}, 1}};
  s.objectives = {{"vmean", ObjectiveKind::target, {12.0}, {}},
                  {"eff_tot", ObjectiveKind::max, {}, {}}};
  s.boundaries = {{"vmean", BoundaryKind::range, {{11.5, 12.5}}, {}},
                  {"vrip", BoundaryKind::range, {{0.0, 2.0}}, {}}};
  s.validate();
  return s;
}

inline ValueMap boost_model(const ValueMap& p) {
  const std::size_t n = p.at("C1").size();
  ValueMap m{{"vmean", std::vector<double>(n)},
             {"vrip", std::vector<double>(n)},
             {"eff_tot", std::vector<double>(n)}};
  for (std::size_t op = 0; op < n; ++op) {
    const auto b = boost_surrogate(p.at("C1")[op], p.at("L1")[op], p.at("fsw")[op]);
    m["vmean"][op] = b.vmean;
    m["vrip"][op] = b.vrip;
    m["eff_tot"][op] = b.eff_tot;
  }
  return m;
}

/// Constrained analytic test problems over x0..x{n-1}.
///
/// Each emits the objective measurement "f" (minimized) and one boundary
/// measurement:
///  - sphere_ring: f = sum (x_i - c)^2 with c = 1.5/sqrt(n); boundary
///    r = |x| in [1, 2]. Optimum x_i = c, f = 0, r = 1.5.
///  - rosenbrock: shifted by 0.5 so z = x + 0.5 and f = classic Rosenbrock(z)
///    ((1 - z)^2 for n = 1); boundary g = mean(x) in [0, 1]. Optimum x_i = 0.5.
///  - rastrigin: f = 10n + sum (z^2 - 10 cos(2 pi z)), z = x - 0.5; boundary
///    h = max |z_i| in [0, 3]. Optimum x_i = 0.5, many local basins.
struct TestFunction {
  std::string name;
  std::size_t n_dim = 0;
  ProblemSpec problem;
  ModelFn model;
  std::vector<double> optimum;  // physical coordinates
  double optimum_value = 0.0;
};

inline std::vector<double> point_from(const ValueMap& p, std::size_t n_dim) {
  std::vector<double> x(n_dim);
  for (std::size_t i = 0; i < n_dim; ++i) x[i] = p.at("x" + std::to_string(i)).at(0);
  return x;
}

inline double sphere_ring_center(std::size_t n_dim) {
  return 1.5 / std::sqrt(static_cast<double>(n_dim));
}

inline double rosenbrock(const std::vector<double>& z) {
  if (z.size() == 1) return (1.0 - z[0]) * (1.0 - z[0]);
  double f = 0.0;
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    const double a = z[i + 1] - z[i] * z[i];
    f += 100.0 * a * a + (1.0 - z[i]) * (1.0 - z[i]);
  }
  return f;
}

inline TestFunction constrained_testfn(const std::string& name, std::size_t n_dim) {
  if (n_dim < 1) throw ConfigError("test function needs n_dim >= 1");
  TestFunction t;
  t.name = name;
  t.n_dim = n_dim;
  ProblemSpec& s = t.problem;
  s.name = name;
  double lo = -5.0;
  double hi = 5.0;
  std::string bname;
  Interval limit;

  if (name == "sphere_ring") {
    const double c = sphere_ring_center(n_dim);
    bname = "r";
    limit = {1.0, 2.0};
    t.optimum.assign(n_dim, c);
    t.model = [n_dim, c](const ValueMap& p) {
      const auto x = point_from(p, n_dim);
      double f = 0.0;
      double r2 = 0.0;
      for (double xi : x) {
        f += (xi - c) * (xi - c);
        r2 += xi * xi;
      }
      return ValueMap{{"f", {f}}, {"r", {std::sqrt(r2)}}};
    };
  } else if (name == "rosenbrock") {
    lo = -2.0;
    hi = 2.0;
    bname = "g";
    limit = {0.0, 1.0};
    t.optimum.assign(n_dim, 0.5);
    t.model = [n_dim](const ValueMap& p) {
      auto x = point_from(p, n_dim);
      double mean = 0.0;
      for (double xi : x) mean += xi;
      mean /= static_cast<double>(n_dim);
      for (auto& xi : x) xi += 0.5;
      return ValueMap{{"f", {rosenbrock(x)}}, {"g", {mean}}};
    };
  } else if (name == "rastrigin") {
    lo = -5.12;
    hi = 5.12;
    bname = "h";
    limit = {0.0, 3.0};
    t.optimum.assign(n_dim, 0.5);
    t.model = [n_dim](const ValueMap& p) {
      const auto x = point_from(p, n_dim);
      double f = 10.0 * static_cast<double>(n_dim);
      double h = 0.0;
      for (double xi : x) {
        const double z = xi - 0.5;
        f += z * z - 10.0 * std::cos(2.0 * std::numbers::pi * z);
        h = std::max(h, std::abs(z));
      }
      return ValueMap{{"f", {f}}, {"h", {h}}};
    };
  } else {
    throw ConfigError("unknown test function '" + name + "'");
  }

  for (std::size_t i = 0; i < n_dim; ++i)
    s.parameters.push_back({"x" + std::to_string(i), Scale::linear, lo, hi, {}, 1});
  s.objectives = {{"f", ObjectiveKind::min, {}, {}}};
  s.boundaries = {{bname, BoundaryKind::range, {limit}, {}}};
  s.validate();
  return t;
}

// Measurement named like each parameter, equal to its value.
inline ValueMap echo_model(const ValueMap& p) { return p; }

}  // namespace cars
