#pragma once

#include <chrono>
#include <fstream>
#include <memory>
#include <string>

#include "cars/engine.hpp"
#include "cars/error.hpp"
#include "cars/evaluator.hpp"
#include "cars/external_evaluator.hpp"
#include "cars/ga.hpp"
#include "cars/json_io.hpp"
#include "cars/surrogates.hpp"

namespace cars {

/// Everything a config file describes.
///
/// Layout (JSON):
///   name, operating_points, parameters[], objectives[], boundaries[]
///   builtin   {"name": "boost" | "sphere_ring" | "rosenbrock" | "rastrigin", "n_dim": N}
///             replaces the problem keys and selects the built-in model
///   evaluator "builtin:<name>" or "cmd:<shell command>"
///   evaluator_timeout_ms, max_in_flight
///   run       {n_total, seed, n_subdomain, n_pool, pooling, oversampling,
///              alpha_schedule, cell_cap}
///   ga        {islands, population, generations, p_mutate, p_mutate_val,
///              sigma_mutate, p_crossover, alpha_crossover, eta_crossover}
struct LoadedConfig {
  ProblemSpec problem;
  RunConfig run;
  IslandConfig ga;
  std::string evaluator;  // "builtin:..." or "cmd:..."
  std::size_t builtin_dims = 0;
  ExternalOptions external;
};

inline LoadedConfig config_from_json(const json& j) {
  LoadedConfig c;
  try {
    if (j.contains("builtin")) {
      const auto& b = j.at("builtin");
      const auto name = b.at("name").get<std::string>();
      if (name == "boost") {
        c.problem = boost_problem();
      } else {
        c.builtin_dims = b.value("n_dim", std::size_t{2});
        c.problem = constrained_testfn(name, c.builtin_dims).problem;
      }
      c.evaluator = "builtin:" + name;
    } else {
      c.problem = problem_from_json(j);
    }
    if (j.contains("evaluator")) c.evaluator = j.at("evaluator").get<std::string>();
    c.external.timeout = std::chrono::milliseconds(j.value("evaluator_timeout_ms", 0));
    c.external.max_in_flight = j.value("max_in_flight", std::size_t{64});

    if (j.contains("run")) {
      const auto& r = j.at("run");
      c.run.n_total = r.value("n_total", c.run.n_total);
      c.run.seed = r.value("seed", c.run.seed);
      c.run.n_subdomain = r.value("n_subdomain", c.run.n_subdomain);
      c.run.n_pool = r.value("n_pool", c.run.n_pool);
      if (!r.value("pooling", true)) c.run.n_pool = 0;
      c.run.oversampling = r.value("oversampling", c.run.oversampling);
      c.run.alpha = AlphaSchedule::parse(r.value("alpha_schedule", std::string("iter")));
      c.run.cell_cap = r.value("cell_cap", c.run.cell_cap);
    }
    if (j.contains("ga")) {
      const auto& g = j.at("ga");
      c.ga.n_islands = g.value("islands", c.ga.n_islands);
      c.ga.population = g.value("population", c.ga.population);
      c.ga.generations = g.value("generations", c.ga.generations);
      c.ga.p_mutate = g.value("p_mutate", c.ga.p_mutate);
      c.ga.p_mutate_val = g.value("p_mutate_val", c.ga.p_mutate_val);
      c.ga.sigma_mutate = g.value("sigma_mutate", c.ga.sigma_mutate);
      c.ga.p_crossover = g.value("p_crossover", c.ga.p_crossover);
      c.ga.alpha_crossover = g.value("alpha_crossover", c.ga.alpha_crossover);
      c.ga.eta_crossover = g.value("eta_crossover", c.ga.eta_crossover);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.run.validate();
  c.ga.validate();
  return c;
}

inline LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

// Resolves an evaluator spec. Built-ins: boost, echo and the constrained test
// functions (dimension taken from the problem).
inline std::unique_ptr<Evaluator> make_evaluator(const std::string& spec,
                                                 const ProblemSpec& problem,
                                                 const ExternalOptions& ext = {}) {
  if (spec.rfind("cmd:", 0) == 0) return std::make_unique<ExternalEvaluator>(spec.substr(4), ext);
  if (spec.rfind("builtin:", 0) == 0) {
    const std::string name = spec.substr(8);
    if (name == "boost") return std::make_unique<FunctionEvaluator>(boost_model);
    if (name == "echo") return std::make_unique<FunctionEvaluator>(echo_model);
    return std::make_unique<FunctionEvaluator>(
        constrained_testfn(name, problem.parameters.size()).model);
  }
  if (spec.empty()) throw ConfigError("no evaluator configured");
  throw ConfigError("evaluator must be builtin:<name> or cmd:<command>, got '" + spec + "'");
}

}  // namespace cars
