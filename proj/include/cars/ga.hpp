#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "cars/evaluator.hpp"
#include "cars/fitness.hpp"
#include "cars/problem.hpp"
#include "cars/rng.hpp"
#include "cars/run_log.hpp"

namespace cars {

struct Individual {
  std::vector<double> genome;      // unit space
  std::vector<double> objectives;  // maximized
  std::size_t rank = 0;
  double crowding = 0.0;
  std::uint64_t sample_id = 0;
};

struct IslandConfig {
  std::size_t n_islands = 5;
  std::size_t population = 20;
  std::size_t generations = 50;
  double p_mutate = 0.1;
  double p_mutate_val = 0.3;
  double sigma_mutate = 0.4;
  double p_crossover = 0.95;
  double alpha_crossover = 0.2;
  double eta_crossover = 1.0;

  void validate() const {
    auto prob = [](double p, const char* what) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(what) + " must be in [0,1]");
    };
    prob(p_mutate, "p_mutate");
    prob(p_mutate_val, "p_mutate_val");
    prob(p_crossover, "p_crossover");
    if (!(sigma_mutate > 0.0)) throw ConfigError("sigma_mutate must be > 0");
    if (!(alpha_crossover >= 0.0)) throw ConfigError("alpha_crossover must be >= 0");
    if (!(eta_crossover >= 0.0)) throw ConfigError("eta_crossover must be >= 0");
    if (n_islands < 1 || population < 1) throw ConfigError("need at least one island and individual");
  }

  std::uint64_t total_evaluations() const noexcept {
    return static_cast<std::uint64_t>(n_islands) * population * (generations + 1);
  }
};

// Island setups used for the reference design problems.
inline IslandConfig boost_ga_config() { return {5, 20, 50}; }
inline IslandConfig llc_ga_config() { return {50, 20, 100}; }

// a dominates b (maximization): a >= b everywhere and a > b somewhere.
inline bool dominates(std::span<const double> a, std::span<const double> b) {
  bool strictly = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return false;
    if (a[i] > b[i]) strictly = true;
  }
  return strictly;
}

/// Fast non-dominated sort. Returns fronts as index lists (front 0 first) and
/// writes each individual's front number into its rank.
inline std::vector<std::vector<std::size_t>> nondominated_sort(std::vector<Individual>& pop) {
  const std::size_t n = pop.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<std::size_t> count(n, 0);
  std::vector<std::vector<std::size_t>> fronts(1);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      if (dominates(pop[p].objectives, pop[q].objectives)) {
        dominated[p].push_back(q);
        ++count[q];
      } else if (dominates(pop[q].objectives, pop[p].objectives)) {
        dominated[q].push_back(p);
        ++count[p];
      }
    }
  }
  for (std::size_t p = 0; p < n; ++p)
    if (count[p] == 0) {
      pop[p].rank = 0;
      fronts[0].push_back(p);
    }
  for (std::size_t f = 0; !fronts[f].empty(); ++f) {
    std::vector<std::size_t> next;
    for (auto p : fronts[f])
      for (auto q : dominated[p])
        if (--count[q] == 0) {
          pop[q].rank = f + 1;
          next.push_back(q);
        }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(next));
  }
  fronts.pop_back();
  return fronts;
}

// Crowding distance within one front. Boundary individuals of every
// objective get +inf; an objective with zero spread contributes nothing.
inline void crowding_distance(std::vector<Individual>& pop, std::span<const std::size_t> front) {
  for (auto i : front) pop[i].crowding = 0.0;
  if (front.empty()) return;
  const std::size_t m = pop[front[0]].objectives.size();
  std::vector<std::size_t> order(front.begin(), front.end());
  for (std::size_t k = 0; k < m; ++k) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return pop[a].objectives[k] < pop[b].objectives[k];
    });
    const double lo = pop[order.front()].objectives[k];
    const double hi = pop[order.back()].objectives[k];
    pop[order.front()].crowding = std::numeric_limits<double>::infinity();
    pop[order.back()].crowding = std::numeric_limits<double>::infinity();
    if (!(hi > lo)) continue;
    for (std::size_t j = 1; j + 1 < order.size(); ++j)
      pop[order[j]].crowding +=
          (pop[order[j + 1]].objectives[k] - pop[order[j - 1]].objectives[k]) / (hi - lo);
  }
}

// With probability p_mutate the individual mutates; then every gene with
// probability p_mutate_val gets N(0, sigma^2) noise and is clamped to [0,1].
template <class Rng>
Individual gaussian_mutate(Individual ind, Rng& rng, const IslandConfig& cfg) {
  if (!(rng.uniform() < cfg.p_mutate)) return ind;
  std::normal_distribution<double> noise(0.0, cfg.sigma_mutate);
  for (auto& g : ind.genome)
    if (rng.uniform() < cfg.p_mutate_val) g = std::clamp(g + noise(rng), 0.0, 1.0);
  return ind;
}

/// Simulated binary crossover.
///
/// The spread factor beta follows the polynomial distribution with index eta;
/// alpha_crossover caps how far children may extend past their parents, as
/// in blend crossover: beta <= 1 + 2 * alpha. Children are
/// m -/+ beta * (b - a) / 2 around the parents' midpoint m, so they always sum
/// to a + b before clamping.
template <class Rng>
std::pair<Individual, Individual> sbx_crossover(const Individual& a, const Individual& b, Rng& rng,
                                                const IslandConfig& cfg,
                                                bool clamp = true) {
  Individual c1 = a;
  Individual c2 = b;
  c1.objectives.clear();
  c2.objectives.clear();
  if (!(rng.uniform() < cfg.p_crossover)) return {std::move(c1), std::move(c2)};
  const double cap = 1.0 + 2.0 * cfg.alpha_crossover;
  const double expo = 1.0 / (cfg.eta_crossover + 1.0);
  for (std::size_t i = 0; i < a.genome.size(); ++i) {
    const double u = rng.uniform();
    double beta = u <= 0.5 ? std::pow(2.0 * u, expo) : std::pow(1.0 / (2.0 * (1.0 - u)), expo);
    beta = std::min(beta, cap);
    const double x = a.genome[i];
    const double y = b.genome[i];
    const double mid = 0.5 * (x + y);
    const double half = 0.5 * beta * (y - x);
    c1.genome[i] = mid - half;
    c2.genome[i] = mid + half;
    if (clamp) {
      c1.genome[i] = std::clamp(c1.genome[i], 0.0, 1.0);
      c2.genome[i] = std::clamp(c2.genome[i], 0.0, 1.0);
    }
  }
  return {std::move(c1), std::move(c2)};
}

// Binary tournament on (rank, crowding), lower index on full ties.
template <class Rng>
std::size_t tournament(const std::vector<Individual>& pop, Rng& rng) {
  const auto a = static_cast<std::size_t>(rng.below(pop.size()));
  const auto b = static_cast<std::size_t>(rng.below(pop.size()));
  const auto& x = pop[a];
  const auto& y = pop[b];
  if (x.rank != y.rank) return x.rank < y.rank ? a : b;
  if (x.crowding != y.crowding) return x.crowding > y.crowding ? a : b;
  return std::min(a, b);
}

// (mu + lambda) truncation by front, then crowding within the split front.
inline std::vector<Individual> nsga2_truncate(std::vector<Individual> merged, std::size_t keep) {
  auto fronts = nondominated_sort(merged);
  std::vector<Individual> out;
  out.reserve(keep);
  for (auto& front : fronts) {
    crowding_distance(merged, front);
    if (out.size() + front.size() <= keep) {
      for (auto i : front) out.push_back(merged[i]);
      continue;
    }
    std::stable_sort(front.begin(), front.end(), [&](std::size_t a, std::size_t b) {
      return merged[a].crowding > merged[b].crowding;
    });
    for (std::size_t j = 0; out.size() < keep; ++j) out.push_back(merged[front[j]]);
    break;
  }
  // Crowding of the survivors relative to their own fronts for the next
  // round of tournaments.
  auto survivor_fronts = nondominated_sort(out);
  for (const auto& f : survivor_fronts) crowding_distance(out, f);
  return out;
}

struct GaResult {
  std::vector<SampleRecord> samples;         // every evaluation, all islands
  std::vector<std::size_t> best;             // merged front 0 (indices into samples)
  std::uint64_t evaluations = 0;
};

/// Island-model NSGA-II. Islands evolve independently (no migration) with
/// streams keyed by island index; results are merged at the end and the best
/// set is the non-dominated front over every evaluated sample.
class IslandGa {
 public:
  IslandGa(ProblemSpec spec, IslandConfig cfg, Evaluator& evaluator, std::uint64_t seed,
           RunLogWriter* log = nullptr)
      : spec_(std::move(spec)),
        cfg_(cfg),
        dims_(sampled_dimensions(spec_)),
        evaluator_(evaluator),
        seed_(seed),
        log_(log) {
    cfg_.validate();
  }

  RunHeader header() const {
    RunHeader h;
    h.method = "ga";
    h.problem = spec_.name;
    h.n_dim = dims_.size();
    h.seed = seed_;
    h.n_total = cfg_.total_evaluations();
    h.n_iter = cfg_.generations + 1;
    h.n_samples = cfg_.population;
    for (const auto& d : dims_) h.dimensions.push_back(d.name);
    return h;
  }

  GaResult run() {
    if (log_) log_->header(header());
    GaResult result;
    for (std::size_t island = 0; island < cfg_.n_islands; ++island) run_island(island, result);
    result.evaluations = result.samples.size();

    std::vector<Individual> all(result.samples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i].objectives = result.samples[i].ga_objectives;
    auto fronts = nondominated_sort(all);
    if (!fronts.empty()) result.best = fronts[0];
    return result;
  }

  // Evolves one island, appending its samples (ids continue from `result`).
  void run_island(std::size_t island, GaResult& result) {
    const std::size_t n_dim = dims_.size();
    std::vector<Individual> pop(cfg_.population);
    CounterRng init(seed_, StreamTag::ga_init, island, 0);
    for (auto& ind : pop) {
      ind.genome.resize(n_dim);
      for (auto& g : ind.genome) g = init.uniform();
    }
    evaluate(pop, island, 0, result);
    {
      auto fronts = nondominated_sort(pop);
      for (const auto& f : fronts) crowding_distance(pop, f);
    }
    for (std::size_t gen = 1; gen <= cfg_.generations; ++gen) {
      CounterRng sel(seed_, StreamTag::ga_selection, island, gen);
      CounterRng var(seed_, StreamTag::ga_variation, island, gen);
      std::vector<Individual> offspring;
      offspring.reserve(cfg_.population);
      while (offspring.size() < cfg_.population) {
        const auto& a = pop[tournament(pop, sel)];
        const auto& b = pop[tournament(pop, sel)];
        auto [c1, c2] = sbx_crossover(a, b, var, cfg_);
        offspring.push_back(gaussian_mutate(std::move(c1), var, cfg_));
        if (offspring.size() < cfg_.population)
          offspring.push_back(gaussian_mutate(std::move(c2), var, cfg_));
      }
      evaluate(offspring, island, gen, result);
      std::vector<Individual> merged = std::move(pop);
      merged.insert(merged.end(), std::make_move_iterator(offspring.begin()),
                    std::make_move_iterator(offspring.end()));
      pop = nsga2_truncate(std::move(merged), cfg_.population);
    }
  }

  const std::vector<DimensionDescriptor>& dimensions() const noexcept { return dims_; }

 private:
  void evaluate(std::vector<Individual>& inds, std::size_t island, std::size_t gen,
                GaResult& result) {
    std::vector<SampleRecord> recs(inds.size());
    std::vector<EvaluationRequest> requests(inds.size());
    const std::uint64_t first = result.samples.size();
    for (std::size_t i = 0; i < inds.size(); ++i) {
      auto& r = recs[i];
      r.id = first + i;
      r.iteration = gen;
      r.island = island;
      r.unit = inds[i].genome;
      r.params = physical_parameters(spec_, dims_, r.unit);
      requests[i] = {r.id, r.params};
    }
    auto results = evaluator_.evaluate_batch(requests);
    std::map<std::uint64_t, EvaluationResult*> by_id;
    for (auto& res : results) by_id[res.id] = &res;
    for (std::size_t i = 0; i < inds.size(); ++i) {
      auto& r = recs[i];
      if (auto it = by_id.find(r.id); it != by_id.end()) {
        r.meas = std::move(it->second->meas);
        r.error = it->second->error;
      } else {
        r.error = "no result";
      }
      r.fitness.raw = raw_fitness(spec_, r.meas, ga_rho);
      r.failed = !r.error.empty() || r.fitness.raw.failed;
      r.fitness.raw.failed = r.failed;
      r.ga_objectives = r.failed
                            ? std::vector<double>(std::max<std::size_t>(spec_.objectives.size(), 1),
                                                  ga_failed_objective)
                            : ga_objectives(spec_, r.meas);
      r.valid = !r.failed && is_valid(spec_, r.meas);
      inds[i].objectives = r.ga_objectives;
      inds[i].sample_id = r.id;
    }
    if (log_) log_->iteration({gen, 0.0, recs.size(), island, std::nullopt}, recs);
    for (auto& r : recs) result.samples.push_back(std::move(r));
  }

  ProblemSpec spec_;
  IslandConfig cfg_;
  std::vector<DimensionDescriptor> dims_;
  Evaluator& evaluator_;
  std::uint64_t seed_;
  RunLogWriter* log_;
};

}  // namespace cars
