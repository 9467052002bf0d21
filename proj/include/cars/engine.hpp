#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cars/evaluator.hpp"
#include "cars/fitness.hpp"
#include "cars/knn.hpp"
#include "cars/problem.hpp"
#include "cars/rng.hpp"
#include "cars/run_log.hpp"
#include "cars/schedule.hpp"
#include "cars/tensor.hpp"

namespace cars {

struct RunConfig {
  std::size_t n_total = 1000;
  std::uint64_t seed = 0;
  std::size_t n_subdomain = 9;
  std::size_t n_pool = 3;  // 0 disables pooling
  bool oversampling = true;
  AlphaSchedule alpha;
  std::uint64_t cell_cap = default_cell_cap;
  // Optional replacement for the uniform 0.75 initialization.
  std::function<double(const MultiIndex&)> prior;

  void validate() const {
    if (n_total < 1) throw ConfigError("n_total must be >= 1");
    if (n_subdomain < 2) throw ConfigError("n_subdomain must be >= 2");
    if (n_pool != 0 && n_subdomain % n_pool != 0)
      throw ConfigError("n_pool must divide n_subdomain");
  }
};

struct RunState {
  IterationPlan plan;
  std::size_t iteration = 0;  // next iteration to run
  double alpha = 0.0;         // alpha of the last completed iteration
  std::optional<NormalizationConstants> constants;
  SubdomainTensor tensor;
  NeighborStore store;
  std::vector<SampleRecord> samples;
};

/// The CARS sampling loop.
///
/// Every random number is drawn from a counter-based stream keyed by
/// (seed, iteration, candidate number), so a run is reproducible from its
/// seed and resumable from its log without saving generator state.
class CarsEngine {
 public:
  CarsEngine(ProblemSpec spec, RunConfig cfg, Evaluator& evaluator,
             RunLogWriter* log = nullptr)
      : spec_(std::move(spec)),
        cfg_(std::move(cfg)),
        dims_(sampled_dimensions(spec_)),
        evaluator_(evaluator),
        log_(log),
        state_{heuristic_schedule(cfg_.n_total), 0, 0.0, std::nullopt,
               SubdomainTensor(dims_.size(), cfg_.n_subdomain, cfg_.cell_cap),
               NeighborStore(dims_.size()), {}} {
    cfg_.validate();
    if (cfg_.prior) state_.tensor.seed_prior(cfg_.prior);
  }

  /// Rebuilds the run state from a log written by a run on the same problem
  /// geometry and continues from there. Seed and iteration plan come from the
  /// log; pooling, oversampling and the alpha schedule come from `cfg`.
  static CarsEngine resume(std::istream& log_in, ProblemSpec spec, RunConfig cfg,
                           Evaluator& evaluator, RunLogWriter* log_out = nullptr) {
    const ParsedLog parsed = read_run_log(log_in);
    return resume(parsed, std::move(spec), std::move(cfg), evaluator, log_out);
  }

  static CarsEngine resume(const ParsedLog& parsed, ProblemSpec spec, RunConfig cfg,
                           Evaluator& evaluator, RunLogWriter* log_out = nullptr) {
    if (!parsed.header) throw LogError("run log has no header");
    const RunHeader& h = *parsed.header;
    if (h.method != "cars") throw LogError("run log was not written by a CARS run");
    const auto dims = sampled_dimensions(spec);
    if (h.n_dim != dims.size() || h.n_sub != cfg.n_subdomain)
      throw LogError("run log geometry (" + std::to_string(h.n_dim) + " dims, " +
                     std::to_string(h.n_sub) + " sub-domains) does not match the problem (" +
                     std::to_string(dims.size()) + " dims, " + std::to_string(cfg.n_subdomain) +
                     " sub-domains)");
    cfg.seed = h.seed;
    cfg.n_total = h.n_total;
    CarsEngine e(std::move(spec), std::move(cfg), evaluator, log_out);
    for (const auto& it : parsed.iterations) {
      if (it.header.iteration != e.state_.iteration)
        throw LogError("run log iterations are not consecutive");
      if (it.header.normalization) e.state_.constants = it.header.normalization;
      for (const auto& s : it.samples) {
        if (s.index.size() != e.dims_.size() || s.unit.size() != e.dims_.size())
          throw LogError("sample " + std::to_string(s.id) + " has wrong dimensionality");
        e.state_.tensor.update(s.index, s.fitness.scalar);
        e.state_.store.add(s.unit, s.fitness.scalar);
        e.state_.samples.push_back(s);
      }
      e.state_.alpha = it.header.alpha;
      ++e.state_.iteration;
    }
    return e;
  }

  const ProblemSpec& problem() const noexcept { return spec_; }
  const RunConfig& config() const noexcept { return cfg_; }
  const std::vector<DimensionDescriptor>& dimensions() const noexcept { return dims_; }
  const RunState& state() const noexcept { return state_; }
  bool finished() const noexcept { return state_.iteration >= state_.plan.n_iter; }

  RunHeader header() const {
    RunHeader h;
    h.problem = spec_.name;
    h.n_dim = dims_.size();
    h.n_sub = cfg_.n_subdomain;
    h.n_pool = cfg_.n_pool;
    h.oversampling = cfg_.oversampling;
    h.seed = cfg_.seed;
    h.n_total = cfg_.n_total;
    h.n_iter = state_.plan.n_iter;
    h.n_samples = state_.plan.n_samples;
    h.alpha_schedule = cfg_.alpha.str();
    for (const auto& d : dims_) h.dimensions.push_back(d.name);
    return h;
  }

  void write_header() {
    if (log_) log_->header(header());
  }

  // Runs the planned iterations, at most `max_iterations` of them.
  void run(std::size_t max_iterations = std::numeric_limits<std::size_t>::max()) {
    for (std::size_t i = 0; i < max_iterations && !finished(); ++i) step();
  }

  // Iterations beyond the plan, each with the planned batch size.
  void extend(std::size_t iterations) {
    for (std::size_t i = 0; i < iterations; ++i) step(state_.plan.n_samples);
  }

  // One iteration; `batch` defaults to the planned size for this iteration.
  void step(std::optional<std::size_t> batch = std::nullopt) {
    const std::size_t t = state_.iteration;
    const std::size_t n = batch ? *batch
                          : t < state_.plan.n_iter ? state_.plan.batch_size(t)
                                                   : state_.plan.n_samples;
    const double alpha = cfg_.alpha(t);
    const std::size_t n_dim = dims_.size();

    if (cfg_.n_pool != 0)
      state_.tensor.pool(cfg_.n_pool);
    else
      state_.tensor.clear_pool();

    const bool oversample = cfg_.oversampling && !state_.store.empty();
    const std::size_t width = oversample ? oversampling_width(n_dim) : 1;
    const std::size_t n_candidates = n * width;

    std::vector<double> u(n_candidates);
    for (std::size_t k = 0; k < n_candidates; ++k)
      u[k] = CounterRng(cfg_.seed, StreamTag::subdomain_draw, t, k).uniform();
    const auto cells = state_.tensor.sample(alpha, u);

    std::vector<std::vector<double>> points(n_candidates, std::vector<double>(n_dim));
    std::vector<MultiIndex> indices(n_candidates);
    const double n_sub = static_cast<double>(cfg_.n_subdomain);
    for (std::size_t k = 0; k < n_candidates; ++k) {
      indices[k] = multi_index(cells[k], cfg_.n_subdomain, n_dim);
      CounterRng rng(cfg_.seed, StreamTag::in_cell_point, t, k);
      for (std::size_t d = 0; d < n_dim; ++d) {
        const double x = (static_cast<double>(indices[k][d]) + rng.uniform()) / n_sub;
        points[k][d] = std::min(x, 1.0);
      }
    }

    std::vector<std::size_t> pick(n, 0);
    if (width > 1)
      pick = select_oversampled(points, width, state_.store, neighbor_count(n_dim));

    std::vector<SampleRecord> batch_records(n);
    std::vector<EvaluationRequest> requests(n);
    const std::uint64_t first_id = state_.samples.size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = i * width + pick[i];
      auto& rec = batch_records[i];
      rec.id = first_id + i;
      rec.iteration = t;
      rec.index = std::move(indices[k]);
      rec.unit = std::move(points[k]);
      rec.params = physical_parameters(spec_, dims_, rec.unit);
      requests[i] = {rec.id, rec.params};
    }

    auto results = evaluator_.evaluate_batch(requests);
    std::map<std::uint64_t, EvaluationResult*> by_id;
    for (auto& r : results) by_id[r.id] = &r;

    std::vector<RawFitness> raws(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& rec = batch_records[i];
      auto it = by_id.find(rec.id);
      if (it == by_id.end()) {
        rec.error = "no result";
      } else {
        rec.meas = std::move(it->second->meas);
        rec.error = it->second->error;
      }
      raws[i] = raw_fitness(spec_, rec.meas, cars_rho);
      if (!rec.error.empty()) raws[i].failed = true;
      rec.failed = raws[i].failed;
      rec.valid = !rec.failed && is_valid(spec_, rec.meas);
    }

    if (!state_.constants) state_.constants = freeze_constants(spec_, raws);
    for (std::size_t i = 0; i < n; ++i)
      batch_records[i].fitness = cars_breakdown(std::move(raws[i]), *state_.constants);

    for (const auto& rec : batch_records) {
      state_.tensor.update(rec.index, rec.fitness.scalar);
      state_.store.add(rec.unit, rec.fitness.scalar);
    }
    if (log_) log_->iteration({t, alpha, n, std::nullopt, state_.constants}, batch_records);
    for (auto& rec : batch_records) state_.samples.push_back(std::move(rec));
    state_.alpha = alpha;
    ++state_.iteration;
  }

 private:
  ProblemSpec spec_;
  RunConfig cfg_;
  std::vector<DimensionDescriptor> dims_;
  Evaluator& evaluator_;
  RunLogWriter* log_;
  RunState state_;
};

// Rebuilds a tensor from logged samples alone (first observation replaces the
// prior, later ones take the max).
inline SubdomainTensor tensor_from_samples(std::size_t n_dim, std::size_t n_sub,
                                           std::span<const SampleRecord> samples,
                                           std::uint64_t cell_cap = default_cell_cap) {
  SubdomainTensor t(n_dim, n_sub, cell_cap);
  for (const auto& s : samples) t.update(s.index, s.fitness.scalar);
  return t;
}

}  // namespace cars
