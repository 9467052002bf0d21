#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "cars/fitness.hpp"
#include "cars/rng.hpp"
#include "cars/tensor.hpp"

namespace cars {

struct BenchConfig {
  std::size_t n_params = 3;
  std::size_t n_sub = 9;
  std::size_t n_pool = 3;
  std::size_t batch = 1000;
  std::size_t repeats = 20;
  std::uint64_t cell_cap = default_cell_cap;
  std::uint64_t seed = 0;
};

struct BenchResult {
  BenchConfig config;
  std::uint64_t cells = 0;
  bool skipped = false;
  std::string note;
  std::vector<double> seconds;  // one per repeat

  double min() const { return seconds.empty() ? 0.0 : *std::min_element(seconds.begin(), seconds.end()); }
  double max() const { return seconds.empty() ? 0.0 : *std::max_element(seconds.begin(), seconds.end()); }
  double mean() const {
    double s = 0.0;
    for (double x : seconds) s += x;
    return seconds.empty() ? 0.0 : s / static_cast<double>(seconds.size());
  }
};

/// Times consecutive sampling iterations without any evaluator: assigning the
/// previous batch's fitness to its sub-domains, normalizing that fitness,
/// max-pooling, the softmax draw of the next batch and its in-cell points.
/// The synthetic fitness of each point (standing in for a simulation) is
/// computed outside the timed region.
inline BenchResult bench_sampling(const BenchConfig& cfg) {
  BenchResult r;
  r.config = cfg;
  r.cells = tensor_cell_count(cfg.n_params, cfg.n_sub);
  if (r.cells > cfg.cell_cap) {
    r.skipped = true;
    r.note = "exceeds cell cap " + std::to_string(cfg.cell_cap);
    return r;
  }
  using clock = std::chrono::steady_clock;
  SubdomainTensor tensor(cfg.n_params, cfg.n_sub, cfg.cell_cap);
  const std::size_t n = cfg.batch;
  std::vector<std::uint64_t> cells;
  std::vector<double> raw;
  std::vector<double> points(n * cfg.n_params);
  std::vector<double> u(n);
  const Range constants{-static_cast<double>(cfg.n_params) * 0.25, 0.0};

  for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
    const auto t0 = clock::now();
    for (std::size_t i = 0; i < cells.size(); ++i) tensor.update(cells[i], normalize(raw[i], constants));
    if (cfg.n_pool) tensor.pool(cfg.n_pool);
    for (std::size_t i = 0; i < n; ++i)
      u[i] = CounterRng(cfg.seed, StreamTag::bench, rep, i).uniform();
    cells = tensor.sample(static_cast<double>(rep), u);
    const double ns = static_cast<double>(cfg.n_sub);
    for (std::size_t i = 0; i < n; ++i) {
      CounterRng rng(cfg.seed, StreamTag::in_cell_point, rep, i);
      std::uint64_t flat = cells[i];
      for (std::size_t d = cfg.n_params; d-- > 0;) {
        points[i * cfg.n_params + d] = (static_cast<double>(flat % cfg.n_sub) + rng.uniform()) / ns;
        flat /= cfg.n_sub;
      }
    }
    const auto t1 = clock::now();
    r.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());

    raw.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < cfg.n_params; ++d) {
        const double x = points[i * cfg.n_params + d] - 0.5;
        raw[i] -= x * x;
      }
  }
  return r;
}

inline void write_bench_csv_header(std::ostream& os) {
  os << "n_params,n_sub,cells,batch,repeats,t_min,t_mean,t_max,status\n";
}

inline void write_bench_csv_row(std::ostream& os, const BenchResult& r) {
  os << r.config.n_params << ',' << r.config.n_sub << ',' << r.cells << ',' << r.config.batch << ','
     << r.config.repeats << ',';
  if (r.skipped) {
    os << ",,,skipped (" << r.note << ")\n";
  } else {
    os << r.min() << ',' << r.mean() << ',' << r.max() << ",ok\n";
  }
}

}  // namespace cars
