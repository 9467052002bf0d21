#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "cars/engine.hpp"
#include "cars/report.hpp"

namespace cars {

struct StudyVariant {
  std::string name;
  bool pooling;
  bool oversampling;
};

// The four extension settings compared in an ablation.
inline std::vector<StudyVariant> study_variants() {
  return {{"both", true, true},
          {"oversampling", false, true},
          {"pooling", true, false},
          {"none", false, false}};
}

struct StudyRun {
  std::string variant;
  std::uint64_t seed = 0;
  std::vector<IterationStats> stats;
};

using EvaluatorFactory = std::function<std::unique_ptr<Evaluator>()>;

/// Runs every variant for every seed. `base.n_pool` is the pooling width used
/// by pooling variants (3 when the base has pooling off). When `log_dir` is
/// set each run writes study_<variant>_<seed>.ndjson there.
inline std::vector<StudyRun> run_study(const ProblemSpec& spec, const RunConfig& base,
                                       std::span<const std::uint64_t> seeds,
                                       const EvaluatorFactory& make_eval,
                                       const std::filesystem::path& log_dir = {}) {
  std::vector<StudyRun> out;
  const std::size_t pool_width = base.n_pool ? base.n_pool : 3;
  for (const auto& v : study_variants()) {
    for (auto seed : seeds) {
      RunConfig cfg = base;
      cfg.seed = seed;
      cfg.n_pool = v.pooling ? pool_width : 0;
      cfg.oversampling = v.oversampling;
      auto eval = make_eval();
      std::unique_ptr<std::ofstream> file;
      std::unique_ptr<RunLogWriter> writer;
      if (!log_dir.empty()) {
        file = std::make_unique<std::ofstream>(
            log_dir / ("study_" + v.name + "_" + std::to_string(seed) + ".ndjson"));
        writer = std::make_unique<RunLogWriter>(*file);
      }
      CarsEngine engine(spec, cfg, *eval, writer.get());
      engine.write_header();
      engine.run();
      out.push_back({v.name, seed, iteration_stats(engine.state().samples)});
    }
  }
  return out;
}

inline void write_study_csv(std::ostream& os, std::span<const StudyRun> runs) {
  os << "variant,seed,iteration,fit_min,fit_mean,fit_max\n";
  for (const auto& r : runs)
    for (const auto& s : r.stats)
      os << r.variant << ',' << r.seed << ',' << s.iteration << ','
         << detail::csv_number(s.fit_min) << ',' << detail::csv_number(s.fit_mean) << ','
         << detail::csv_number(s.fit_max) << '\n';
}

}  // namespace cars
