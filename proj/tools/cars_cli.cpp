// Command-line front end: run / resume / bench / study / report.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cars/cars.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode : int {
  exit_ok = 0,
  exit_config = 2,
  exit_evaluator = 3,
  exit_interrupted = 4,
};

struct RunOptions {
  std::string config;
  std::string method = "cars";
  std::string out_dir;
  std::string evaluator;
  std::string alpha_schedule;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t n_total = 0;
  std::uint64_t cell_cap = 0;
  bool no_pooling = false;
  bool no_oversampling = false;
  long timeout_ms = -1;
  std::size_t max_iterations = 0;
};

std::unique_ptr<cars::Evaluator> open_evaluator(const cars::LoadedConfig& c) {
  try {
    return cars::make_evaluator(c.evaluator, c.problem, c.external);
  } catch (const cars::ConfigError& e) {
    throw cars::EvaluatorError(e.what());
  }
}

std::string default_out_dir() {
  if (const char* env = std::getenv("CARS_OUT_DIR"); env && *env) return env;
  return ".";
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::path p = dir.empty() ? fs::path(default_out_dir()) : fs::path(dir);
  fs::create_directories(p);
  return p;
}

cars::LoadedConfig load_with_overrides(const RunOptions& o) {
  auto c = cars::load_config(o.config);
  if (o.seed_set) c.run.seed = o.seed;
  if (o.n_total) c.run.n_total = o.n_total;
  if (o.cell_cap) c.run.cell_cap = o.cell_cap;
  if (o.no_pooling) c.run.n_pool = 0;
  if (o.no_oversampling) c.run.oversampling = false;
  if (!o.alpha_schedule.empty()) c.run.alpha = cars::AlphaSchedule::parse(o.alpha_schedule);
  if (!o.evaluator.empty()) c.evaluator = o.evaluator;
  if (o.timeout_ms >= 0) c.external.timeout = std::chrono::milliseconds(o.timeout_ms);
  c.run.validate();
  return c;
}

void write_outputs(const fs::path& dir, const std::string& method,
                   const std::vector<cars::SampleRecord>& samples) {
  const auto stats = cars::iteration_stats(samples);
  std::ofstream summary(dir / (method + "_summary.csv"));
  cars::write_summary_csv(summary, stats);
  std::ofstream valid(dir / (method + "_valid.csv"));
  cars::write_valid_samples_csv(valid, samples);
  cars::print_report(std::cout, cars::make_report(samples));
}

int cmd_run(const RunOptions& o) {
  const auto cfg = load_with_overrides(o);
  const fs::path dir = prepare_out_dir(o.out_dir);
  auto evaluator = open_evaluator(cfg);
  const fs::path log_path = dir / (o.method + "_log.ndjson");
  std::ofstream log_file(log_path, std::ios::trunc);
  if (!log_file) throw cars::ConfigError("cannot write " + log_path.string());
  cars::RunLogWriter log(log_file);

  if (o.method == "ga") {
    cars::IslandGa ga(cfg.problem, cfg.ga, *evaluator, cfg.run.seed, &log);
    cars::GaResult result;
    try {
      result = ga.run();
    } catch (const cars::TransportError& e) {
      throw cars::EvaluatorError(e.what());  // GA runs are not resumable
    }
    std::cout << "evaluations: " << result.evaluations << " (" << cfg.ga.n_islands
              << " islands x " << cfg.ga.population << " x " << (cfg.ga.generations + 1)
              << ")\nbest front size: " << result.best.size() << '\n';
    write_outputs(dir, "ga", result.samples);
  } else if (o.method == "cars") {
    cars::CarsEngine engine(cfg.problem, cfg.run, *evaluator, &log);
    engine.write_header();
    try {
      engine.run(o.max_iterations ? o.max_iterations : std::numeric_limits<std::size_t>::max());
    } catch (const cars::TransportError& e) {
      // Nothing logged yet: most likely a broken evaluator command.
      if (engine.state().iteration == 0) throw cars::EvaluatorError(e.what());
      std::cerr << "interrupted: " << e.what() << "\nresume with: cars resume --config "
                << o.config << " --log " << log_path.string() << '\n';
      return exit_interrupted;
    }
    std::cout << "iterations: " << engine.state().iteration << '/' << engine.state().plan.n_iter
              << '\n';
    write_outputs(dir, "cars", engine.state().samples);
    if (!engine.finished()) return exit_interrupted;
  } else {
    throw cars::ConfigError("unknown method '" + o.method + "' (cars or ga)");
  }
  std::cout << "log: " << log_path.string() << '\n';
  return exit_ok;
}

int cmd_resume(const RunOptions& o, const std::string& log_path, std::size_t extra_iterations) {
  const auto cfg = load_with_overrides(o);
  cars::ParsedLog parsed;
  {
    std::ifstream in(log_path);
    if (!in) throw cars::ConfigError("cannot open log '" + log_path + "'");
    parsed = cars::read_run_log(in);
  }
  if (parsed.truncated) {
    std::cerr << "dropping incomplete trailing iteration from " << log_path << '\n';
    fs::resize_file(log_path, parsed.complete_bytes);
  }
  auto evaluator = open_evaluator(cfg);
  std::ofstream log_file(log_path, std::ios::app);
  cars::RunLogWriter log(log_file);
  auto engine = cars::CarsEngine::resume(parsed, cfg.problem, cfg.run, *evaluator, &log);
  const std::size_t start = engine.state().iteration;
  try {
    engine.run(o.max_iterations ? o.max_iterations : std::numeric_limits<std::size_t>::max());
    engine.extend(extra_iterations);
  } catch (const cars::TransportError& e) {
    std::cerr << "interrupted: " << e.what() << '\n';
    return exit_interrupted;
  }
  std::cout << "resumed at iteration " << start << ", now at " << engine.state().iteration << '\n';
  const fs::path dir = prepare_out_dir(o.out_dir.empty() ? fs::path(log_path).parent_path().string()
                                                         : o.out_dir);
  write_outputs(dir, "cars", engine.state().samples);
  return engine.finished() ? exit_ok : exit_interrupted;
}

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(static_cast<std::size_t>(std::stod(item)));
    } catch (const std::exception&) {
      throw cars::ConfigError("bad list item '" + item + "'");
    }
  }
  return out;
}

int cmd_bench(std::size_t min_params, std::size_t max_params, const std::string& batches,
              std::size_t repeats, std::size_t n_sub, std::size_t n_pool, std::uint64_t cell_cap,
              const std::string& out) {
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw cars::ConfigError("cannot write " + out);
    os = &file;
  }
  cars::write_bench_csv_header(*os);
  for (std::size_t p = min_params; p <= max_params; ++p)
    for (auto batch : parse_list(batches)) {
      cars::BenchConfig cfg;
      cfg.n_params = p;
      cfg.n_sub = n_sub;
      cfg.n_pool = n_pool;
      cfg.batch = batch;
      cfg.repeats = repeats;
      cfg.cell_cap = cell_cap;
      const auto r = cars::bench_sampling(cfg);
      cars::write_bench_csv_row(*os, r);
      os->flush();
      if (os != &std::cout) cars::write_bench_csv_row(std::cout, r);
    }
  return exit_ok;
}

int cmd_study(const RunOptions& o, const std::string& seeds_text) {
  const auto cfg = load_with_overrides(o);
  const fs::path dir = prepare_out_dir(o.out_dir);
  std::vector<std::uint64_t> seeds;
  for (auto s : parse_list(seeds_text)) seeds.push_back(s);
  if (seeds.empty()) throw cars::ConfigError("no seeds given");
  auto runs = cars::run_study(cfg.problem, cfg.run, seeds, [&] {
    return open_evaluator(cfg);
  }, dir);
  std::ofstream csv(dir / "study.csv");
  cars::write_study_csv(csv, runs);
  std::cout << "runs: " << runs.size() << "\nstudy: " << (dir / "study.csv").string() << '\n';
  return exit_ok;
}

int cmd_report(const std::string& log_path, const std::string& out_dir) {
  std::ifstream in(log_path);
  if (!in) throw cars::LogError("cannot open log '" + log_path + "'");
  const auto parsed = cars::read_run_log(in);
  std::vector<cars::SampleRecord> samples;
  for (const auto& it : parsed.iterations)
    for (const auto& s : it.samples) samples.push_back(s);
  if (parsed.truncated) std::cout << "note: incomplete trailing iteration ignored\n";
  const std::string method = parsed.header ? parsed.header->method : "cars";
  if (!out_dir.empty()) {
    const fs::path dir = prepare_out_dir(out_dir);
    std::ofstream summary(dir / (method + "_summary.csv"));
    cars::write_summary_csv(summary, cars::iteration_stats(samples));
    std::ofstream valid(dir / (method + "_valid.csv"));
    cars::write_valid_samples_csv(valid, samples);
  }
  cars::print_report(std::cout, cars::make_report(samples));
  return exit_ok;
}

void add_run_flags(CLI::App* sub, RunOptions& o, bool with_method) {
  sub->add_option("--config", o.config, "Problem/run config (JSON)")->required();
  if (with_method)
    sub->add_option("--method", o.method, "cars or ga")->check(CLI::IsMember({"cars", "ga"}));
  sub->add_option("--seed", o.seed, "Random seed")->each([&](const std::string&) { o.seed_set = true; });
  sub->add_option("--n-total", o.n_total, "Total sample budget");
  sub->add_flag("--no-pooling", o.no_pooling, "Disable max-pooling");
  sub->add_flag("--no-oversampling", o.no_oversampling, "Disable kNN oversampling");
  sub->add_option("--alpha-schedule", o.alpha_schedule, "iter | const:V | linear:S[,O]");
  sub->add_option("--evaluator", o.evaluator, "builtin:<name> or cmd:<command>");
  sub->add_option("--timeout-ms", o.timeout_ms, "Per-sample timeout for cmd: evaluators");
  sub->add_option("--out-dir", o.out_dir, "Output directory (default $CARS_OUT_DIR or .)");
  sub->add_option("--cell-cap", o.cell_cap, "Maximum tensor cells");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuously adapting random sampling for parameter design"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "Run CARS or the island GA on a config");
  add_run_flags(run, run_opts, true);
  run->add_option("--max-iterations", run_opts.max_iterations, "Stop after this many iterations");

  RunOptions resume_opts;
  std::string resume_log;
  std::size_t extra_iterations = 0;
  auto* resume = app.add_subcommand("resume", "Continue a CARS run from its log");
  add_run_flags(resume, resume_opts, false);
  resume->add_option("--log", resume_log, "Run log to continue")->required();
  resume->add_option("--extra-iterations", extra_iterations, "Iterations beyond the original plan");
  resume->add_option("--max-iterations", resume_opts.max_iterations, "Stop after this many iterations");

  std::size_t min_params = 1;
  std::size_t max_params = 6;
  std::string batches = "1000,10000,100000,1000000";
  std::size_t repeats = 20;
  std::size_t bench_sub = 9;
  std::size_t bench_pool = 3;
  std::uint64_t bench_cap = cars::default_cell_cap;
  std::string bench_out;
  auto* bench = app.add_subcommand("bench", "Time the sampling step without simulations");
  bench->add_option("--min-params", min_params, "Smallest parameter count");
  bench->add_option("--max-params", max_params, "Largest parameter count");
  bench->add_option("--batch-sizes", batches, "Comma-separated batch sizes");
  bench->add_option("--repeats", repeats, "Consecutive iterations per configuration");
  bench->add_option("--n-sub", bench_sub, "Sub-domains per parameter");
  bench->add_option("--n-pool", bench_pool, "Pooling width (0 = off)");
  bench->add_option("--cell-cap", bench_cap, "Skip tensors larger than this");
  bench->add_option("--out", bench_out, "CSV output file (default stdout)");

  RunOptions study_opts;
  std::string seeds = "1,2,3";
  auto* study = app.add_subcommand("study", "Extension ablation: 4 variants x seeds");
  add_run_flags(study, study_opts, false);
  study->add_option("--seeds", seeds, "Comma-separated seeds");

  std::string report_log;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Summarize a run log");
  report->add_option("--log", report_log, "Run log")->required();
  report->add_option("--out-dir", report_out, "Write summary/valid CSVs here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_config;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*resume) return cmd_resume(resume_opts, resume_log, extra_iterations);
    if (*bench)
      return cmd_bench(min_params, max_params, batches, repeats, bench_sub, bench_pool, bench_cap,
                       bench_out);
    if (*study) return cmd_study(study_opts, seeds);
    if (*report) return cmd_report(report_log, report_out);
  } catch (const cars::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const cars::LogError& e) {
    std::cerr << "log error: " << e.what() << '\n';
    return exit_config;
  } catch (const cars::TransportError& e) {
    std::cerr << "evaluator lost: " << e.what() << '\n';
    return exit_interrupted;
  } catch (const cars::EvaluatorError& e) {
    std::cerr << "evaluator error: " << e.what() << '\n';
    return exit_evaluator;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_config;
  }
  return exit_ok;
}
