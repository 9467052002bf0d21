#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cars/engine.hpp"
#include "cars/surrogates.hpp"

using namespace cars;

namespace {

ProblemSpec unit_square(std::size_t n_dim = 2) {
  ProblemSpec s;
  s.name = "square";
  for (std::size_t i = 0; i < n_dim; ++i)
    s.parameters.push_back({"x" + std::to_string(i), Scale::linear, 0, 1, {}, 1});
  s.objectives = {{"f", ObjectiveKind::max, {}, {}}};
  s.validate();
  return s;
}

// f = 1 inside one sub-domain of the 9x9 grid, 0 elsewhere.
ModelFn cell_indicator(std::size_t cx, std::size_t cy) {
  return [cx, cy](const ValueMap& p) {
    const auto in = [](double x, std::size_t c) { return x >= c / 9.0 && x < (c + 1) / 9.0; };
    const bool hit = in(p.at("x0")[0], cx) && in(p.at("x1")[0], cy);
    return ValueMap{{"f", {hit ? 1.0 : 0.0}}};
  };
}

// Wraps another evaluator and loses the transport on batch `fail_at`,
// delivering only the first half of that batch.
class FlakyEvaluator : public Evaluator {
 public:
  FlakyEvaluator(ModelFn fn, std::size_t fail_at) : inner_(std::move(fn)), fail_at_(fail_at) {}

 protected:
  std::vector<EvaluationResult> do_evaluate(std::span<const EvaluationRequest> rq) override {
    auto out = inner_.evaluate_batch(rq);
    if (batches_++ == fail_at_) {
      out.resize(out.size() / 2);
      throw TransportError("lost", std::move(out));
    }
    return out;
  }

 private:
  FunctionEvaluator inner_;
  std::size_t fail_at_;
  std::size_t batches_ = 0;
};

// Answers in reverse order to check reassociation by id.
class ReversingEvaluator : public Evaluator {
 public:
  explicit ReversingEvaluator(ModelFn fn) : inner_(std::move(fn)) {}

 protected:
  std::vector<EvaluationResult> do_evaluate(std::span<const EvaluationRequest> rq) override {
    auto out = inner_.evaluate_batch(rq);
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  FunctionEvaluator inner_;
};

std::string run_to_log(const ProblemSpec& spec, const RunConfig& cfg, ModelFn fn) {
  std::ostringstream os;
  RunLogWriter log(os);
  FunctionEvaluator ev(std::move(fn));
  CarsEngine e(spec, cfg, ev, &log);
  e.write_header();
  e.run();
  return os.str();
}

std::size_t flat(const SampleRecord& s) { return flat_index(s.index, 9); }

}  // namespace

TEST(Engine, PureRandomSamplingIsUniform) {
  RunConfig cfg;
  cfg.n_total = 100000;
  cfg.seed = 5;
  cfg.n_pool = 0;
  cfg.oversampling = false;
  cfg.alpha = AlphaSchedule::constant(0);
  FunctionEvaluator ev(cell_indicator(0, 0));
  CarsEngine e(unit_square(), cfg, ev);
  e.run();
  std::vector<double> counts(81, 0);
  for (const auto& s : e.state().samples) ++counts[flat(s)];
  const double expected = 100000.0 / 81;
  double chi2 = 0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 80 degrees of freedom, p = 0.001.
  EXPECT_LT(chi2, 124.84);
}

TEST(Engine, IndicatorCellGainsShareAsAlphaGrows) {
  for (bool pooling : {false, true})
    for (bool over : {false, true}) {
      RunConfig cfg;
      cfg.n_total = 100000;  // 1000 samples per iteration
      cfg.seed = 3;
      cfg.n_pool = pooling ? 3 : 0;
      cfg.oversampling = over;
      FunctionEvaluator ev(cell_indicator(0, 0));
      CarsEngine e(unit_square(), cfg, ev);
      e.run(8);
      std::vector<double> share(8, 0);
      for (const auto& s : e.state().samples)
        if (flat(s) == 0) share[s.iteration] += 1.0 / 1000;
      // With extensions the share saturates near 1 within a few iterations.
      for (std::size_t t = 3; t < 8; ++t) {
        if (share[t - 1] < 0.99)
          EXPECT_GT(share[t], share[t - 1]) << pooling << over << " t=" << t;
        else
          EXPECT_GE(share[t], 0.99) << pooling << over << " t=" << t;
      }
    }
}

TEST(Engine, BudgetContainmentAndReconstruction) {
  const auto tf = constrained_testfn("sphere_ring", 3);
  for (std::size_t n_total : {1u, 7u, 100u, 1234u}) {
    RunConfig cfg;
    cfg.n_total = n_total;
    cfg.seed = n_total;
    FunctionEvaluator ev(tf.model);
    CarsEngine e(tf.problem, cfg, ev);
    e.run();
    ASSERT_EQ(e.state().samples.size(), n_total);
    EXPECT_EQ(ev.calls(), n_total);
    for (const auto& s : e.state().samples)
      for (std::size_t d = 0; d < 3; ++d) {
        const auto box = subdomain_unit_interval(s.index[d], 9);
        EXPECT_GE(s.unit[d], box.lo);
        EXPECT_LE(s.unit[d], box.hi);
      }
    const auto rebuilt = tensor_from_samples(3, 9, e.state().samples);
    for (std::uint64_t i = 0; i < rebuilt.cells().size(); ++i)
      ASSERT_EQ(rebuilt.cell(i), e.state().tensor.cell(i));
  }
}

TEST(Engine, OversamplingDoesNotAddEvaluations) {
  const auto tf = constrained_testfn("sphere_ring", 4);
  RunConfig cfg;
  cfg.n_total = 500;
  FunctionEvaluator ev(tf.model);
  CarsEngine e(tf.problem, cfg, ev);
  std::uint64_t before = 0;
  while (!e.finished()) {
    const auto planned = e.state().plan.batch_size(e.state().iteration);
    e.step();
    EXPECT_EQ(ev.calls() - before, planned);
    before = ev.calls();
  }
}

TEST(Engine, SeedDeterminism) {
  const auto tf = constrained_testfn("rosenbrock", 2);
  RunConfig cfg;
  cfg.n_total = 300;
  cfg.seed = 77;
  const auto a = run_to_log(tf.problem, cfg, tf.model);
  const auto b = run_to_log(tf.problem, cfg, tf.model);
  EXPECT_EQ(a, b);
  cfg.seed = 78;
  EXPECT_NE(a, run_to_log(tf.problem, cfg, tf.model));
}

TEST(Engine, OutOfOrderResultsAreMatchedById) {
  const auto tf = constrained_testfn("sphere_ring", 2);
  RunConfig cfg;
  cfg.n_total = 200;
  const auto want = run_to_log(tf.problem, cfg, tf.model);
  std::ostringstream os;
  RunLogWriter log(os);
  ReversingEvaluator ev(tf.model);
  CarsEngine e(tf.problem, cfg, ev, &log);
  e.write_header();
  e.run();
  EXPECT_EQ(os.str(), want);
}

TEST(Engine, IterationZeroIdenticalAcrossVariants) {
  const auto tf = constrained_testfn("sphere_ring", 4);
  std::vector<std::vector<std::vector<double>>> first;
  for (bool pooling : {false, true})
    for (bool over : {false, true}) {
      RunConfig cfg;
      cfg.n_total = 1000;
      cfg.seed = 9;
      cfg.n_pool = pooling ? 3 : 0;
      cfg.oversampling = over;
      FunctionEvaluator ev(tf.model);
      CarsEngine e(tf.problem, cfg, ev);
      e.step();
      std::vector<std::vector<double>> pts;
      for (const auto& s : e.state().samples) pts.push_back(s.unit);
      first.push_back(pts);
    }
  for (std::size_t i = 1; i < first.size(); ++i) EXPECT_EQ(first[i], first[0]);
}

TEST(Engine, FailedSamplesAreFlaggedAndRunContinues) {
  const auto spec = unit_square();
  RunConfig cfg;
  cfg.n_total = 400;
  FunctionEvaluator ev([](const ValueMap& p) {
    const double x = p.at("x0")[0];
    return ValueMap{{"f", {x < 0.3 ? std::nan("") : x}}};
  });
  CarsEngine e(spec, cfg, ev);
  e.run();
  ASSERT_EQ(e.state().samples.size(), 400u);
  std::size_t failed = 0;
  for (const auto& s : e.state().samples) {
    if (s.unit[0] < 0.3) {
      EXPECT_TRUE(s.failed);
      EXPECT_FALSE(s.valid);
      EXPECT_EQ(s.fitness.scalar, 0.0);
      ++failed;
    } else {
      EXPECT_FALSE(s.failed);
    }
  }
  EXPECT_GT(failed, 0u);
}

TEST(Engine, InvalidConfigRejected) {
  FunctionEvaluator ev(cell_indicator(0, 0));
  RunConfig cfg;
  cfg.n_pool = 2;
  EXPECT_THROW(CarsEngine(unit_square(), cfg, ev), ConfigError);
  cfg.n_pool = 3;
  cfg.n_subdomain = 1;
  EXPECT_THROW(CarsEngine(unit_square(), cfg, ev), ConfigError);
  cfg.n_subdomain = 9;
  cfg.cell_cap = 80;
  EXPECT_THROW(CarsEngine(unit_square(), cfg, ev), ConfigError);
}

TEST(Resume, ReplayAfterIterationThree) {
  const auto tf = constrained_testfn("sphere_ring", 2);
  RunConfig cfg;
  cfg.n_total = 100;
  cfg.seed = 4;
  const auto full = run_to_log(tf.problem, cfg, tf.model);

  std::ostringstream part;
  {
    RunLogWriter log(part);
    FunctionEvaluator ev(tf.model);
    CarsEngine e(tf.problem, cfg, ev, &log);
    e.write_header();
    e.run(3);
  }
  std::istringstream in(part.str());
  std::ostringstream rest;
  RunLogWriter log(rest);
  FunctionEvaluator ev(tf.model);
  RunConfig other = cfg;
  other.seed = 999;  // seed and budget come from the log
  other.n_total = 5;
  auto e = CarsEngine::resume(in, tf.problem, other, ev, &log);
  EXPECT_EQ(e.state().iteration, 3u);
  e.run();
  EXPECT_EQ(part.str() + rest.str(), full);
}

TEST(Resume, FiveplusFiveEqualsTen) {
  const auto tf = constrained_testfn("rastrigin", 3);
  RunConfig cfg;
  cfg.n_total = 500;
  cfg.seed = 12;
  ASSERT_EQ(heuristic_schedule(500).n_iter, 10u);
  const auto full = run_to_log(tf.problem, cfg, tf.model);
  std::ostringstream part;
  {
    RunLogWriter log(part);
    FunctionEvaluator ev(tf.model);
    CarsEngine e(tf.problem, cfg, ev, &log);
    e.write_header();
    e.run(5);
  }
  std::istringstream in(part.str());
  std::ostringstream rest;
  RunLogWriter log(rest);
  FunctionEvaluator ev(tf.model);
  auto e = CarsEngine::resume(in, tf.problem, cfg, ev, &log);
  e.run();
  EXPECT_EQ(part.str() + rest.str(), full);
  EXPECT_EQ(ev.calls(), 250u);
}

TEST(Resume, AfterFinalIterationIsIdentity) {
  const auto tf = constrained_testfn("sphere_ring", 2);
  RunConfig cfg;
  cfg.n_total = 200;
  std::ostringstream os;
  RunLogWriter log(os);
  FunctionEvaluator ev(tf.model);
  CarsEngine e(tf.problem, cfg, ev, &log);
  e.write_header();
  e.run();
  std::istringstream in(os.str());
  FunctionEvaluator ev2(tf.model);
  auto r = CarsEngine::resume(in, tf.problem, cfg, ev2);
  r.run();
  r.extend(0);
  EXPECT_EQ(ev2.calls(), 0u);
  EXPECT_TRUE(r.finished());
  EXPECT_EQ(r.state().samples.size(), e.state().samples.size());
  EXPECT_EQ(r.state().iteration, e.state().iteration);
  for (std::uint64_t i = 0; i < 81; ++i) EXPECT_EQ(r.state().tensor.cell(i), e.state().tensor.cell(i));
  ASSERT_TRUE(r.state().constants);
  EXPECT_EQ(r.state().constants->aggregate.max, e.state().constants->aggregate.max);
}

TEST(Resume, GreedyAlphaConcentratesOnBestCell) {
  const auto spec = unit_square();
  RunConfig cfg;
  cfg.n_total = 2000;
  cfg.seed = 1;
  cfg.n_pool = 0;
  cfg.oversampling = false;
  cfg.alpha = AlphaSchedule::constant(0);
  std::ostringstream os;
  RunLogWriter log(os);
  FunctionEvaluator ev(cell_indicator(4, 4));
  CarsEngine e(spec, cfg, ev, &log);
  e.write_header();
  e.run();
  // Every cell observed and the best one leads by at least 0.5.
  const auto& t = e.state().tensor;
  ASSERT_EQ(t.touched_count(), 81u);
  std::vector<float> cells(t.cells().begin(), t.cells().end());
  std::sort(cells.rbegin(), cells.rend());
  ASSERT_GE(cells[0] - cells[1], 0.5f);

  std::istringstream in(os.str());
  RunConfig greedy = cfg;
  greedy.alpha = AlphaSchedule::constant(20);
  FunctionEvaluator ev2(cell_indicator(4, 4));
  auto r = CarsEngine::resume(in, spec, greedy, ev2);
  r.extend(1);
  std::size_t hits = 0;
  std::size_t n = 0;
  for (const auto& s : r.state().samples)
    if (s.iteration == 20) {
      ++n;
      hits += flat(s) == 4 * 9 + 4;
    }
  ASSERT_EQ(n, 100u);
  EXPECT_GT(double(hits) / double(n), 0.9);
}

TEST(Resume, GeometryMismatchRejected) {
  const auto tf = constrained_testfn("sphere_ring", 2);
  RunConfig cfg;
  cfg.n_total = 50;
  const auto text = run_to_log(tf.problem, cfg, tf.model);
  FunctionEvaluator ev(tf.model);
  {
    std::istringstream in(text);
    RunConfig other = cfg;
    other.n_subdomain = 6;
    EXPECT_THROW(CarsEngine::resume(in, tf.problem, other, ev), LogError);
  }
  {
    std::istringstream in(text);
    const auto tf3 = constrained_testfn("sphere_ring", 3);
    EXPECT_THROW(CarsEngine::resume(in, tf3.problem, cfg, ev), LogError);
  }
}

TEST(Resume, TransportLossLeavesResumableLog) {
  const auto tf = constrained_testfn("sphere_ring", 3);
  RunConfig cfg;
  cfg.n_total = 500;
  cfg.seed = 21;
  const auto full = run_to_log(tf.problem, cfg, tf.model);

  std::ostringstream part;
  {
    RunLogWriter log(part);
    FlakyEvaluator ev(tf.model, 4);
    CarsEngine e(tf.problem, cfg, ev, &log);
    e.write_header();
    EXPECT_THROW(e.run(), TransportError);
    EXPECT_EQ(e.state().iteration, 4u);
  }
  std::istringstream in(part.str());
  const auto parsed = read_run_log(in);
  EXPECT_EQ(parsed.iterations.size(), 4u);
  EXPECT_FALSE(parsed.truncated);

  std::ostringstream rest;
  RunLogWriter log(rest);
  FunctionEvaluator ev(tf.model);
  auto e = CarsEngine::resume(parsed, tf.problem, cfg, ev, &log);
  e.run();
  EXPECT_EQ(part.str() + rest.str(), full);
}

TEST(RunLog, TruncatedTailIsDropped) {
  const auto tf = constrained_testfn("sphere_ring", 2);
  RunConfig cfg;
  cfg.n_total = 100;
  const auto text = run_to_log(tf.problem, cfg, tf.model);
  std::istringstream whole(text);
  const auto all = read_run_log(whole);
  ASSERT_FALSE(all.truncated);
  EXPECT_EQ(all.complete_bytes, text.size());

  // Cut in the middle of the last iteration's samples.
  const std::string cut = text.substr(0, text.size() - 200);
  std::istringstream in(cut);
  const auto parsed = read_run_log(in);
  EXPECT_TRUE(parsed.truncated);
  EXPECT_EQ(parsed.iterations.size(), all.iterations.size() - 1);
  EXPECT_EQ(text.substr(0, parsed.complete_bytes).back(), '\n');

  std::istringstream prefix(text.substr(0, parsed.complete_bytes));
  const auto again = read_run_log(prefix);
  EXPECT_FALSE(again.truncated);
  EXPECT_EQ(again.iterations.size(), parsed.iterations.size());
}

TEST(RunLog, CorruptLineRejected) {
  std::istringstream in("{\"type\":\"run\"}\nnot json\n{}\n");
  EXPECT_THROW(read_run_log(in), LogError);
}

TEST(RunLog, SampleRoundTrip) {
  const auto tf = constrained_testfn("sphere_ring", 2);
  RunConfig cfg;
  cfg.n_total = 60;
  std::ostringstream os;
  RunLogWriter log(os);
  FunctionEvaluator ev(tf.model);
  CarsEngine e(tf.problem, cfg, ev, &log);
  e.write_header();
  e.run();
  std::istringstream in(os.str());
  const auto parsed = read_run_log(in);
  ASSERT_TRUE(parsed.header);
  EXPECT_EQ(parsed.header->n_dim, 2u);
  EXPECT_EQ(parsed.header->n_sub, 9u);
  std::size_t k = 0;
  for (const auto& it : parsed.iterations)
    for (const auto& s : it.samples) {
      const auto& o = e.state().samples[k++];
      EXPECT_EQ(s.id, o.id);
      EXPECT_EQ(s.index, o.index);
      EXPECT_EQ(s.unit, o.unit);
      EXPECT_EQ(s.params, o.params);
      EXPECT_EQ(s.meas, o.meas);
      EXPECT_EQ(s.fitness.scalar, o.fitness.scalar);
      EXPECT_EQ(s.valid, o.valid);
    }
  EXPECT_EQ(k, 60u);
}
