#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cars/fitness.hpp"

using namespace cars;

namespace {

ObjectiveDef objective(ObjectiveKind kind, std::size_t n_ops, std::vector<double> targets = {}) {
  ObjectiveDef o{"m", kind, std::move(targets), {}};
  for (std::size_t i = 0; i < n_ops; ++i) o.ops.push_back(i);
  if (o.targets.size() == 1) o.targets.assign(n_ops, o.targets[0]);
  return o;
}

ProblemSpec two_objectives() {
  ProblemSpec s;
  s.n_operating_points = 2;
  s.parameters = {{"x", Scale::linear, 0, 1, {}, 1}};
  s.objectives = {{"eff", ObjectiveKind::max, {}, {}}, {"v", ObjectiveKind::target, {12}, {}}};
  s.boundaries = {{"v", BoundaryKind::range, {{11.5, 12.5}}, {}},
                  {"i", BoundaryKind::larger, {{0, 0}}, {}}};
  s.validate();
  return s;
}

}  // namespace

TEST(CanberraSqrt, Examples) {
  EXPECT_EQ(canberra_sqrt(2300, 2300), 0.0);
  EXPECT_NEAR(canberra_sqrt(2400, 2300), std::sqrt(100.0 / 4700), 1e-15);
  EXPECT_NEAR(canberra_sqrt(2400, 2300), 0.14587, 1e-5);
  EXPECT_EQ(canberra_sqrt(0, 0), 0.0);
}

TEST(CanberraSqrt, DominatesItsArgument) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-1e4, 1e4);
  for (int i = 0; i < 10000; ++i) {
    const double v = d(rng);
    const double t = d(rng);
    const double arg = std::abs(v - t) / (std::abs(v) + std::abs(t));
    EXPECT_GE(canberra_sqrt(v, t), arg);
  }
  EXPECT_NEAR(canberra_sqrt(2310, 2300), 0.0466, 1e-4);
}

TEST(BoundaryPenalty, Examples) {
  EXPECT_EQ(boundary_penalty(BoundaryKind::range, {11.5, 12.5}, 12, cars_rho), 0.0);
  EXPECT_NEAR(boundary_penalty(BoundaryKind::target, {2300, 2300}, 2400, cars_rho), 14.587, 1e-3);
  EXPECT_NEAR(boundary_penalty(BoundaryKind::range, {2600, 2700}, 2300, cars_rho),
              100 * std::sqrt(300.0 / 4900), 1e-12);
  EXPECT_NEAR(boundary_penalty(BoundaryKind::range, {2600, 2700}, 2300, cars_rho), 24.74, 1e-2);
  EXPECT_NEAR(boundary_penalty(BoundaryKind::range, {2600, 2700}, 2800, cars_rho),
              100 * std::sqrt(100.0 / 5500), 1e-12);
}

TEST(BoundaryPenalty, LargerIsStrict) {
  EXPECT_EQ(boundary_penalty(BoundaryKind::larger, {0, 0}, 1e-9, cars_rho), 0.0);
  EXPECT_GT(boundary_penalty(BoundaryKind::larger, {0, 0}, 0.0, cars_rho), 0.0);
  EXPECT_GT(boundary_penalty(BoundaryKind::larger, {5, 5}, 5.0, cars_rho), 0.0);
  EXPECT_NEAR(boundary_penalty(BoundaryKind::larger, {5, 5}, 4.0, cars_rho),
              100 * std::sqrt(1.0 / 9), 1e-12);
}

TEST(BoundaryPenalty, NonNegativeAndZeroIffSatisfied) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> d(-100, 100);
  for (int i = 0; i < 5000; ++i) {
    double lo = d(rng), hi = d(rng);
    if (lo > hi) std::swap(lo, hi);
    const double v = d(rng);
    const double r = boundary_penalty(BoundaryKind::range, {lo, hi}, v, cars_rho);
    EXPECT_GE(r, 0.0);
    EXPECT_EQ(r == 0.0, lo <= v && v <= hi);
    const double l = boundary_penalty(BoundaryKind::larger, {lo, lo}, v, cars_rho);
    EXPECT_GE(l, 0.0);
    EXPECT_EQ(l == 0.0, v > lo);
    const double t = boundary_penalty(BoundaryKind::target, {lo, lo}, v, cars_rho);
    EXPECT_GE(t, 0.0);
    EXPECT_EQ(t == 0.0, v == lo);
  }
}

TEST(BoundaryPenalty, MeanOverOperatingPoints) {
  BoundaryDef b{"v", BoundaryKind::range, {{0, 1}, {0, 1}}, {0, 1}};
  std::vector<double> meas{0.5, 3.0};
  EXPECT_NEAR(boundary_penalty(b, meas, 100), 0.5 * 100 * std::sqrt(2.0 / 4), 1e-12);
}

TEST(ObjectiveFitness, Examples) {
  std::vector<double> three{250e3, 300e3, 280e3};
  EXPECT_DOUBLE_EQ(objective_fitness(objective(ObjectiveKind::min_range, 3), three), -50e3);
  std::vector<double> twelve{12};
  EXPECT_EQ(objective_fitness(objective(ObjectiveKind::target, 1, {12}), twelve), 0.0);
  std::vector<double> two{0.9, 0.8};
  EXPECT_DOUBLE_EQ(objective_fitness(objective(ObjectiveKind::max, 2), two), 0.85);
  EXPECT_DOUBLE_EQ(objective_fitness(objective(ObjectiveKind::min, 2), two), -0.85);
}

TEST(Normalize, Examples) {
  const Range c{-5, 15};
  EXPECT_DOUBLE_EQ(normalize(10, c), 0.75);
  EXPECT_EQ(normalize(-5, c), 0.0);
  EXPECT_EQ(normalize(15, c), 1.0);
  EXPECT_GT(normalize(16, c), 1.0);
  EXPECT_EQ(normalize(3, Range{2, 2}), 0.5);
}

TEST(Normalize, StrictlyIncreasing) {
  const Range c{-3, 7};
  double prev = normalize(-10, c);
  for (double v = -9.5; v < 20; v += 0.5) {
    const double n = normalize(v, c);
    EXPECT_GT(n, prev);
    prev = n;
  }
}

TEST(Aggregate, MeanOfObjectivesMinusMeanOfPenalties) {
  NormalizationConstants c;
  c.objectives = {{0, 1}, {0, 1}};
  c.penalties = {{0, 1}};
  RawFitness r{{0.6, 0.8}, {0.0}, false};
  EXPECT_NEAR(cars_aggregate(r, c), 0.7, 1e-15);
  NormalizationConstants c1;
  c1.objectives = {{0, 1}};
  c1.penalties = {{0, 1}, {0, 1}};
  RawFitness r1{{0.5}, {0.1, 0.3}, false};
  EXPECT_NEAR(cars_aggregate(r1, c1), 0.3, 1e-15);
}

TEST(Aggregate, OrderInvariant) {
  NormalizationConstants c;
  c.objectives = {{0, 2}, {-1, 1}, {3, 9}};
  c.penalties = {{0, 50}, {0, 10}};
  RawFitness r{{0.4, 0.2, 5}, {13, 2}, false};
  NormalizationConstants cp;
  cp.objectives = {c.objectives[2], c.objectives[0], c.objectives[1]};
  cp.penalties = {c.penalties[1], c.penalties[0]};
  RawFitness rp{{5, 0.4, 0.2}, {2, 13}, false};
  EXPECT_NEAR(cars_aggregate(r, c), cars_aggregate(rp, cp), 1e-15);
}

TEST(Aggregate, GaVectorUnchangedWhenValid) {
  const auto s = two_objectives();
  ValueMap m{{"eff", {0.9, 0.7}}, {"v", {12, 12}}, {"i", {1, 2}}};
  const auto g = ga_objectives(s, m);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_DOUBLE_EQ(g[0], 0.8);
  EXPECT_EQ(g[1], 0.0);
}

TEST(Aggregate, GaVectorSubtractsEveryPenalty) {
  const auto s = two_objectives();
  ValueMap m{{"eff", {0.9, 0.7}}, {"v", {13, 12}}, {"i", {1, -1}}};
  const auto raw = raw_fitness(s, m, ga_rho);
  const double pen = raw.penalties[0] + raw.penalties[1];
  EXPECT_GT(raw.penalties[0], 0);
  EXPECT_GT(raw.penalties[1], 0);
  const auto g = ga_objectives(s, m);
  EXPECT_DOUBLE_EQ(g[0], 0.8 - pen);
  EXPECT_DOUBLE_EQ(g[1], raw.objectives[1] - pen);
}

TEST(Aggregate, FailedSamples) {
  const auto s = two_objectives();
  ValueMap m{{"eff", {0.9, NAN}}, {"v", {12, 12}}, {"i", {1, 2}}};
  EXPECT_EQ(ga_objectives(s, m), std::vector<double>(2, ga_failed_objective));
  const auto raw = raw_fitness(s, m, cars_rho);
  EXPECT_TRUE(raw.failed);
  NormalizationConstants c;
  c.objectives = {{0, 1}, {0, 1}};
  c.penalties = {{0, 1}, {0, 1}};
  c.aggregate = {-1, 1};
  EXPECT_EQ(cars_breakdown(raw, c).scalar, 0.0);
  ValueMap missing{{"eff", {0.9, 0.8}}, {"v", {12, 12}}};
  EXPECT_TRUE(raw_fitness(s, missing, cars_rho).failed);
}

TEST(FreezeConstants, FirstBatchExtremesAndAggregatePair) {
  const auto s = two_objectives();
  std::vector<RawFitness> batch{{{1, -0.1}, {0, 0}, false},
                                {{3, 0.0}, {10, 0}, false},
                                {{2, -0.2}, {5, 20}, false},
                                {{}, {}, true}};
  const auto c = freeze_constants(s, batch);
  EXPECT_EQ(c.objectives[0].min, 1);
  EXPECT_EQ(c.objectives[0].max, 3);
  EXPECT_EQ(c.objectives[1].min, -0.2);
  EXPECT_EQ(c.penalties[1].max, 20);
  double lo = 1e9, hi = -1e9;
  for (std::size_t i = 0; i < 3; ++i) {
    lo = std::min(lo, cars_aggregate(batch[i], c));
    hi = std::max(hi, cars_aggregate(batch[i], c));
  }
  EXPECT_EQ(c.aggregate.min, lo);
  EXPECT_EQ(c.aggregate.max, hi);
  // The best first-batch sample lands at 1, the worst at 0.
  std::vector<double> scalars;
  for (std::size_t i = 0; i < 3; ++i) scalars.push_back(cars_breakdown(batch[i], c).scalar);
  EXPECT_EQ(*std::max_element(scalars.begin(), scalars.end()), 1.0);
  EXPECT_EQ(*std::min_element(scalars.begin(), scalars.end()), 0.0);
}

TEST(IsValid, Examples) {
  const auto s = two_objectives();
  EXPECT_TRUE(is_valid(s, {{"eff", {1, 1}}, {"v", {12, 12}}, {"i", {1, 1}}}));
  EXPECT_FALSE(is_valid(s, {{"eff", {1, 1}}, {"v", {12, 13}}, {"i", {1, 1}}}));
  EXPECT_FALSE(is_valid(s, {{"eff", {1, 1}}, {"v", {12, 12}}, {"i", {1, 0}}}));
  EXPECT_FALSE(is_valid(s, {{"eff", {1, 1}}, {"v", {12, NAN}}, {"i", {1, 1}}}));
}

TEST(IsValid, ConsistentWithPenalties) {
  const auto s = two_objectives();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> v(11, 13);
  std::uniform_real_distribution<double> i(-0.5, 2);
  for (int k = 0; k < 2000; ++k) {
    ValueMap m{{"eff", {0.5, 0.5}}, {"v", {v(rng), v(rng)}}, {"i", {i(rng), k % 7 ? i(rng) : 0.0}}};
    const auto raw = raw_fitness(s, m, cars_rho);
    const bool zero = std::all_of(raw.penalties.begin(), raw.penalties.end(),
                                  [](double p) { return p == 0.0; });
    EXPECT_EQ(is_valid(s, m), zero);
  }
}
