#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qsurr/annealer.hpp"
#include "qsurr/error.hpp"
#include "support.hpp"

using namespace qsurr;

TEST(Exhaustive, Examples) {
  QuboModel m(2);
  m.set_coupling(0, 1, 5);
  m.set_linear(0, 1);
  m.set_linear(1, 2);
  m.set_constant(1);
  const auto [bits, value] = exhaustive_solve(m);
  EXPECT_EQ(bits.to_string(), "11");
  EXPECT_EQ(value, 9);

  const auto [zb, zv] = exhaustive_solve(QuboModel(5));
  EXPECT_EQ(zb.to_string(), "00000");
  EXPECT_EQ(zv, 0);
  EXPECT_THROW(exhaustive_solve(QuboModel(25)), Error);
}

TEST(Exhaustive, MatchesBruteRanking) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 30; ++t) {
    const auto m = oracle::random_model(1 + rng() % 10, rng);
    const auto ranking = oracle::brute_ranking(m);
    const auto [bits, value] = exhaustive_solve(m);
    EXPECT_EQ(bits, ranking.front().first);
    EXPECT_NEAR(value, ranking.front().second, 1e-9);
  }
}

TEST(Solve, ConstantModelReturnsUntestedState) {
  QuboModel m(3);
  m.set_constant(7);
  SaConfig cfg;
  cfg.sweeps = 20;
  cfg.restarts = 3;
  cfg.exclude = {BitVector::from_string("000"), BitVector::from_string("111")};
  const auto r = solve(m, cfg);
  ASSERT_FALSE(r.candidates.empty());
  for (const auto& c : r.candidates) {
    EXPECT_FALSE(cfg.exclude.count(c.bits));
    EXPECT_EQ(c.predicted, 7);
  }
}

TEST(Solve, RankingSortedAndDisjointFromExclude) {
  std::mt19937_64 rng(22);
  const auto m = oracle::random_model(12, rng);
  SaConfig cfg;
  cfg.sweeps = 200;
  cfg.top_k = 5;
  const auto ranking = oracle::brute_ranking(m);
  cfg.exclude = {ranking[0].first, ranking[2].first};
  const auto r = solve(m, cfg);
  ASSERT_EQ(r.candidates.size(), 5u);
  for (std::size_t k = 1; k < r.candidates.size(); ++k)
    EXPECT_GT(r.candidates[k - 1].predicted, r.candidates[k].predicted);
  for (const auto& c : r.candidates) EXPECT_FALSE(cfg.exclude.count(c.bits));
  EXPECT_EQ(r.candidates.front().bits, ranking[1].first);
}

TEST(Solve, ExcludingGlobalMaxYieldsSecondBest) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 20; ++t) {
    const auto m = oracle::random_model(6, rng);
    const auto ranking = oracle::brute_ranking(m);
    SaConfig cfg;
    cfg.sweeps = 100;
    cfg.seed = static_cast<std::uint64_t>(t);
    cfg.exclude = {ranking[0].first};
    const auto r = solve(m, cfg);
    EXPECT_EQ(r.candidates.front().bits, ranking[1].first);
  }
}

TEST(Solve, ExhaustedWhenEverythingExcluded) {
  std::mt19937_64 rng(24);
  const auto m = oracle::random_model(3, rng);
  SaConfig cfg;
  cfg.sweeps = 10;
  for (std::uint64_t v = 0; v < 8; ++v) cfg.exclude.insert(BitVector::from_value(v, 3));
  try {
    solve(m, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::exhausted);
  }
}

TEST(Solve, DeterministicAcrossThreadCounts) {
  std::mt19937_64 rng(25);
  const auto m = oracle::random_model(18, rng);
  SaConfig cfg;
  cfg.sweeps = 100;
  cfg.restarts = 9;
  cfg.seed = 99;
  const auto a = solve(m, cfg);
  cfg.threads = 4;
  const auto b = solve(m, cfg);
  ASSERT_EQ(a.candidates.size(), b.candidates.size());
  for (std::size_t k = 0; k < a.candidates.size(); ++k) {
    EXPECT_EQ(a.candidates[k].bits, b.candidates[k].bits);
    EXPECT_EQ(a.candidates[k].predicted, b.candidates[k].predicted);
  }
  EXPECT_EQ(a.restart_final, b.restart_final);
}

TEST(Solve, RejectsBadConfig) {
  SaConfig cfg;
  cfg.temp_initial = 1.0;
  cfg.temp_final = 2.0;
  EXPECT_THROW(solve(QuboModel(3), cfg), Error);
  cfg = {};
  cfg.restarts = 0;
  EXPECT_THROW(solve(QuboModel(3), cfg), Error);
  EXPECT_THROW(solve(QuboModel(), SaConfig{}), Error);
}

TEST(Solve, ChainsImproveOnTheirStart) {
  std::mt19937_64 rng(26);
  std::size_t improved = 0, total = 0;
  for (int t = 0; t < 20; ++t) {
    const auto m = oracle::random_model(16, rng);
    SaConfig cfg;
    cfg.sweeps = 200;
    cfg.restarts = 5;
    cfg.seed = static_cast<std::uint64_t>(t);
    const auto r = solve(m, cfg);
    for (std::size_t k = 0; k < r.restart_final.size(); ++k, ++total)
      improved += r.restart_final[k] >= r.restart_initial[k];
  }
  EXPECT_EQ(improved, total);
}

TEST(Solve, FindsOptimumWithDepthDerivedBudget) {
  // Restart budget from the estimated depth of the optimum over random draws.
  std::mt19937_64 rng(27);
  std::size_t hits = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    const auto m = oracle::random_model(8 + rng() % 5, rng);
    const auto [bits, best] = exhaustive_solve(m);
    SaConfig cfg;
    cfg.sweeps = 10;
    cfg.seed = static_cast<std::uint64_t>(t);
    std::vector<double> costs;
    std::mt19937_64 draw(static_cast<std::uint64_t>(t));
    for (int s = 0; s < 200; ++s) costs.push_back(-m.evaluate(oracle::random_bits(m.size(), draw)));
    const double depth = estimate_depth(costs, -best);
    cfg.restarts = std::min<std::size_t>(required_iterations(depth, 0.01), 2000);
    const auto r = solve(m, cfg);
    hits += r.candidates.front().bits == bits;
  }
  EXPECT_GE(hits, static_cast<std::size_t>(0.99 * trials));
}

TEST(DepthBudget, FailureRate) {
  EXPECT_NEAR(failure_rate(1.0), 0.8413447460685429, 1e-12);
  EXPECT_NEAR(failure_rate(2.0), 0.9772498680518208, 1e-12);
  EXPECT_NEAR(failure_rate(0.0), 0.5, 1e-12);
}

TEST(DepthBudget, RequiredIterations) {
  EXPECT_EQ(required_iterations(1.0, 0.01), 27u);
  EXPECT_EQ(required_iterations(2.0, 0.01), 200u);
  EXPECT_EQ(required_iterations(0.0, 0.01), 7u);
  // Full precision Phi(2) = 0.97725 needs one more draw than the quoted 97.72%.
  EXPECT_EQ(required_iterations(2.0, 0.01, 0), 201u);
  EXPECT_THROW(required_iterations(40.0, 0.01), Error);
  EXPECT_THROW(required_iterations(1.0, 0.0), Error);
  EXPECT_THROW(required_iterations(1.0, 1.0), Error);
}

TEST(DepthBudget, MinimalAndMonotone) {
  double prev_k = 0;
  for (double m = -1.0; m <= 4.0; m += 0.05) {
    const auto b = depth_budget(m, 0.01);
    const double p = b.quantized_failure;
    EXPECT_LT(std::pow(p, static_cast<double>(b.required_draws)), 0.01);
    if (b.required_draws > 1) {
      EXPECT_GE(std::pow(p, static_cast<double>(b.required_draws - 1)), 0.01);
    }
    EXPECT_GE(static_cast<double>(b.required_draws), prev_k);
    prev_k = static_cast<double>(b.required_draws);
  }
  for (double m : {0.5, 1.0, 2.0, 3.0}) {
    std::size_t prev = 0;
    for (double eps : {0.2, 0.1, 0.05, 0.01, 0.001}) {
      const auto k = required_iterations(m, eps);
      EXPECT_GE(k, prev);
      prev = k;
    }
  }
}

TEST(DepthBudget, EstimateDepth) {
  const std::vector<double> unit{-1.0, 1.0};
  EXPECT_DOUBLE_EQ(estimate_depth(unit, -2.0), 2.0);
  EXPECT_DOUBLE_EQ(estimate_depth(unit, 0.0), 0.0);
  const std::vector<double> flat{3.0, 3.0, 3.0};
  try {
    estimate_depth(flat, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::zero_variance);
  }
  EXPECT_THROW(estimate_depth(std::vector<double>{1.0}, 0.0), Error);
}

TEST(DepthBudget, ExtremeOfAMillionGaussianDraws) {
  // The minimum of 1e6 standard normal draws sits about 4.9 sigma below the
  // mean; a single replicate scatters by ~0.25, so average ten.
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal;
  std::vector<double> costs(1'000'000);
  double total = 0.0;
  const int replicates = 10;
  for (int r = 0; r < replicates; ++r) {
    for (auto& c : costs) c = normal(rng);
    const double best = *std::min_element(costs.begin(), costs.end());
    total += estimate_depth(costs, best);
  }
  const double m = total / replicates;
  EXPECT_GE(m, 4.7);
  EXPECT_LE(m, 5.0);
}
