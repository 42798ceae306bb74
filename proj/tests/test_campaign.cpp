#include <gtest/gtest.h>

#include <cstdlib>
#include <random>

#include <json.hpp>

#include "qsurr/annealer.hpp"
#include "qsurr/campaign.hpp"
#include "qsurr/error.hpp"
#include "qsurr/oracle.hpp"
#include "support.hpp"

using namespace qsurr;

namespace {

struct FixedClock : ::testing::Environment {
  void SetUp() override { setenv("SOURCE_DATE_EPOCH", "1700000000", 1); }
};
const auto* const kClock = ::testing::AddGlobalTestEnvironment(new FixedClock);

CampaignConfig quick_config() {
  CampaignConfig cfg;
  cfg.sa.sweeps = 200;
  cfg.sa.restarts = 8;
  return cfg;
}

std::vector<std::pair<BitVector, double>> seeds(std::initializer_list<std::pair<const char*, double>> rows) {
  std::vector<std::pair<BitVector, double>> out;
  for (auto& [b, a] : rows) out.emplace_back(BitVector::from_string(b), a);
  return out;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::unknown_factor;
}

void expect_log_invariants(const Campaign& c) {
  double best = -1.0;
  std::size_t improving = 0;
  double seed_best = -1.0;
  const std::size_t seeded = c.dataset.real_count() - c.log.size();
  for (std::size_t i = 0; i < seeded; ++i)
    seed_best = std::max(seed_best, c.dataset.observations()[i].ain);
  best = seed_best;
  for (const auto& e : c.log) {
    ASSERT_TRUE(e.real_ain);
    const bool improved = *e.real_ain > best;
    EXPECT_EQ(e.improved, improved);
    improving += improved;
    best = std::max(best, *e.real_ain);
    EXPECT_EQ(e.iteration, 1 + improving);
  }
  EXPECT_EQ(c.iteration, 1 + improving);
  EXPECT_EQ(c.best_ain, best);
  EXPECT_EQ(c.best_ain, c.dataset.real_max());
  for (const auto& o : c.dataset.observations()) EXPECT_EQ(o.kind, ObservationKind::real);
}

}  // namespace

TEST(Init, FromSuppliedObservations) {
  std::mt19937_64 rng(1);
  std::vector<std::pair<BitVector, double>> obs;
  for (int i = 0; i < 18; ++i) obs.emplace_back(oracle::random_bits(22, rng), 6000.0 + 100 * i);
  const auto c = init_campaign("c1", FactorSchema::raw_bits(22), CampaignConfig{}, obs, 9);
  EXPECT_EQ(c.dataset.real_count(), 18u);
  EXPECT_EQ(c.iteration, 1u);
  EXPECT_EQ(c.best_ain, 7700.0);
  EXPECT_EQ(c.best_bits, obs.back().first);
  EXPECT_EQ(c.state, CampaignState::ready);
  EXPECT_TRUE(c.log.empty());
}

TEST(Init, SingleObservation) {
  const auto c = init_campaign("c", FactorSchema::raw_bits(4), CampaignConfig{},
                               seeds({{"0110", 12.5}}), 1);
  EXPECT_EQ(c.best_bits.to_string(), "0110");
  EXPECT_EQ(c.best_ain, 12.5);
}

TEST(Init, RandomSeedsFromOracleAreReproducible) {
  int calls = 0;
  const auto base = make_oracle(OracleKind::hidden_qubo, 12, 3);
  const Oracle counting("count", 12, [&](const BitVector& b) {
    ++calls;
    return base(b);
  });
  const auto a = init_campaign("r", FactorSchema::raw_bits(12), CampaignConfig{}, 18, counting, 5);
  EXPECT_EQ(calls, 18);
  const auto b = init_campaign("r", FactorSchema::raw_bits(12), CampaignConfig{}, 18, counting, 5);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.tested().size(), 18u);
}

TEST(Init, Errors) {
  EXPECT_EQ(code_of([] {
              init_campaign("e", FactorSchema::raw_bits(3), CampaignConfig{}, {}, 1);
            }),
            Errc::no_seed_data);
  EXPECT_EQ(code_of([] {
              init_campaign("e", FactorSchema::raw_bits(3), CampaignConfig{},
                            seeds({{"0101", 1.0}}), 1);
            }),
            Errc::length_mismatch);
}

TEST(Init, DuplicateSeedsAllowed) {
  const auto c = init_campaign("d", FactorSchema::raw_bits(3), CampaignConfig{},
                               seeds({{"010", 1.0}, {"010", 2.0}}), 1);
  EXPECT_EQ(c.dataset.real_count(), 2u);
  EXPECT_EQ(c.best_ain, 2.0);
}

TEST(Suggest, FreshCampaignProposesUntestedState) {
  std::mt19937_64 rng(2);
  std::vector<std::pair<BitVector, double>> obs;
  for (int i = 0; i < 18; ++i) obs.emplace_back(oracle::random_bits(22, rng), 6000.0 + 137 * i);
  auto c = init_campaign("s", FactorSchema::raw_bits(22), quick_config(), obs, 4);
  const auto tested = c.tested();
  const auto s = suggest_next(c);
  EXPECT_FALSE(tested.count(s.bits));
  EXPECT_EQ(s.source, SuggestionSource::qubo);
  EXPECT_EQ(c.state, CampaignState::awaiting_result);
  ASSERT_TRUE(c.model);
  EXPECT_DOUBLE_EQ(s.estimated_ain, c.model->evaluate(s.bits));
  EXPECT_EQ(code_of([&] { suggest_next(c); }), Errc::wrong_state);
  // Augmented rows never reach the campaign.
  EXPECT_EQ(c.dataset.size(), 18u);
}

TEST(Suggest, NeighborFallbackWhenSolverIsExhausted) {
  // Seven of the eight states are tested; a one-sweep chain often visits only
  // tested states, and the engine must then fall back to a neighbor.
  int fallbacks = 0;
  for (std::uint64_t missing = 0; missing < 8; ++missing) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      std::vector<std::pair<BitVector, double>> obs;
      for (std::uint64_t v = 0; v < 8; ++v)
        if (v != missing) obs.emplace_back(BitVector::from_value(v, 3), 10.0 + v);
      CampaignConfig cfg;
      cfg.sa.sweeps = 1;
      cfg.sa.restarts = 1;
      cfg.sa.top_k = 1;
      auto c = init_campaign("n", FactorSchema::raw_bits(3), cfg, obs, seed);
      const auto tested = c.tested();
      try {
        const auto s = suggest_next(c);
        EXPECT_FALSE(tested.count(s.bits));
        if (s.source == SuggestionSource::neighbor) {
          ++fallbacks;
          EXPECT_EQ(oracle::brute_hamming(s.bits, c.best_bits), 1u);
        }
      } catch (const Error& e) {
        // Only legitimate when the untested state is not adjacent to best.
        EXPECT_EQ(e.code(), Errc::terminated);
        EXPECT_GT(oracle::brute_hamming(BitVector::from_value(missing, 3), c.best_bits), 1u);
        EXPECT_EQ(c.state, CampaignState::terminated);
      }
    }
  }
  EXPECT_GT(fallbacks, 0);
}

TEST(Suggest, FullyTestedSpaceTerminates) {
  auto c = init_campaign("t", FactorSchema::raw_bits(2), quick_config(),
                         seeds({{"00", 1.0}, {"01", 4.0}, {"10", 2.0}, {"11", 3.0}}), 1);
  EXPECT_EQ(code_of([&] { suggest_next(c); }), Errc::terminated);
  EXPECT_EQ(c.state, CampaignState::terminated);
  EXPECT_EQ(code_of([&] { suggest_next(c); }), Errc::terminated);
  EXPECT_EQ(code_of([&] { record_result(c, BitVector::from_string("00"), 1.0, true); }),
            Errc::wrong_state);
}

TEST(Record, ImprovementAndTies) {
  auto c = init_campaign("r", FactorSchema::raw_bits(8), quick_config(),
                         seeds({{"00000001", 8481.0}, {"00000010", 7000.0}}), 2);
  auto s = suggest_next(c);
  record_result(c, s.bits, 8867.0);
  EXPECT_EQ(c.iteration, 2u);
  EXPECT_EQ(c.best_ain, 8867.0);
  EXPECT_EQ(c.best_bits, s.bits);
  EXPECT_EQ(c.state, CampaignState::ready);
  ASSERT_EQ(c.log.size(), 1u);
  EXPECT_TRUE(c.log[0].improved);
  EXPECT_EQ(c.log[0].experiment_count, 3u);
  EXPECT_EQ(c.log[0].estimated_ain, s.estimated_ain);
  EXPECT_TRUE(c.log[0].mse_pct);
  EXPECT_EQ(c.log[0].timestamp, "2023-11-14T22:13:20Z");

  s = suggest_next(c);
  record_result(c, s.bits, 8000.0);
  EXPECT_EQ(c.iteration, 2u);
  EXPECT_EQ(c.dataset.real_count(), 4u);
  EXPECT_FALSE(c.log.back().improved);

  s = suggest_next(c);
  record_result(c, s.bits, 8867.0);
  EXPECT_EQ(c.iteration, 2u);
  EXPECT_NE(c.best_bits, s.bits);
  expect_log_invariants(c);
}

TEST(Record, Errors) {
  auto c = init_campaign("e", FactorSchema::raw_bits(6), quick_config(),
                         seeds({{"000001", 10.0}}), 2);
  const auto b = BitVector::from_string("111111");
  EXPECT_EQ(code_of([&] { record_result(c, b, 5.0); }), Errc::wrong_state);
  const auto s = suggest_next(c);
  auto other = s.bits;
  other.flip(0);
  EXPECT_EQ(code_of([&] { record_result(c, other, 5.0); }), Errc::bits_mismatch);
  EXPECT_EQ(code_of([&] { record_result(c, s.bits, std::nan("")); }), Errc::non_finite_ain);
  EXPECT_EQ(code_of([&] { record_result(c, BitVector::from_string("01"), 1.0); }),
            Errc::length_mismatch);
  EXPECT_EQ(c.state, CampaignState::awaiting_result);
  EXPECT_TRUE(c.log.empty());
}

TEST(Record, OutOfBandKeepsPendingSuggestion) {
  auto c = init_campaign("o", FactorSchema::raw_bits(6), quick_config(),
                         seeds({{"000001", 10.0}}), 2);
  const auto s = suggest_next(c);
  auto other = s.bits;
  other.flip(0);
  record_result(c, other, 50.0, true);
  EXPECT_EQ(c.state, CampaignState::awaiting_result);
  EXPECT_TRUE(c.log.back().out_of_band);
  EXPECT_EQ(c.best_ain, 50.0);
  record_result(c, s.bits, 20.0);
  EXPECT_EQ(c.state, CampaignState::ready);
  expect_log_invariants(c);
}

TEST(Simulate, BudgetZeroLeavesCampaignUnchanged) {
  const auto o = make_oracle(OracleKind::hidden_qubo, 8, 1);
  auto c = init_campaign("z", FactorSchema::raw_bits(8), quick_config(), 5, o, 3);
  const auto before = c;
  run_simulated(c, o, 0);
  EXPECT_EQ(c, before);
}

TEST(Simulate, NeverRepeatsAndKeepsInvariants) {
  const auto o = make_oracle(OracleKind::qubo_plus_cubic, 12, 8);
  auto c = init_campaign("p", FactorSchema::raw_bits(12), quick_config(), 10, o, 8);
  run_simulated(c, o, 40);
  EXPECT_EQ(c.log.size(), 40u);
  std::set<std::string> seen;
  for (const auto& ob : c.dataset.observations()) EXPECT_TRUE(seen.insert(ob.bits.to_string()).second);
  expect_log_invariants(c);
  const auto traj = best_trajectory(c);
  for (std::size_t i = 1; i < traj.size(); ++i)
    EXPECT_GE(traj[i].best_so_far, traj[i - 1].best_so_far);
}

TEST(Simulate, SmallSpacesTerminateAtALocalOptimum) {
  for (std::size_t n = 1; n <= 4; ++n) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto o =
          make_oracle(n >= 3 ? OracleKind::qubo_plus_cubic : OracleKind::hidden_qubo, n, seed);
      auto c = init_campaign("s", FactorSchema::raw_bits(n), quick_config(), 1, o, seed);
      run_simulated(c, o, std::nullopt);
      ASSERT_EQ(c.state, CampaignState::terminated);
      const auto tested = c.tested();
      for (const auto& nb : neighbors(c.best_bits, 1)) {
        EXPECT_TRUE(tested.count(nb));
        EXPECT_LE(o(nb), c.best_ain);
      }
      expect_log_invariants(c);
    }
  }
}

TEST(Simulate, HiddenQuboOptimumFoundWithinBudget) {
  int hits = 0;
  for (std::uint64_t run = 0; run < 20; ++run) {
    const auto o = make_oracle(OracleKind::hidden_qubo, 10, 100 + run);
    const auto exact = exhaustive_solve(*o.hidden_model());
    auto c = init_campaign("h", FactorSchema::raw_bits(10), CampaignConfig{}, 10, o, run);
    run_simulated(c, o, 100);
    hits += std::abs(c.best_ain - exact.second) <= 1e-6;
  }
  EXPECT_GE(hits, 16);
}

TEST(Persist, RoundtripAndResume) {
  const auto o = make_oracle(OracleKind::noisy, 10, 4);
  auto c = init_campaign("p", FactorSchema::raw_bits(10), quick_config(), 6, o, 11);
  run_simulated(c, o, 5);
  const auto text = c.to_json();
  auto loaded = Campaign::from_json(text);
  EXPECT_EQ(loaded, c);
  EXPECT_EQ(loaded.to_json(), text);
  EXPECT_EQ(suggest_next(loaded), suggest_next(c));

  // Awaiting state survives too.
  const auto awaiting = Campaign::from_json(c.to_json());
  EXPECT_EQ(awaiting.state, CampaignState::awaiting_result);
  EXPECT_EQ(awaiting.pending, c.pending);
}

TEST(Persist, EmptyLogAndRefitCadence) {
  auto cfg = quick_config();
  cfg.refit_every = 3;
  auto c = init_campaign("e", FactorSchema::raw_bits(7), cfg, seeds({{"0000001", 3.0}}), 1);
  EXPECT_EQ(Campaign::from_json(c.to_json()), c);
  const auto s = suggest_next(c);
  record_result(c, s.bits, 1.0);
  auto resumed = Campaign::from_json(c.to_json());
  EXPECT_EQ(suggest_next(resumed), suggest_next(c));
  EXPECT_EQ(resumed.suggestions_since_fit, 2u);
}

TEST(Persist, Errors) {
  auto c = init_campaign("x", FactorSchema::raw_bits(4), quick_config(), seeds({{"0001", 3.0}}), 1);
  const auto text = c.to_json();
  EXPECT_EQ(code_of([&] { Campaign::from_json(text.substr(0, text.size() / 2)); }),
            Errc::parse_error);
  auto j = nlohmann::json::parse(text);
  j["version"] = 9;
  EXPECT_EQ(code_of([&] { Campaign::from_json(j.dump()); }), Errc::version_mismatch);
}

TEST(Export, TableColumns) {
  auto c = init_campaign("x", FactorSchema::raw_bits(5), quick_config(), seeds({{"00010", 100.0}}), 1);
  const auto s = suggest_next(c);
  record_result(c, s.bits, 120.5);
  const auto csv = export_log_csv(c);
  const auto header =
      std::string("Iteration,Number of Experiments,Best_solution,Real AIN,Estimate AIN,MSE(%),"
                  "Contour-Aware MSE(%)\n");
  ASSERT_EQ(csv.substr(0, header.size()), header);
  const auto row = csv.substr(header.size());
  EXPECT_EQ(row.substr(0, 4 + s.bits.to_string().size()), "2,2," + s.bits.to_string());
  EXPECT_NE(row.find(",120.5,"), std::string::npos);
  const auto metrics = metric_series(c);
  ASSERT_EQ(metrics.size(), 1u);
  EXPECT_EQ(metrics[0].iteration, 2u);
}

TEST(Config, PartialJsonOverridesDefaults) {
  const auto cfg = config_from_json(R"({"fit":{"cost":"mse"},"sa":{"sweeps":17}})");
  EXPECT_EQ(cfg.fit.cost, CostKind::mse);
  EXPECT_EQ(cfg.fit.tau, 100.0);
  EXPECT_EQ(cfg.sa.sweeps, 17u);
  EXPECT_EQ(cfg.augment.elimination_radius, 3u);
  const auto back = config_from_json(config_to_json(cfg));
  EXPECT_EQ(config_to_json(back), config_to_json(cfg));
  EXPECT_EQ(code_of([] { config_from_json(R"({"fit":{"cost":"l1"}})"); }), Errc::parse_error);
}
