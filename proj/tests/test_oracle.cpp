#include <gtest/gtest.h>

#include <random>

#include "qsurr/error.hpp"
#include "qsurr/oracle.hpp"
#include "support.hpp"

using namespace qsurr;

TEST(Oracle, HiddenQuboMatchesItsModel) {
  const auto o = make_oracle(OracleKind::hidden_qubo, 10, 5);
  ASSERT_TRUE(o.hidden_model());
  ASSERT_TRUE(o.hidden_optimum());
  double best = -1e300;
  for (const auto& s : oracle::all_states(10)) {
    const double v = o(s);
    EXPECT_NEAR(v, oracle::brute_energy(*o.hidden_model(), s), 1e-9 * std::abs(v));
    EXPECT_GE(v, 6000.0 - 1e-6);
    EXPECT_LE(v, 11000.0 + 1e-6);
    best = std::max(best, v);
  }
  EXPECT_NEAR(o.hidden_optimum()->second, best, 1e-6);
  EXPECT_NEAR(o(o.hidden_optimum()->first), best, 1e-6);
}

TEST(Oracle, CubicTermsBreakQuadraticStructure) {
  const auto o = make_oracle(OracleKind::qubo_plus_cubic, 8, 1);
  EXPECT_FALSE(o.hidden_model());
  // Exact least-squares fit by a quadratic form cannot reproduce the response:
  // third differences along some triple are non-zero.
  bool cubic = false;
  for (std::size_t i = 0; i < 8 && !cubic; ++i)
    for (std::size_t j = i + 1; j < 8 && !cubic; ++j)
      for (std::size_t k = j + 1; k < 8 && !cubic; ++k) {
        double third = 0.0;
        for (int mask = 0; mask < 8; ++mask) {
          BitVector b(8);
          b.set(i, mask & 1);
          b.set(j, mask & 2);
          b.set(k, mask & 4);
          const int sign = (std::popcount(static_cast<unsigned>(mask)) % 2) ? -1 : 1;
          third += sign * o(b);
        }
        cubic = std::abs(third) > 1e-6;
      }
  EXPECT_TRUE(cubic);
}

TEST(Oracle, SameSeedSameResponses) {
  for (auto kind : {OracleKind::hidden_qubo, OracleKind::qubo_plus_cubic}) {
    const auto a = make_oracle(kind, 9, 42);
    const auto b = make_oracle(kind, 9, 42);
    const auto c = make_oracle(kind, 9, 43);
    std::mt19937_64 rng(1);
    bool differs = false;
    for (int t = 0; t < 50; ++t) {
      const auto s = oracle::random_bits(9, rng);
      EXPECT_EQ(a(s), b(s));
      differs |= a(s) != c(s);
    }
    EXPECT_TRUE(differs);
  }
}

TEST(Oracle, NoiseLevel) {
  OracleParams quiet;
  quiet.noise_std = 0.0;
  const auto q = make_oracle(OracleKind::noisy, 8, 3, quiet);
  const auto s = BitVector::from_string("10110010");
  EXPECT_EQ(q(s), q(s));

  const auto loud = make_oracle(OracleKind::noisy, 8, 3);
  std::vector<double> draws;
  for (int t = 0; t < 2000; ++t) draws.push_back(loud(s));
  double mean = 0.0;
  for (double v : draws) mean += v;
  mean /= draws.size();
  double var = 0.0;
  for (double v : draws) var += (v - mean) * (v - mean);
  var /= draws.size() - 1;
  EXPECT_NEAR(std::sqrt(var), 50.0, 5.0);
  EXPECT_NEAR(mean, q(s), 5.0);
}

TEST(Oracle, LengthChecked) {
  const auto o = make_oracle(OracleKind::hidden_qubo, 5, 1);
  EXPECT_THROW(o(BitVector::from_string("0101")), Error);
}

TEST(Oracle, KindNames) {
  for (auto kind : {OracleKind::hidden_qubo, OracleKind::qubo_plus_cubic, OracleKind::noisy})
    EXPECT_EQ(parse_oracle_kind(oracle_kind_name(kind)), kind);
  EXPECT_THROW(parse_oracle_kind("quartic"), Error);
}
