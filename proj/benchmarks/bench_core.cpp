#include <benchmark/benchmark.h>

#include <random>

#include "qsurr/annealer.hpp"
#include "qsurr/augmentation.hpp"
#include "qsurr/fitting.hpp"
#include "qsurr/qubo.hpp"

using namespace qsurr;

namespace {

QuboModel random_model(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  QuboModel m(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) m.set_coupling(i, j, normal(rng));
    m.set_linear(i, normal(rng));
  }
  return m;
}

BitVector random_bits(std::size_t n, std::mt19937_64& rng) {
  BitVector b(n);
  for (std::size_t i = 0; i < n; ++i) b.set(i, rng() & 1u);
  return b;
}

Dataset random_data(std::size_t n, std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ain(6000, 11000);
  std::vector<Observation> obs;
  for (std::size_t i = 0; i < rows; ++i)
    obs.push_back({static_cast<std::int64_t>(i + 1), random_bits(n, rng), ain(rng), ObservationKind::real});
  return Dataset(std::move(obs));
}

void BM_Evaluate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = random_model(n, 1);
  std::mt19937_64 rng(2);
  const auto x = random_bits(n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(m.evaluate(x));
}
BENCHMARK(BM_Evaluate)->Arg(8)->Arg(22)->Arg(64);

void BM_DeltaEvaluate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = random_model(n, 1);
  std::mt19937_64 rng(2);
  const auto x = random_bits(n, rng);
  const double e = m.evaluate(x);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.delta_evaluate(x, i, e));
    i = (i + 1) % n;
  }
}
BENCHMARK(BM_DeltaEvaluate)->Arg(8)->Arg(22)->Arg(64);

void BM_Solve(benchmark::State& state) {
  const auto m = random_model(22, 3);
  SaConfig cfg;
  cfg.sweeps = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve(m, cfg));
}
BENCHMARK(BM_Solve)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Exhaustive(benchmark::State& state) {
  const auto m = random_model(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(exhaustive_solve(m));
}
BENCHMARK(BM_Exhaustive)->Arg(16)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_FitAugmented(benchmark::State& state) {
  const auto real = random_data(22, static_cast<std::size_t>(state.range(0)), 5);
  const auto data = eliminate(augment(real, 22, AugmentConfig{}), 3);
  FitConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(fit_with_strategy(data, cfg));
}
BENCHMARK(BM_FitAugmented)->Arg(18)->Arg(218)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
