#include "qsurr/annealer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <thread>

#include "detail.hpp"
#include "qsurr/error.hpp"

namespace qsurr {

namespace {

constexpr std::uint64_t kCalibrationStream = 0xffffffffffffffffull;

bool ranks_before(const Candidate& a, const Candidate& b) {
  if (a.predicted != b.predicted) return a.predicted > b.predicted;
  return a.bits < b.bits;
}

BitVector random_state(std::size_t n, std::mt19937_64& rng) {
  BitVector x(n);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 64 == 0) word = rng();
    x.set(i, (word >> (i % 64)) & 1u);
  }
  return x;
}

// Best distinct non-excluded states a chain has visited.
class CandidatePool {
 public:
  CandidatePool(std::size_t capacity, const BitSet& exclude)
      : capacity_(capacity), exclude_(exclude) {}

  void offer(const BitVector& bits, double energy) {
    if (pool_.size() == capacity_) {
      const Candidate& worst = pool_.back();
      if (energy < worst.predicted) return;
      if (energy == worst.predicted && !(bits < worst.bits)) return;
    }
    for (const auto& c : pool_)
      if (c.bits == bits) return;
    if (exclude_.count(bits)) return;
    Candidate cand{bits, energy};
    auto pos = std::lower_bound(pool_.begin(), pool_.end(), cand, ranks_before);
    pool_.insert(pos, std::move(cand));
    if (pool_.size() > capacity_) pool_.pop_back();
  }

  std::vector<Candidate> take() && { return std::move(pool_); }

 private:
  std::size_t capacity_;
  const BitSet& exclude_;
  std::vector<Candidate> pool_;
};

struct ChainResult {
  std::vector<Candidate> pool;
  double initial = 0.0;
  double final = 0.0;
};

ChainResult run_chain(const QuboModel& model, const SaConfig& config,
                      double t0, double t1, std::size_t restart) {
  const std::size_t n = model.size();
  std::mt19937_64 rng(detail::derive_seed(config.seed, restart));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  BitVector x = random_state(n, rng);
  std::vector<double> field(n);
  for (std::size_t i = 0; i < n; ++i) {
    double f = model.linear(i);
    const auto row = model.row(i);
    for (std::size_t j = 0; j < n; ++j)
      if (x.test(j)) f += row[j];
    field[i] = f;
  }
  double energy = model.evaluate(x);

  ChainResult result;
  result.initial = energy;
  CandidatePool pool(config.top_k, config.exclude);
  pool.offer(x, energy);

  const double ratio = t1 / t0;
  const double steps = config.sweeps > 1 ? static_cast<double>(config.sweeps - 1) : 1.0;
  for (std::size_t sweep = 0; sweep < config.sweeps; ++sweep) {
    const double temp = t0 * std::pow(ratio, static_cast<double>(sweep) / steps);
    for (std::size_t i = 0; i < n; ++i) {
      const bool on = x.test(i);
      const double gain = on ? -field[i] : field[i];
      if (gain < 0.0 && unit(rng) >= std::exp(gain / temp)) continue;
      x.flip(i);
      energy += gain;
      const auto row = model.row(i);
      if (on) {
        for (std::size_t j = 0; j < n; ++j) field[j] -= row[j];
      } else {
        for (std::size_t j = 0; j < n; ++j) field[j] += row[j];
      }
      pool.offer(x, energy);
    }
  }
  result.final = model.evaluate(x);
  result.pool = std::move(pool).take();
  // Re-evaluate exactly; the running energy accumulates rounding.
  for (auto& c : result.pool) c.predicted = model.evaluate(c.bits);
  return result;
}

}  // namespace

SolveResult solve(const QuboModel& model, const SaConfig& config) {
  const std::size_t n = model.size();
  if (n == 0) throw Error(Errc::bad_params, "model has no variables");
  if (config.sweeps == 0 || config.restarts == 0 || config.top_k == 0)
    throw Error(Errc::bad_params, "sweeps, restarts and top_k must be positive");

  SolveResult result;
  {
    std::mt19937_64 rng(detail::derive_seed(config.seed, kCalibrationStream));
    const std::size_t samples = std::max<std::size_t>(config.calibration_samples, 2);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
      const double e = model.evaluate(random_state(n, rng));
      sum += e;
      sum_sq += e * e;
    }
    const double mean = sum / static_cast<double>(samples);
    const double var = std::max(0.0, sum_sq / static_cast<double>(samples) - mean * mean);
    result.stats.mean = mean;
    result.stats.stddev = std::sqrt(var);
    result.stats.samples = samples;
  }

  const double t0 = config.temp_initial.value_or(
      result.stats.stddev > 0.0 ? result.stats.stddev : 1.0);
  const double t1 = config.temp_final.value_or(t0 / 1000.0);
  if (!(t1 > 0.0) || !(t0 >= t1) || !std::isfinite(t0))
    throw Error(Errc::bad_params, "need temp_initial >= temp_final > 0");
  result.temp_initial = t0;
  result.temp_final = t1;

  std::vector<ChainResult> chains(config.restarts);
  std::size_t workers = config.threads == 0 ? std::thread::hardware_concurrency()
                                            : config.threads;
  workers = std::clamp<std::size_t>(workers, 1, config.restarts);
  if (workers == 1) {
    for (std::size_t r = 0; r < config.restarts; ++r)
      chains[r] = run_chain(model, config, t0, t1, r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t r; (r = next.fetch_add(1)) < config.restarts;)
          chains[r] = run_chain(model, config, t0, t1, r);
      });
  }

  std::vector<Candidate> merged;
  for (auto& chain : chains) {
    result.restart_initial.push_back(chain.initial);
    result.restart_final.push_back(chain.final);
    for (auto& c : chain.pool) merged.push_back(std::move(c));
  }
  std::sort(merged.begin(), merged.end(), ranks_before);
  merged.erase(std::unique(merged.begin(), merged.end(),
                           [](const Candidate& a, const Candidate& b) {
                             return a.bits == b.bits;
                           }),
               merged.end());
  if (merged.empty())
    throw Error(Errc::exhausted, "every visited state is excluded");
  if (merged.size() > config.top_k) merged.resize(config.top_k);
  result.candidates = std::move(merged);
  result.stats.best = result.candidates.front().predicted;
  return result;
}

std::pair<BitVector, double> exhaustive_solve(const QuboModel& model) {
  const std::size_t n = model.size();
  if (n > kExhaustiveLimit)
    throw Error(Errc::too_large, std::to_string(n) + " bits exceeds the exhaustive limit of " +
                                     std::to_string(kExhaustiveLimit));
  // Gray-code walk: consecutive codes differ in one bit.
  std::vector<double> field(model.linear_terms().begin(), model.linear_terms().end());
  std::vector<std::uint8_t> x(n, 0);
  double energy = model.constant();
  double best = energy;
  std::uint64_t best_value = 0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t k = 1; k < total; ++k) {
    const auto t = static_cast<std::size_t>(std::countr_zero(k));
    const std::size_t i = n - 1 - t;
    const double gain = x[i] ? -field[i] : field[i];
    energy += gain;
    const auto row = model.row(i);
    const double sign = x[i] ? -1.0 : 1.0;
    x[i] ^= 1u;
    for (std::size_t j = 0; j < n; ++j) field[j] += sign * row[j];
    const std::uint64_t gray = k ^ (k >> 1);
    if ((k & 0xfff) == 0) {
      // Resynchronize the running sums.
      const BitVector state = BitVector::from_value(gray, n);
      energy = model.evaluate(state);
      for (std::size_t a = 0; a < n; ++a) {
        double f = model.linear(a);
        const auto r = model.row(a);
        for (std::size_t b = 0; b < n; ++b)
          if (x[b]) f += r[b];
        field[a] = f;
      }
    }
    if (energy > best || (energy == best && gray < best_value)) {
      best = energy;
      best_value = gray;
    }
  }
  BitVector bits = BitVector::from_value(best_value, n);
  return {bits, model.evaluate(bits)};
}

double failure_rate(double m) { return 0.5 * std::erfc(-m / std::sqrt(2.0)); }

namespace {

double quantized_failure(double m, int significant_digits) {
  double tail = 0.5 * std::erfc(m / std::sqrt(2.0));
  if (significant_digits > 0 && tail > 0.0) {
    const double exponent = std::floor(std::log10(tail));
    const double scale = std::pow(10.0, significant_digits - 1 - exponent);
    tail = std::round(tail * scale) / scale;
  }
  return 1.0 - tail;
}

}  // namespace

std::size_t required_iterations(double m, double epsilon, int significant_digits) {
  if (!std::isfinite(m)) throw Error(Errc::bad_params, "depth must be finite");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw Error(Errc::bad_params, "epsilon must lie in (0, 1)");
  const double p = quantized_failure(m, significant_digits);
  if (p >= 1.0)
    throw Error(Errc::degenerate_depth,
                "failure rate rounds to 1 at depth " + detail::format_double(m));
  if (p <= 0.0) return 1;
  auto k = static_cast<std::size_t>(std::floor(std::log(epsilon) / std::log(p))) + 1;
  while (std::pow(p, static_cast<double>(k)) >= epsilon) ++k;
  while (k > 1 && std::pow(p, static_cast<double>(k - 1)) < epsilon) --k;
  return k;
}

DepthBudget depth_budget(double m, double epsilon, int significant_digits) {
  DepthBudget budget;
  budget.m = m;
  budget.epsilon = epsilon;
  budget.required_draws = required_iterations(m, epsilon, significant_digits);
  budget.per_draw_failure = failure_rate(m);
  budget.quantized_failure = quantized_failure(m, significant_digits);
  return budget;
}

double estimate_depth(std::span<const double> costs, double best) {
  if (costs.size() < 2) throw Error(Errc::bad_params, "need at least two samples");
  double mean = 0.0;
  for (double c : costs) mean += c;
  mean /= static_cast<double>(costs.size());
  double var = 0.0;
  for (double c : costs) var += (c - mean) * (c - mean);
  var /= static_cast<double>(costs.size());
  if (!(var > 0.0)) throw Error(Errc::zero_variance, "samples have zero variance");
  return -(best - mean) / std::sqrt(var);
}

}  // namespace qsurr
