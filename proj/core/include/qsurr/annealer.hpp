#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include "qsurr/encoding.hpp"
#include "qsurr/qubo.hpp"

namespace qsurr {

using BitSet = std::unordered_set<BitVector, BitVectorHash>;

struct SaConfig {
  std::size_t sweeps = 2000;
  std::size_t restarts = 27;
  // Unset: temp_initial is the standard deviation of the energies of
  // `calibration_samples` random states, temp_final is temp_initial / 1000.
  std::optional<double> temp_initial;
  std::optional<double> temp_final;
  std::uint64_t seed = 0;
  BitSet exclude;
  std::size_t top_k = 5;
  std::size_t calibration_samples = 100;
  // Worker threads for restarts; 0 means hardware concurrency. Results do
  // not depend on this value.
  std::size_t threads = 1;
};

struct Candidate {
  BitVector bits;
  double predicted = 0.0;
};

struct EnergyStats {
  double best = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t samples = 0;
};

struct SolveResult {
  // Descending by prediction, ties broken by lower binary value.
  std::vector<Candidate> candidates;
  // `best` is the best candidate's energy; mean and stddev describe the
  // energies of uniformly random states drawn for calibration.
  EnergyStats stats;
  double temp_initial = 0.0;
  double temp_final = 0.0;
  // Energy of each chain's random starting state and of its last state.
  std::vector<double> restart_initial;
  std::vector<double> restart_final;
};

// Restart simulated annealing maximizing model.evaluate. Throws
// Errc::exhausted when every visited state is excluded.
SolveResult solve(const QuboModel& model, const SaConfig& config);

// Brute-force argmax over all 2^n states; lowest binary value wins ties.
// Throws Errc::too_large for n > 24.
std::pair<BitVector, double> exhaustive_solve(const QuboModel& model);

inline constexpr std::size_t kExhaustiveLimit = 24;

// Depth budget under a Gaussian cost model. The Gaussian assumption is a
// premise; nothing here checks it against a particular model.
struct DepthBudget {
  double m = 0.0;
  double epsilon = 0.0;
  double per_draw_failure = 0.0;  // Phi(m)
  double quantized_failure = 0.0;  // failure rate used for the draw count
  std::size_t required_draws = 0;
};

// Standard normal CDF at m: chance that one uniformly random state does not
// beat the cost mean - m * sigma.
double failure_rate(double m);

// Success probability 1 - Phi(m) is kept to this many significant digits
// before the draw count is computed, the precision at which failure rates
// are usually quoted (84%, 97.72%). Zero keeps full precision.
inline constexpr int kDefaultRateDigits = 3;

// Smallest k with failure^k < epsilon. Throws Errc::degenerate_depth when the
// failure rate is 1 in floating point.
std::size_t required_iterations(double m, double epsilon,
                                int significant_digits = kDefaultRateDigits);
DepthBudget depth_budget(double m, double epsilon,
                         int significant_digits = kDefaultRateDigits);

// m = -(best - mean) / stddev over the sample, in cost orientation (lower cost
// is better). Uses the population standard deviation.
double estimate_depth(std::span<const double> costs, double best);

}  // namespace qsurr
