#include "qsurr/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "detail.hpp"
#include "qsurr/annealer.hpp"
#include "qsurr/error.hpp"

namespace qsurr {

namespace {

// Enumerate free states instead of rejection sampling when the space is small
// or mostly needed.
constexpr std::size_t kEnumerateBits = 20;

BitVector random_bits(std::size_t n, std::mt19937_64& rng) {
  BitVector x(n);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 64 == 0) word = rng();
    x.set(i, (word >> (i % 64)) & 1u);
  }
  return x;
}

}  // namespace

Dataset augment(const Dataset& data, std::size_t n, const AugmentConfig& config) {
  if (data.real_count() == 0)
    throw Error(Errc::no_real_data, "augmentation needs real observations");
  if (data.bit_count() != n)
    throw Error(Errc::length_mismatch, "dataset has " + std::to_string(data.bit_count()) +
                                           " bits, schema has " + std::to_string(n));
  if (!(config.below_mean_fraction > 0.0 && config.below_mean_fraction <= 1.0))
    throw Error(Errc::bad_params, "below_mean_fraction must lie in (0, 1]");
  const std::size_t count = config.resolved_count(n);
  if (count == 0) throw Error(Errc::bad_params, "augmentation count must be positive");
  const double mean = data.real_mean();
  if (!(mean > 0.0))
    throw Error(Errc::bad_params, "real mean must be positive to sit augmented rows below it");

  BitSet present;
  for (const auto& o : data.observations()) present.insert(o.bits);
  if (n < 64) {
    const std::uint64_t space = std::uint64_t{1} << n;
    if (space < present.size() || space - present.size() < count)
      throw Error(Errc::space_exhausted, "only " + std::to_string(space - present.size()) +
                                             " free states for " + std::to_string(count) +
                                             " augmented rows");
  }

  std::mt19937_64 rng(detail::derive_seed(config.seed, 0xa5a5));
  std::vector<BitVector> chosen;
  chosen.reserve(count);
  const bool enumerate =
      n <= kEnumerateBits && 2 * count > (std::size_t{1} << n) - present.size();
  if (enumerate) {
    std::vector<BitVector> free;
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << n); ++v) {
      BitVector b = BitVector::from_value(v, n);
      if (!present.count(b)) free.push_back(std::move(b));
    }
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, free.size() - 1);
      std::swap(free[i], free[pick(rng)]);
      chosen.push_back(free[i]);
    }
  } else {
    while (chosen.size() < count) {
      BitVector b = random_bits(n, rng);
      if (present.insert(b).second) chosen.push_back(std::move(b));
    }
  }

  const double lo = mean * (1.0 - config.below_mean_fraction);
  std::uniform_real_distribution<double> level(lo, mean);
  std::vector<Observation> obs = data.observations();
  std::int64_t id = data.next_id();
  for (auto& bits : chosen) {
    double ain = level(rng);
    if (ain >= mean) ain = std::nextafter(mean, lo);
    obs.push_back({id++, std::move(bits), std::max(ain, 0.0), ObservationKind::augmented});
  }
  return Dataset(std::move(obs));
}

Dataset eliminate(const Dataset& data, std::size_t radius) {
  std::vector<const BitVector*> real;
  for (const auto& o : data.observations())
    if (o.kind == ObservationKind::real) real.push_back(&o.bits);
  return data.filtered([&](const Observation& o) {
    if (o.kind == ObservationKind::real) return true;
    return std::none_of(real.begin(), real.end(),
                        [&](const BitVector* r) { return hamming(*r, o.bits) <= radius; });
  });
}

}  // namespace qsurr
