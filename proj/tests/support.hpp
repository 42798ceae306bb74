#pragma once

// Test-only reference implementations. These deliberately avoid the library
// code paths they are used to check.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qsurr/dataset.hpp"
#include "qsurr/encoding.hpp"
#include "qsurr/qubo.hpp"

namespace qsurr::oracle {

// Random model with coefficients drawn from N(0, scale).
inline QuboModel random_model(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  QuboModel m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m.set_coupling(i, j, normal(rng));
  for (std::size_t i = 0; i < n; ++i) m.set_linear(i, normal(rng));
  m.set_constant(normal(rng));
  return m;
}

inline BitVector random_bits(std::size_t n, std::mt19937_64& rng) {
  std::string s(n, '0');
  for (auto& ch : s) ch = (rng() & 1u) ? '1' : '0';
  return BitVector::from_string(s);
}

// x as a 0/1 vector, read from the text form.
inline std::vector<int> as_ints(const BitVector& x) {
  std::vector<int> v;
  for (char ch : x.to_string()) v.push_back(ch == '1');
  return v;
}

// Term-by-term triple loop over a dense full matrix.
inline double brute_energy(const std::vector<std::vector<double>>& full,
                           const std::vector<double>& linear, double constant,
                           const BitVector& bits) {
  const auto x = as_ints(bits);
  double e = constant;
  for (std::size_t i = 0; i < x.size(); ++i) {
    e += linear[i] * x[i];
    for (std::size_t j = 0; j < x.size(); ++j) e += full[i][j] * x[i] * x[j];
  }
  return e;
}

// Full matrix with each coupling split evenly across (i,j) and (j,i).
inline std::vector<std::vector<double>> split_full(const QuboModel& m) {
  const std::size_t n = m.size();
  std::vector<std::vector<double>> full(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) full[i][j] = 0.5 * m.coupling(i, j);
  return full;
}

inline double brute_energy(const QuboModel& m, const BitVector& bits) {
  std::vector<double> lin(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) lin[i] = m.linear(i);
  return brute_energy(split_full(m), lin, m.constant(), bits);
}

// Every state from the text form of each integer, sorted best first with
// lowest binary value winning ties.
inline std::vector<std::pair<BitVector, double>> brute_ranking(const QuboModel& m) {
  const std::size_t n = m.size();
  std::vector<std::pair<BitVector, double>> all;
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << n); ++v) {
    std::string s(n, '0');
    for (std::size_t i = 0; i < n; ++i) s[n - 1 - i] = ((v >> i) & 1u) ? '1' : '0';
    auto b = BitVector::from_string(s);
    all.emplace_back(b, brute_energy(m, b));
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return all;
}

inline std::size_t brute_hamming(const BitVector& a, const BitVector& b) {
  const auto sa = a.to_string();
  const auto sb = b.to_string();
  std::size_t d = 0;
  for (std::size_t i = 0; i < sa.size(); ++i) d += sa[i] != sb[i];
  return d;
}

// Ids kept by elimination: every real row, plus augmented rows farther than
// radius from all real rows.
inline std::set<std::int64_t> brute_survivors(const Dataset& data, std::size_t radius) {
  std::set<std::int64_t> keep;
  for (const auto& a : data.observations()) {
    if (a.kind == ObservationKind::real) {
      keep.insert(a.id);
      continue;
    }
    bool near = false;
    for (const auto& r : data.observations())
      if (r.kind == ObservationKind::real && brute_hamming(a.bits, r.bits) <= radius) near = true;
    if (!near) keep.insert(a.id);
  }
  return keep;
}

// Observations of m at the given states. When some energy falls below 1 the
// whole set is lifted by a constant so AIN stays positive.
inline Dataset dataset_from_model(const QuboModel& m, const std::vector<BitVector>& states) {
  std::vector<Observation> obs;
  std::int64_t id = 1;
  double lo = 1.0;
  for (const auto& s : states) {
    obs.push_back({id++, s, brute_energy(m, s), ObservationKind::real});
    lo = std::min(lo, obs.back().ain);
  }
  for (auto& o : obs) o.ain += 1.0 - lo;
  return Dataset(std::move(obs));
}

inline std::vector<BitVector> all_states(std::size_t n) {
  std::vector<BitVector> out;
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << n); ++v) out.push_back(BitVector::from_value(v, n));
  return out;
}

}  // namespace qsurr::oracle
