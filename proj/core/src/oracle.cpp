#include "qsurr/oracle.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <mutex>
#include <random>

#include "detail.hpp"
#include "qsurr/annealer.hpp"
#include "qsurr/error.hpp"
#include "qsurr/qubo.hpp"

namespace qsurr {

namespace {

struct Triple {
  std::array<std::size_t, 3> idx;
  double weight;
};

struct Response {
  QuboModel quad;
  std::vector<Triple> cubic;

  double operator()(const BitVector& x) const {
    double e = quad.evaluate(x);
    for (const auto& t : cubic)
      if (x.test(t.idx[0]) && x.test(t.idx[1]) && x.test(t.idx[2])) e += t.weight;
    return e;
  }
};

struct Extremes {
  double lo = 0.0;
  double hi = 0.0;
  std::optional<BitVector> argmax;
};

Extremes exact_extremes(const Response& f, std::size_t n) {
  std::vector<std::vector<std::size_t>> touching(n);
  for (std::size_t t = 0; t < f.cubic.size(); ++t)
    for (auto i : f.cubic[t].idx) touching[i].push_back(t);
  std::vector<double> field(f.quad.linear_terms().begin(), f.quad.linear_terms().end());
  BitVector x(n);
  double e = f(x);
  Extremes out{e, e, x};
  std::uint64_t best_value = 0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t k = 1; k < total; ++k) {
    const std::size_t i = n - 1 - static_cast<std::size_t>(std::countr_zero(k));
    const bool on = x.test(i);
    double gain = on ? -field[i] : field[i];
    for (auto t : touching[i]) {
      const auto& tr = f.cubic[t];
      bool others = true;
      for (auto j : tr.idx)
        if (j != i && !x.test(j)) others = false;
      if (others) gain += on ? -tr.weight : tr.weight;
    }
    x.flip(i);
    e += gain;
    const auto row = f.quad.row(i);
    for (std::size_t j = 0; j < n; ++j) field[j] += on ? -row[j] : row[j];
    if ((k & 0xfff) == 0) e = f(x);
    const std::uint64_t gray = k ^ (k >> 1);
    out.lo = std::min(out.lo, e);
    if (e > out.hi || (e == out.hi && gray < best_value)) {
      out.hi = e;
      best_value = gray;
    }
  }
  out.argmax = BitVector::from_value(best_value, n);
  out.hi = f(*out.argmax);
  return out;
}

Extremes sampled_extremes(const Response& f, std::size_t n, std::mt19937_64& rng) {
  Extremes out;
  for (int s = 0; s < 20000; ++s) {
    BitVector x(n);
    for (std::size_t i = 0; i < n; ++i) x.set(i, rng() & 1u);
    const double e = f(x);
    if (s == 0 || e < out.lo) out.lo = e;
    if (s == 0 || e > out.hi) out.hi = e;
  }
  return out;
}

struct NoiseSource {
  std::mutex mutex;
  std::mt19937_64 rng;
};

}  // namespace

double Oracle::operator()(const BitVector& bits) const {
  if (bits.size() != n_)
    throw Error(Errc::length_mismatch, "oracle takes " + std::to_string(n_) + " bits");
  return fn_(bits);
}

std::string_view oracle_kind_name(OracleKind kind) noexcept {
  switch (kind) {
    case OracleKind::hidden_qubo: return "hidden_qubo";
    case OracleKind::qubo_plus_cubic: return "qubo_plus_cubic";
    case OracleKind::noisy: return "noisy";
  }
  return "unknown";
}

OracleKind parse_oracle_kind(std::string_view name) {
  if (name == "hidden_qubo") return OracleKind::hidden_qubo;
  if (name == "qubo_plus_cubic") return OracleKind::qubo_plus_cubic;
  if (name == "noisy") return OracleKind::noisy;
  throw Error(Errc::bad_params, "unknown oracle kind '" + std::string(name) + "'");
}

Oracle make_oracle(OracleKind kind, std::size_t n, std::uint64_t seed,
                   const OracleParams& params) {
  if (n == 0) throw Error(Errc::bad_params, "oracle needs at least one bit");
  if (!(params.range_hi > params.range_lo))
    throw Error(Errc::bad_params, "range_hi must exceed range_lo");
  if (!(params.noise_std >= 0.0) || !(params.cubic_scale >= 0.0))
    throw Error(Errc::bad_params, "noise_std and cubic_scale must be non-negative");

  std::mt19937_64 rng(detail::derive_seed(seed, 0x0dac1e));
  std::normal_distribution<double> normal(0.0, 1.0);
  auto response = std::make_shared<Response>();
  response->quad = QuboModel(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) response->quad.set_coupling(i, j, normal(rng));
  for (std::size_t i = 0; i < n; ++i) response->quad.set_linear(i, normal(rng));

  if (kind == OracleKind::qubo_plus_cubic) {
    const std::size_t terms = params.cubic_terms.value_or(n);
    if (terms > 0 && n < 3)
      throw Error(Errc::bad_params, "cubic terms need at least three bits");
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t t = 0; t < terms; ++t) {
      std::array<std::size_t, 3> idx{};
      do {
        idx = {pick(rng), pick(rng), pick(rng)};
        std::sort(idx.begin(), idx.end());
      } while (idx[0] == idx[1] || idx[1] == idx[2]);
      response->cubic.push_back({idx, params.cubic_scale * normal(rng)});
    }
  }

  const Extremes ext = n <= kExhaustiveLimit ? exact_extremes(*response, n)
                                             : sampled_extremes(*response, n, rng);
  const double span = ext.hi - ext.lo;
  const double lo = params.range_lo;
  const double scale = span > 0.0 ? (params.range_hi - params.range_lo) / span : 0.0;
  const double mid = 0.5 * (params.range_lo + params.range_hi);
  const double raw_lo = ext.lo;
  auto rescale = [=](double raw) { return span > 0.0 ? lo + (raw - raw_lo) * scale : mid; };

  std::optional<std::pair<BitVector, double>> optimum;
  if (ext.argmax) optimum = std::make_pair(*ext.argmax, rescale(ext.hi));

  std::optional<QuboModel> hidden;
  if (response->cubic.empty() || std::all_of(response->cubic.begin(), response->cubic.end(),
                                             [](const Triple& t) { return t.weight == 0.0; })) {
    QuboModel m(n);
    for (std::size_t i = 0; i < n; ++i) {
      m.set_linear(i, response->quad.linear(i) * scale);
      for (std::size_t j = i + 1; j < n; ++j)
        m.set_coupling(i, j, response->quad.coupling(i, j) * scale);
    }
    m.set_constant(span > 0.0 ? lo - raw_lo * scale : mid);
    hidden = std::move(m);
  }

  Oracle::Function fn;
  if (kind == OracleKind::noisy) {
    auto noise = std::make_shared<NoiseSource>();
    noise->rng.seed(detail::derive_seed(seed, 0x5eed));
    const double noise_std = params.noise_std;
    fn = [response, noise, rescale, noise_std](const BitVector& x) {
      const double clean = rescale((*response)(x));
      if (noise_std == 0.0) return clean;
      std::normal_distribution<double> eps(0.0, noise_std);
      std::lock_guard lock(noise->mutex);
      return std::max(0.0, clean + eps(noise->rng));
    };
  } else {
    fn = [response, rescale](const BitVector& x) { return rescale((*response)(x)); };
  }
  return Oracle(std::string(oracle_kind_name(kind)), n, std::move(fn), std::move(optimum),
                std::move(hidden));
}

}  // namespace qsurr
