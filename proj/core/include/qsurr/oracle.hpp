#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "qsurr/encoding.hpp"
#include "qsurr/qubo.hpp"

namespace qsurr {

// Black-box recipe -> AIN mapping standing in for a physical experiment.
class Oracle {
 public:
  using Function = std::function<double(const BitVector&)>;

  Oracle(std::string name, std::size_t n, Function fn,
         std::optional<std::pair<BitVector, double>> optimum = std::nullopt,
         std::optional<QuboModel> hidden_model = std::nullopt)
      : name_(std::move(name)),
        n_(n),
        fn_(std::move(fn)),
        optimum_(std::move(optimum)),
        hidden_model_(std::move(hidden_model)) {}

  double operator()(const BitVector& bits) const;

  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return n_; }
  // Noise-free argmax and its value, when known.
  const std::optional<std::pair<BitVector, double>>& hidden_optimum()
      const noexcept {
    return optimum_;
  }
  // Noise-free response in output units, when it is exactly quadratic.
  const std::optional<QuboModel>& hidden_model() const noexcept {
    return hidden_model_;
  }

 private:
  std::string name_;
  std::size_t n_;
  Function fn_;
  std::optional<std::pair<BitVector, double>> optimum_;
  std::optional<QuboModel> hidden_model_;
};

enum class OracleKind { hidden_qubo, qubo_plus_cubic, noisy };

struct OracleParams {
  // Random third-order terms for qubo_plus_cubic; unset means n.
  std::optional<std::size_t> cubic_terms;
  // Std of cubic coefficients relative to the unit-variance quadratic ones.
  double cubic_scale = 2.0;
  // Gaussian noise std in output units; used by the noisy kind.
  double noise_std = 50.0;
  double range_lo = 6000.0;
  double range_hi = 11000.0;
};

// The noise-free response is affinely mapped onto [range_lo, range_hi] using
// its exact extremes for n <= 24 and sampled quantiles otherwise.
Oracle make_oracle(OracleKind kind, std::size_t n, std::uint64_t seed,
                   const OracleParams& params = {});

std::string_view oracle_kind_name(OracleKind kind) noexcept;
OracleKind parse_oracle_kind(std::string_view name);

}  // namespace qsurr
