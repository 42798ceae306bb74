#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "qsurr/dataset.hpp"

namespace qsurr {

struct AugmentConfig {
  // Unset means n * n.
  std::optional<std::size_t> count;
  // Augmented AIN is uniform on [mean * (1 - f), mean), mean over real rows.
  double below_mean_fraction = 0.05;
  std::size_t elimination_radius = 3;
  std::uint64_t seed = 0;

  std::size_t resolved_count(std::size_t n) const {
    return count ? *count : n * n;
  }
};

// Adds synthetic observations at distinct random states not yet present.
Dataset augment(const Dataset& data, std::size_t n,
                const AugmentConfig& config);

// Drops augmented observations within `radius` of any real observation.
Dataset eliminate(const Dataset& data, std::size_t radius);

}  // namespace qsurr
