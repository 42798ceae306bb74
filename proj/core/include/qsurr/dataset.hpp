#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qsurr/encoding.hpp"

namespace qsurr {

enum class ObservationKind { real, augmented };

struct Observation {
  std::int64_t id = 0;
  BitVector bits;
  double ain = 0.0;
  ObservationKind kind = ObservationKind::real;

  friend bool operator==(const Observation&, const Observation&) = default;
};

// Observations plus statistics over the real ones. Statistics are refreshed
// on every mutation.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Observation> observations);

  // Throws on duplicate id, non-finite or negative ain, or a bit length that
  // differs from the observations already present.
  void add(Observation obs);
  // Keeps observations for which keep(obs) is true, preserving order.
  template <class Pred>
  Dataset filtered(Pred keep) const {
    std::vector<Observation> kept;
    kept.reserve(observations_.size());
    for (const auto& obs : observations_)
      if (keep(obs)) kept.push_back(obs);
    return Dataset(std::move(kept));
  }

  const std::vector<Observation>& observations() const noexcept {
    return observations_;
  }
  std::size_t size() const noexcept { return observations_.size(); }
  bool empty() const noexcept { return observations_.empty(); }
  // Bit length shared by all observations, 0 when empty.
  std::size_t bit_count() const noexcept { return bit_count_; }

  std::size_t real_count() const noexcept { return real_count_; }
  double real_mean() const noexcept { return real_mean_; }
  double real_std() const noexcept { return real_std_; }
  double real_max() const noexcept { return real_max_; }
  std::int64_t next_id() const noexcept { return max_id_ + 1; }

  // CSV with header `id,bits,ain,kind`.
  std::string to_csv() const;
  // Accepts the same header; the kind column may be omitted, in which case
  // every row is real.
  static Dataset from_csv(std::string_view text);

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.observations_ == b.observations_;
  }

 private:
  void check(const Observation& obs) const;
  void refresh();

  std::vector<Observation> observations_;
  std::size_t bit_count_ = 0;
  std::size_t real_count_ = 0;
  double real_mean_ = 0.0;
  double real_std_ = 0.0;
  double real_max_ = 0.0;
  std::int64_t max_id_ = 0;
};

std::string_view kind_name(ObservationKind kind) noexcept;

}  // namespace qsurr
