#include "qsurr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "detail.hpp"
#include "qsurr/error.hpp"

namespace qsurr {

std::string_view kind_name(ObservationKind kind) noexcept {
  return kind == ObservationKind::real ? "real" : "augmented";
}

Dataset::Dataset(std::vector<Observation> observations) {
  observations_.reserve(observations.size());
  std::unordered_set<std::int64_t> ids;
  for (auto& obs : observations) {
    check(obs);
    if (!ids.insert(obs.id).second)
      throw Error(Errc::bad_params, "duplicate observation id " + std::to_string(obs.id));
    if (observations_.empty()) bit_count_ = obs.bits.size();
    observations_.push_back(std::move(obs));
  }
  refresh();
}

void Dataset::check(const Observation& obs) const {
  if (!std::isfinite(obs.ain))
    throw Error(Errc::non_finite_ain, "observation " + std::to_string(obs.id));
  if (obs.ain < 0.0)
    throw Error(Errc::bad_params, "negative ain in observation " + std::to_string(obs.id));
  if (obs.bits.empty())
    throw Error(Errc::length_mismatch, "observation " + std::to_string(obs.id) + " has no bits");
  if (!observations_.empty() && obs.bits.size() != bit_count_)
    throw Error(Errc::length_mismatch,
                "observation " + std::to_string(obs.id) + " has " +
                    std::to_string(obs.bits.size()) + " bits, dataset has " +
                    std::to_string(bit_count_));
}

void Dataset::add(Observation obs) {
  check(obs);
  for (const auto& o : observations_)
    if (o.id == obs.id)
      throw Error(Errc::bad_params, "duplicate observation id " + std::to_string(obs.id));
  if (observations_.empty()) bit_count_ = obs.bits.size();
  observations_.push_back(std::move(obs));
  refresh();
}

void Dataset::refresh() {
  real_count_ = 0;
  real_max_ = 0.0;
  double sum = 0.0;
  max_id_ = 0;
  for (const auto& o : observations_) {
    max_id_ = std::max(max_id_, o.id);
    if (o.kind != ObservationKind::real) continue;
    real_max_ = real_count_ == 0 ? o.ain : std::max(real_max_, o.ain);
    sum += o.ain;
    ++real_count_;
  }
  real_mean_ = real_count_ ? sum / static_cast<double>(real_count_) : 0.0;
  double var = 0.0;
  for (const auto& o : observations_)
    if (o.kind == ObservationKind::real) var += (o.ain - real_mean_) * (o.ain - real_mean_);
  real_std_ = real_count_ ? std::sqrt(var / static_cast<double>(real_count_)) : 0.0;
  if (observations_.empty()) bit_count_ = 0;
}

std::string Dataset::to_csv() const {
  std::string out = "id,bits,ain,kind\n";
  for (const auto& o : observations_) {
    out += std::to_string(o.id);
    out += ',';
    out += o.bits.to_string();
    out += ',';
    out += detail::format_double(o.ain);
    out += ',';
    out += kind_name(o.kind);
    out += '\n';
  }
  return out;
}

Dataset Dataset::from_csv(std::string_view text) {
  const auto rows = detail::lines(text);
  if (rows.empty()) throw Error(Errc::parse_error, "dataset CSV is empty");
  const auto header = detail::split(rows[0], ',');
  std::vector<std::string> cols;
  for (auto h : header) cols.emplace_back(detail::trim(h));
  const bool with_kind = cols == std::vector<std::string>{"id", "bits", "ain", "kind"};
  if (!with_kind && cols != std::vector<std::string>{"id", "bits", "ain"})
    throw Error(Errc::parse_error, "dataset CSV header must be id,bits,ain,kind");
  std::vector<Observation> obs;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (detail::trim(rows[r]).empty()) continue;
    const auto fields = detail::split(rows[r], ',');
    const std::string where = "row " + std::to_string(r + 1);
    if (fields.size() != cols.size())
      throw Error(Errc::parse_error, where + ": expected " + std::to_string(cols.size()) +
                                         " fields");
    Observation o;
    o.id = detail::parse_int<std::int64_t>(detail::trim(fields[0]), where + " id");
    try {
      o.bits = BitVector::from_string(detail::trim(fields[1]));
    } catch (const Error& e) {
      throw Error(Errc::parse_error, where + ": " + e.what());
    }
    o.ain = detail::parse_double(detail::trim(fields[2]), where + " ain");
    if (with_kind) {
      const auto kind = detail::trim(fields[3]);
      if (kind == "real")
        o.kind = ObservationKind::real;
      else if (kind == "augmented")
        o.kind = ObservationKind::augmented;
      else
        throw Error(Errc::parse_error, where + ": unknown kind '" + std::string(kind) + "'");
    }
    obs.push_back(std::move(o));
  }
  try {
    return Dataset(std::move(obs));
  } catch (const Error& e) {
    throw Error(Errc::parse_error, e.what());
  }
}

}  // namespace qsurr
