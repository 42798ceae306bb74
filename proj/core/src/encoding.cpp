#include "qsurr/encoding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_set>

#include "detail.hpp"
#include "qsurr/error.hpp"

namespace qsurr {

namespace {

std::size_t word_count(std::size_t n) { return (n + 63) / 64; }

std::string_view code_name(FactorCode code) {
  return code == FactorCode::one_hot ? "one-hot" : "binary-coded";
}

FactorCode parse_code(std::string_view name) {
  if (name == "binary-coded" || name == "binary") return FactorCode::binary_coded;
  if (name == "one-hot") return FactorCode::one_hot;
  throw Error(Errc::parse_error, "unknown factor code '" + std::string(name) + "'");
}

void validate(const FactorSpec& f) {
  if (f.bit_width == 0)
    throw Error(Errc::bad_params, "factor '" + f.name + "' has zero bit width");
  if (f.levels.empty())
    throw Error(Errc::bad_params, "factor '" + f.name + "' has no levels");
  for (std::size_t i = 1; i < f.levels.size(); ++i)
    if (!(f.levels[i - 1] < f.levels[i]))
      throw Error(Errc::bad_params,
                  "levels of factor '" + f.name + "' are not strictly increasing");
  for (double level : f.levels)
    if (!std::isfinite(level))
      throw Error(Errc::bad_params, "factor '" + f.name + "' has a non-finite level");
  if (f.code == FactorCode::one_hot) {
    if (f.levels.size() != f.bit_width)
      throw Error(Errc::bad_params,
                  "one-hot factor '" + f.name + "' needs one bit per level");
  } else {
    if (f.bit_width < 64 && f.levels.size() > (std::uint64_t{1} << f.bit_width))
      throw Error(Errc::bad_params,
                  "factor '" + f.name + "' has more levels than its code can hold");
  }
}

}  // namespace

BitVector::BitVector(std::size_t n) : size_(n), words_(word_count(n), 0) {}

BitVector BitVector::from_string(std::string_view text) {
  BitVector bits(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '1')
      bits.set(i, true);
    else if (text[i] != '0')
      throw Error(Errc::parse_error,
                  "bitstring may only contain 0 and 1: '" + std::string(text) + "'");
  }
  return bits;
}

BitVector BitVector::from_value(std::uint64_t value, std::size_t n) {
  if (n > 64) throw Error(Errc::too_large, "from_value supports at most 64 bits");
  BitVector bits(n);
  for (std::size_t i = 0; i < n; ++i)
    bits.set(i, (value >> (n - 1 - i)) & 1u);
  return bits;
}

std::size_t BitVector::count() const noexcept {
  std::size_t total = 0;
  for (auto w : words_) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

std::string BitVector::to_string() const {
  std::string out(size_, '0');
  for (std::size_t i = 0; i < size_; ++i)
    if (test(i)) out[i] = '1';
  return out;
}

std::uint64_t BitVector::to_value() const {
  if (size_ > 64) throw Error(Errc::too_large, "to_value supports at most 64 bits");
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < size_; ++i) value = (value << 1) | (test(i) ? 1u : 0u);
  return value;
}

std::strong_ordering operator<=>(const BitVector& a, const BitVector& b) {
  if (a.size_ != b.size_) return a.size_ <=> b.size_;
  for (std::size_t w = 0; w < a.words_.size(); ++w) {
    const std::uint64_t diff = a.words_[w] ^ b.words_[w];
    if (diff == 0) continue;
    // Lowest set bit is the leftmost differing position in this word.
    const auto bit = static_cast<unsigned>(std::countr_zero(diff));
    return ((a.words_[w] >> bit) & 1u) ? std::strong_ordering::greater
                                        : std::strong_ordering::less;
  }
  return std::strong_ordering::equal;
}

std::size_t BitVectorHash::operator()(const BitVector& bits) const noexcept {
  std::uint64_t h = detail::splitmix64(bits.size());
  for (auto w : bits.words()) h = detail::splitmix64(h ^ w);
  return static_cast<std::size_t>(h);
}

FactorSchema::FactorSchema(std::vector<FactorSpec> factors)
    : factors_(std::move(factors)) {
  if (factors_.empty()) throw Error(Errc::bad_params, "schema has no factors");
  std::unordered_set<std::string> names;
  for (const auto& f : factors_) {
    validate(f);
    if (!names.insert(f.name).second)
      throw Error(Errc::bad_params, "duplicate factor name '" + f.name + "'");
    bit_count_ += f.bit_width;
  }
}

FactorSchema FactorSchema::raw_bits(std::size_t n) {
  std::vector<FactorSpec> factors;
  factors.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    factors.push_back({"x" + std::to_string(i), "", {0.0, 1.0}, 1,
                       FactorCode::binary_coded});
  return FactorSchema(std::move(factors));
}

bool operator==(const FactorSchema& a, const FactorSchema& b) {
  if (a.factors_.size() != b.factors_.size()) return false;
  for (std::size_t i = 0; i < a.factors_.size(); ++i) {
    const auto& x = a.factors_[i];
    const auto& y = b.factors_[i];
    if (x.name != y.name || x.unit != y.unit || x.levels != y.levels ||
        x.bit_width != y.bit_width || x.code != y.code)
      return false;
  }
  return true;
}

namespace detail {

nlohmann::json schema_to_json(const FactorSchema& schema) {
  nlohmann::json factors = nlohmann::json::array();
  for (const auto& f : schema.factors())
    factors.push_back({{"name", f.name},
                       {"unit", f.unit},
                       {"levels", f.levels},
                       {"bit_width", f.bit_width},
                       {"code", code_name(f.code)}});
  return {{"factors", factors}};
}

FactorSchema schema_from_json(const nlohmann::json& j) {
  const auto factors = get_field<nlohmann::json>(j, "factors");
  if (!factors.is_array()) throw Error(Errc::parse_error, "'factors' must be an array");
  std::vector<FactorSpec> specs;
  for (const auto& f : factors) {
    FactorSpec spec;
    spec.name = get_field<std::string>(f, "name");
    spec.unit = f.contains("unit") ? get_field<std::string>(f, "unit") : "";
    spec.levels = get_field<std::vector<double>>(f, "levels");
    spec.bit_width = get_field<std::size_t>(f, "bit_width");
    spec.code = f.contains("code") ? parse_code(get_field<std::string>(f, "code"))
                                   : FactorCode::binary_coded;
    specs.push_back(std::move(spec));
  }
  return FactorSchema(std::move(specs));
}

}  // namespace detail

std::string FactorSchema::to_json() const {
  return detail::schema_to_json(*this).dump(2);
}

FactorSchema FactorSchema::from_json(std::string_view text) {
  return detail::schema_from_json(detail::parse_json(text, "schema"));
}

BitVector encode(const LevelAssignment& levels, const FactorSchema& schema) {
  for (const auto& [name, value] : levels) {
    const auto& fs = schema.factors();
    if (std::none_of(fs.begin(), fs.end(),
                     [&](const FactorSpec& f) { return f.name == name; }))
      throw Error(Errc::unknown_factor, "'" + name + "' is not in the schema");
  }
  BitVector bits(schema.bit_count());
  std::size_t offset = 0;
  for (const auto& f : schema.factors()) {
    const auto it = levels.find(f.name);
    if (it == levels.end())
      throw Error(Errc::unknown_factor, "no value given for factor '" + f.name + "'");
    const auto pos = std::find(f.levels.begin(), f.levels.end(), it->second);
    if (pos == f.levels.end())
      throw Error(Errc::level_not_in_schema,
                  detail::format_double(it->second) + " is not a level of '" +
                      f.name + "'");
    const auto index = static_cast<std::size_t>(pos - f.levels.begin());
    if (f.code == FactorCode::one_hot) {
      bits.set(offset + index, true);
    } else {
      for (std::size_t b = 0; b < f.bit_width; ++b)
        bits.set(offset + b, (index >> (f.bit_width - 1 - b)) & 1u);
    }
    offset += f.bit_width;
  }
  return bits;
}

LevelAssignment decode(const BitVector& bits, const FactorSchema& schema) {
  if (bits.size() != schema.bit_count())
    throw Error(Errc::length_mismatch,
                "expected " + std::to_string(schema.bit_count()) + " bits, got " +
                    std::to_string(bits.size()));
  LevelAssignment out;
  std::size_t offset = 0;
  for (const auto& f : schema.factors()) {
    std::size_t index = 0;
    if (f.code == FactorCode::one_hot) {
      std::size_t hot = 0;
      for (std::size_t b = 0; b < f.bit_width; ++b)
        if (bits.test(offset + b)) {
          ++hot;
          index = b;
        }
      if (hot != 1)
        throw Error(Errc::invalid_code, "one-hot factor '" + f.name + "' has " +
                                            std::to_string(hot) + " set bits");
    } else {
      for (std::size_t b = 0; b < f.bit_width; ++b)
        index = (index << 1) | (bits.test(offset + b) ? 1u : 0u);
      if (index >= f.levels.size())
        throw Error(Errc::invalid_code, "code " + std::to_string(index) +
                                            " has no level in factor '" + f.name + "'");
    }
    out.emplace(f.name, f.levels[index]);
    offset += f.bit_width;
  }
  return out;
}

std::size_t hamming(const BitVector& a, const BitVector& b) {
  if (a.size() != b.size())
    throw Error(Errc::length_mismatch, std::to_string(a.size()) + " vs " +
                                           std::to_string(b.size()) + " bits");
  std::size_t d = 0;
  const auto wa = a.words();
  const auto wb = b.words();
  for (std::size_t w = 0; w < wa.size(); ++w)
    d += static_cast<std::size_t>(std::popcount(wa[w] ^ wb[w]));
  return d;
}

std::vector<BitVector> neighbors(const BitVector& x, std::size_t radius) {
  std::vector<BitVector> out;
  const std::size_t n = x.size();
  radius = std::min(radius, n);
  std::vector<std::size_t> idx;
  for (std::size_t k = 1; k <= radius; ++k) {
    idx.resize(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      BitVector y = x;
      for (auto i : idx) y.flip(i);
      out.push_back(std::move(y));
      // Next k-combination in lexicographic order.
      std::size_t pos = k;
      while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t i = pos; i < k; ++i) idx[i] = idx[i - 1] + 1;
    }
  }
  return out;
}

}  // namespace qsurr
