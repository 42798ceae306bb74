#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qsurr {

// Fixed-length bitstring. Index 0 is the leftmost character of the text form
// and the most significant bit of the binary value, so ordering by operator<
// is ordering by binary value.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t n);

  // Parses the canonical "0101..." form.
  static BitVector from_string(std::string_view text);
  // Bit 0 receives the most significant of the n low bits of `value`.
  static BitVector from_value(std::uint64_t value, std::size_t n);

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  bool test(std::size_t i) const noexcept {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  bool operator[](std::size_t i) const noexcept { return test(i); }
  void set(std::size_t i, bool value) noexcept {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (value)
      words_[i >> 6] |= mask;
    else
      words_[i >> 6] &= ~mask;
  }
  void flip(std::size_t i) noexcept {
    words_[i >> 6] ^= std::uint64_t{1} << (i & 63);
  }

  std::size_t count() const noexcept;
  std::string to_string() const;
  // Binary value; requires size() <= 64.
  std::uint64_t to_value() const;

  std::span<const std::uint64_t> words() const noexcept { return words_; }

  friend bool operator==(const BitVector&, const BitVector&) = default;
  friend std::strong_ordering operator<=>(const BitVector& a,
                                          const BitVector& b);

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

struct BitVectorHash {
  std::size_t operator()(const BitVector& bits) const noexcept;
};

enum class FactorCode { binary_coded, one_hot };

struct FactorSpec {
  std::string name;
  std::string unit;
  std::vector<double> levels;
  std::size_t bit_width = 1;
  FactorCode code = FactorCode::binary_coded;
};

// Ordered list of factors; the bit layout is the concatenation of the
// per-factor codes in this order.
class FactorSchema {
 public:
  FactorSchema() = default;
  explicit FactorSchema(std::vector<FactorSpec> factors);

  // n anonymous two-level factors x0..x{n-1}, one bit each. Used when a
  // campaign works on raw bitstrings.
  static FactorSchema raw_bits(std::size_t n);

  const std::vector<FactorSpec>& factors() const noexcept { return factors_; }
  std::size_t bit_count() const noexcept { return bit_count_; }

  std::string to_json() const;
  static FactorSchema from_json(std::string_view text);

  friend bool operator==(const FactorSchema&, const FactorSchema&);

 private:
  std::vector<FactorSpec> factors_;
  std::size_t bit_count_ = 0;
};

using LevelAssignment = std::map<std::string, double, std::less<>>;

BitVector encode(const LevelAssignment& levels, const FactorSchema& schema);
LevelAssignment decode(const BitVector& bits, const FactorSchema& schema);

std::size_t hamming(const BitVector& a, const BitVector& b);

// Every vector within Hamming distance 1..radius of x. Ordered by distance,
// then by ascending tuple of flipped indices.
std::vector<BitVector> neighbors(const BitVector& x, std::size_t radius);

}  // namespace qsurr
