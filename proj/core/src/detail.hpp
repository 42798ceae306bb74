#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qsurr/encoding.hpp"
#include "qsurr/error.hpp"

namespace qsurr::detail {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Independent stream seed for (seed, stream).
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ull));
}

// Shortest decimal that reads back to the same double.
inline std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

inline std::string format_fixed(double value, int precision) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value,
                                 std::chars_format::fixed, precision);
  return std::string(buf, end);
}

inline double parse_double(std::string_view text, std::string_view what) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw Error(Errc::parse_error,
                "bad number for " + std::string(what) + ": '" +
                    std::string(text) + "'");
  return value;
}

template <class Int>
Int parse_int(std::string_view text, std::string_view what) {
  Int value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw Error(Errc::parse_error,
                "bad integer for " + std::string(what) + ": '" +
                    std::string(text) + "'");
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep);
std::vector<std::string_view> lines(std::string_view text);
std::string_view trim(std::string_view s);

// nlohmann helpers that turn library exceptions into Errc::parse_error.
nlohmann::json parse_json(std::string_view text, std::string_view what);

template <class T>
T get_field(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw Error(Errc::parse_error, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error,
                std::string("bad field '") + key + "': " + e.what());
  }
}

nlohmann::json schema_to_json(const FactorSchema& schema);
FactorSchema schema_from_json(const nlohmann::json& j);

}  // namespace qsurr::detail
