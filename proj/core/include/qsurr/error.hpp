#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qsurr {

// Every failure surfaced by the library carries one of these codes. The CLI
// and the HTTP service map them onto exit codes and status codes.
enum class Errc {
  unknown_factor,
  level_not_in_schema,
  invalid_code,
  length_mismatch,
  index_out_of_range,
  parse_error,
  version_mismatch,
  exhausted,
  too_large,
  degenerate_depth,
  zero_variance,
  empty_dataset,
  dimension_mismatch,
  non_finite,
  space_exhausted,
  no_real_data,
  no_seed_data,
  wrong_state,
  terminated,
  bits_mismatch,
  non_finite_ain,
  bad_params,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace qsurr
