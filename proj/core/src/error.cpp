#include "qsurr/error.hpp"

namespace qsurr {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::unknown_factor: return "UnknownFactor";
    case Errc::level_not_in_schema: return "LevelNotInSchema";
    case Errc::invalid_code: return "InvalidCode";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::parse_error: return "ParseError";
    case Errc::version_mismatch: return "VersionMismatch";
    case Errc::exhausted: return "Exhausted";
    case Errc::too_large: return "TooLarge";
    case Errc::degenerate_depth: return "DegenerateDepth";
    case Errc::zero_variance: return "ZeroVariance";
    case Errc::empty_dataset: return "EmptyDataset";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::non_finite: return "NonFinite";
    case Errc::space_exhausted: return "SpaceExhausted";
    case Errc::no_real_data: return "NoRealData";
    case Errc::no_seed_data: return "NoSeedData";
    case Errc::wrong_state: return "WrongState";
    case Errc::terminated: return "Terminated";
    case Errc::bits_mismatch: return "BitsMismatch";
    case Errc::non_finite_ain: return "NonFiniteAin";
    case Errc::bad_params: return "BadParams";
  }
  return "Unknown";
}

}  // namespace qsurr
