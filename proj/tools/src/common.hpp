#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "qsurr/encoding.hpp"

namespace qsurr::tools {

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

// Seed measurements as `bits,ain` rows. A header line is optional, and the
// dataset layout `id,bits,ain[,kind]` is accepted too (augmented rows are
// skipped).
std::vector<std::pair<BitVector, double>> parse_seed_csv(std::string_view text);

}  // namespace qsurr::tools
