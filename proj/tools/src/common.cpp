#include "common.hpp"

#include <fstream>
#include <sstream>

#include "qsurr/dataset.hpp"
#include "qsurr/error.hpp"

namespace qsurr::tools {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::parse_error, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::pair<BitVector, double>> parse_seed_csv(std::string_view text) {
  const auto first_end = text.find('\n');
  const auto first = strip(text.substr(0, first_end));
  if (first.rfind("id,", 0) == 0) {
    std::vector<std::pair<BitVector, double>> out;
    for (const auto& o : Dataset::from_csv(text).observations())
      if (o.kind == ObservationKind::real) out.emplace_back(o.bits, o.ain);
    return out;
  }

  std::vector<std::pair<BitVector, double>> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    const auto line = strip(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("bits", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string_view::npos)
      throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": expected bits,ain");
    auto bits = BitVector::from_string(strip(line.substr(0, comma)));
    const std::string ain_text(strip(line.substr(comma + 1)));
    std::size_t used = 0;
    double ain = 0.0;
    try {
      ain = std::stod(ain_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != ain_text.size())
      throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": bad AIN '" + ain_text + "'");
    out.emplace_back(std::move(bits), ain);
  }
  return out;
}

}  // namespace qsurr::tools
