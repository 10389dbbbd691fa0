#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace meshwarp::detail {

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

// Comma-separated rows with surrounding whitespace trimmed. Blank lines and
// lines starting with '#' are skipped, as is a first row whose first field is
// not a number (a header).
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

std::uint64_t parse_uint(const std::string& field, const std::filesystem::path& path,
                         std::size_t line);

}  // namespace meshwarp::detail
