#include "csv.hpp"

#include <cctype>
#include <charconv>
#include <fstream>

#include "meshwarp/error.hpp"

namespace meshwarp::detail {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool is_number(const std::string& s) {
  return !s.empty() && std::isdigit(static_cast<unsigned char>(s.front()));
}

}  // namespace

std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<CsvRow> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string trimmed = trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    CsvRow row{line_no, {}};
    std::size_t start = 0;
    for (;;) {
      const auto comma = trimmed.find(',', start);
      row.fields.push_back(trim(std::string_view(trimmed).substr(
          start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (first && !is_number(row.fields.front())) {
      first = false;
      continue;
    }
    first = false;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::uint64_t parse_uint(const std::string& field, const std::filesystem::path& path,
                         std::size_t line) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw Error(path.string() + ":" + std::to_string(line) + ": expected an integer, got '" +
                field + "'");
  }
  return value;
}

}  // namespace meshwarp::detail
