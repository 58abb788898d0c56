#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace cohortshap {

// A parsed CSV file: one header row plus data records, all as text.
// Quoting follows RFC 4180 (double quotes, "" escapes, embedded newlines).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> records;
  // 1-based physical line on which each record starts, for diagnostics.
  std::vector<std::size_t> lines;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

// Quotes the field only when it contains a separator, quote or line break.
std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace cohortshap
