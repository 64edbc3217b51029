#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dame::csv {

// Plain comma-separated table (no quoting). Row fields are kept as strings;
// callers convert. Throws DataError on unreadable files, header mismatch, or
// ragged rows.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
};

Table read(const std::filesystem::path& path, const std::vector<std::string>& expected_header);

std::vector<std::string> split(std::string_view line);

double parse_double(const std::string& field, const std::filesystem::path& path, std::size_t line);
long parse_int(const std::string& field, const std::filesystem::path& path, std::size_t line);

// Shortest round-trip decimal representation; output is byte-stable.
std::string format_double(double value);

}  // namespace dame::csv
