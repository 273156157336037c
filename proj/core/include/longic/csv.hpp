#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace longic::csv {

/// A comma-separated table held as strings; no quoting support.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read(const std::filesystem::path& path);
Table parse(std::string_view text);
void write(const Table& table, const std::filesystem::path& path);
std::string format(const Table& table);

/// Shortest decimal representation that round-trips exactly.
std::string format_double(double value);
/// Strict parse; throws DataError on trailing garbage or empty input.
double parse_double(std::string_view text);

}  // namespace longic::csv
