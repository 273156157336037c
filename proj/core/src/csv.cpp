#include "longic/csv.hpp"

#include "longic/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace longic::csv {

namespace {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.emplace_back(line.substr(start));
      break;
    }
    cells.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& c : cells) {
    while (!c.empty() && (c.back() == ' ' || c.back() == '\t')) c.pop_back();
    std::size_t lead = 0;
    while (lead < c.size() && (c[lead] == ' ' || c[lead] == '\t')) ++lead;
    c.erase(0, lead);
  }
  return cells;
}

}  // namespace

Table parse(std::string_view text) {
  Table table;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    pos = end + 1;
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    auto cells = split_line(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
    } else {
      if (cells.size() != table.header.size()) {
        throw DataError("csv line " + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " cells, found " +
                        std::to_string(cells.size()));
      }
      table.rows.push_back(std::move(cells));
    }
    if (end == text.size()) break;
  }
  if (!have_header) throw DataError("csv: missing header row");
  return table;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse(buffer.str());
  } catch (const DataError& e) {
    throw DataError(path.filename().string() + ": " + e.what());
  }
}

std::string format(const Table& table) {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
  return out;
}

void write(const Table& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << format(table);
  if (!out) throw Error("write failed: " + path.string());
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw Error("format_double failed");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  if (text.empty()) throw DataError("empty numeric cell");
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DataError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace longic::csv
