#include "longic/report.hpp"

#include "longic/csv.hpp"
#include "longic/error.hpp"

#include <fstream>

namespace longic {

namespace fs = std::filesystem;
using nlohmann::json;

const SeriesPoint& ExperimentReport::point(int visit, std::string_view arm) const {
  for (const auto& p : series) {
    if (p.visit == visit && p.arm == arm) return p;
  }
  throw ConfigError("report has no series point (" + std::to_string(visit) + ", " +
                    std::string(arm) + ")");
}

json to_json(const ExperimentReport& report) {
  json tables = json::array();
  for (const auto& t : report.tables) {
    tables.push_back({{"name", t.name}, {"header", t.header}, {"rows", t.rows}});
  }
  json series = json::array();
  for (const auto& p : report.series) {
    series.push_back(
        {{"visit", p.visit}, {"arm", p.arm}, {"value", p.value}, {"population", p.population}});
  }
  return {{"experiment", report.experiment},
          {"seed", report.seed},
          {"config", report.config},
          {"tables", tables},
          {"series", series},
          {"summary", report.summary}};
}

namespace {

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  out << text;
  if (!out) throw Error("failed writing " + file.string());
}

}  // namespace

void write_report(const ExperimentReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "report.json", to_json(report).dump(2) + "\n");
  emit_series(report, dir / "series.csv");
  for (const auto& t : report.tables) {
    csv::write(csv::Table{t.header, t.rows}, dir / (t.name + ".csv"));
  }
  write_text(dir / "timing.json", json{{"wall_seconds", report.wall_seconds}}.dump(2) + "\n");
}

void emit_series(const ExperimentReport& report, const fs::path& file) {
  csv::Table table;
  table.header = {"visit", "arm", "value"};
  for (const auto& p : report.series) {
    table.rows.push_back({std::to_string(p.visit), p.arm, csv::format_double(p.value)});
  }
  csv::write(table, file);
}

std::vector<SeriesPoint> read_series(const fs::path& file) {
  const auto table = csv::read(file);
  if (table.header != std::vector<std::string>{"visit", "arm", "value"}) {
    throw DataError(file.string() + ": expected columns visit,arm,value");
  }
  std::vector<SeriesPoint> out;
  for (const auto& row : table.rows) {
    if (row.size() != 3) throw DataError(file.string() + ": malformed series row");
    SeriesPoint p;
    p.visit = static_cast<int>(csv::parse_double(row[0]));
    p.arm = row[1];
    p.value = csv::parse_double(row[2]);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace longic
