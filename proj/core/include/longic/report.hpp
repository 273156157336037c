#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace longic {

struct ReportTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct SeriesPoint {
  int visit = 0;
  std::string arm;
  double value = 0.0;
  std::size_t population = 0;
};

struct ExperimentReport {
  int experiment = 0;
  nlohmann::json config;
  std::vector<ReportTable> tables;
  std::vector<SeriesPoint> series;
  nlohmann::json summary;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;  ///< kept out of report.json

  const SeriesPoint& point(int visit, std::string_view arm) const;
};

/// Deterministic JSON view (everything except wall-clock time).
nlohmann::json to_json(const ExperimentReport& report);

/// Writes report.json, series.csv, one CSV per table and timing.json into `dir`.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

/// visit,arm,value rows in report order.
void emit_series(const ExperimentReport& report, const std::filesystem::path& file);
std::vector<SeriesPoint> read_series(const std::filesystem::path& file);

}  // namespace longic
