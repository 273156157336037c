#include "longic/cohort.hpp"

#include "longic/csv.hpp"
#include "longic/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace longic {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(FeatureKind kind) {
  return kind == FeatureKind::Binary ? "binary" : "continuous";
}

FeatureKind parse_feature_kind(std::string_view text) {
  if (text == "continuous") return FeatureKind::Continuous;
  if (text == "binary") return FeatureKind::Binary;
  throw ConfigError("unknown feature kind '" + std::string(text) + "'");
}

std::optional<std::size_t> FeatureSchema::find(std::string_view name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t FeatureSchema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw DataError("schema mismatch: feature '" + std::string(name) + "' is not in the schema");
}

std::vector<FeatureKind> FeatureSchema::kinds() const {
  std::vector<FeatureKind> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(f.kind);
  return out;
}

void FeatureSchema::validate() const {
  std::set<std::string> seen;
  for (const auto& f : features) {
    if (f.name.empty()) throw DataError("schema: empty feature name");
    if (f.name == "id" || f.name == "y_next") {
      throw DataError("schema: feature name '" + f.name + "' is reserved");
    }
    if (!seen.insert(f.name).second) {
      throw DataError("schema: duplicate feature name '" + f.name + "'");
    }
  }
}

void FeaturePartition::validate(std::size_t n) const {
  std::vector<int> owner(n, 0);
  auto mark = [&](const std::vector<std::size_t>& set, const char* label) {
    for (auto i : set) {
      if (i >= n) {
        throw DataError(std::string("partition index out of range in ") + label + ": " +
                        std::to_string(i));
      }
      if (owner[i]++) {
        throw DataError("partition sets overlap at feature index " + std::to_string(i));
      }
    }
  };
  mark(unchangeable, "U");
  mark(indirect, "I");
  mark(direct, "D");
  for (std::size_t i = 0; i < n; ++i) {
    if (!owner[i]) throw DataError("partition does not cover feature index " + std::to_string(i));
  }
  if (direct.empty()) throw DataError("partition: D must be nonempty");
}

Partition FeaturePartition::of(std::size_t index) const {
  if (std::binary_search(direct.begin(), direct.end(), index)) return Partition::Direct;
  if (std::binary_search(indirect.begin(), indirect.end(), index)) return Partition::Indirect;
  return Partition::Unchangeable;
}

std::optional<std::size_t> VisitDataset::column_of(std::size_t feature) const {
  auto it = std::lower_bound(present.begin(), present.end(), feature);
  if (it == present.end() || *it != feature) return std::nullopt;
  return static_cast<std::size_t>(it - present.begin());
}

IdIndex index_ids(const std::vector<std::string>& ids) {
  IdIndex index;
  index.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);
  return index;
}

const VisitDataset& Cohort::visit(int v) const {
  if (v < 1 || v > num_visits()) {
    throw DataError("visit " + std::to_string(v) + " out of range 1.." +
                    std::to_string(num_visits()));
  }
  return visits[static_cast<std::size_t>(v - 1)];
}

// ---------------------------------------------------------------------------
// Config file

namespace {

double parse_cost(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_null()) return kLockedCost;
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "locked") return kLockedCost;
    throw ConfigError(std::string("cost '") + key + "' must be a number, \"inf\" or \"locked\"");
  }
  return v.get<double>();
}

json cost_json(double c) {
  if (c == kLockedCost) return "inf";
  return c;
}

double parse_bound(const json& j, const char* key, double fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<double>();
}

json bound_json(double b) {
  if (std::isinf(b)) return nullptr;
  return b;
}

}  // namespace

CohortConfig load_cohort_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open cohort config " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cohort config " + file.string() + ": " + e.what());
  }
  CohortConfig config;
  try {
    config.schema.version = j.value("schema_version", std::string{});
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<DirectionalCost> costs;
    std::vector<double> lower, upper;
    for (const auto& f : j.at("features")) {
      Feature feature;
      feature.name = f.at("name").get<std::string>();
      feature.kind = parse_feature_kind(f.value("kind", std::string("continuous")));
      feature.unit = f.value("unit", std::string{});
      const auto index = config.schema.features.size();
      config.schema.features.push_back(feature);
      const auto part = f.value("partition", std::string("U"));
      if (part == "U") {
        config.partition.unchangeable.push_back(index);
      } else if (part == "I") {
        config.partition.indirect.push_back(index);
      } else if (part == "D") {
        config.partition.direct.push_back(index);
        costs.push_back({parse_cost(f, "cost_up", 1.0), parse_cost(f, "cost_down", 1.0)});
        lower.push_back(parse_bound(f, "lower", -inf));
        upper.push_back(parse_bound(f, "upper", inf));
      } else {
        throw ConfigError("feature '" + feature.name + "': partition must be U, I or D");
      }
    }
    config.cost_model = CostModel(std::move(costs));
    config.raw_bounds.lower = Eigen::Map<Eigen::VectorXd>(lower.data(), lower.size());
    config.raw_bounds.upper = Eigen::Map<Eigen::VectorXd>(upper.data(), upper.size());
    if (j.contains("visits")) {
      config.visit_files = j.at("visits").get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw ConfigError("cohort config " + file.string() + ": " + e.what());
  }
  config.schema.validate();
  config.partition.validate(config.schema.size());
  config.cost_model.validate();
  for (Eigen::Index j = 0; j < config.raw_bounds.size(); ++j) {
    if (config.raw_bounds.lower[j] > config.raw_bounds.upper[j]) {
      throw ConfigError("cohort config: lower bound exceeds upper bound for a direct feature");
    }
  }
  return config;
}

void save_cohort_config(const CohortConfig& config, const fs::path& file) {
  json features = json::array();
  std::size_t d = 0;
  for (std::size_t i = 0; i < config.schema.size(); ++i) {
    const auto& f = config.schema.features[i];
    json entry{{"name", f.name}, {"kind", to_string(f.kind)}, {"unit", f.unit}};
    switch (config.partition.of(i)) {
      case Partition::Unchangeable:
        entry["partition"] = "U";
        break;
      case Partition::Indirect:
        entry["partition"] = "I";
        break;
      case Partition::Direct: {
        entry["partition"] = "D";
        const auto k = static_cast<Eigen::Index>(d);
        entry["cost_up"] = cost_json(config.cost_model[d].up);
        entry["cost_down"] = cost_json(config.cost_model[d].down);
        entry["lower"] = bound_json(config.raw_bounds.lower[k]);
        entry["upper"] = bound_json(config.raw_bounds.upper[k]);
        ++d;
        break;
      }
    }
    features.push_back(std::move(entry));
  }
  json j{{"format_version", 1},
         {"schema_version", config.schema.version},
         {"features", std::move(features)},
         {"visits", config.visit_files}};
  std::ofstream out(file);
  if (!out) throw Error("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Visit files

VisitDataset read_visit_file(const fs::path& file, const FeatureSchema& schema, int visit) {
  const auto table = csv::read(file);
  const auto where = file.filename().string();
  std::optional<std::size_t> id_col, y_col;
  std::vector<std::pair<std::size_t, std::size_t>> feature_cols;  // (schema index, csv column)
  std::set<std::string> seen;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const auto& name = table.header[c];
    if (!seen.insert(name).second) throw DataError(where + ": duplicate column '" + name + "'");
    if (name == "id") {
      id_col = c;
    } else if (name == "y_next") {
      y_col = c;
    } else if (auto idx = schema.find(name)) {
      feature_cols.emplace_back(*idx, c);
    } else {
      throw DataError(where + ": schema mismatch: column '" + name +
                      "' is not a visit-1 feature");
    }
  }
  if (!id_col) throw DataError(where + ": missing 'id' column");
  if (!y_col) throw DataError(where + ": missing 'y_next' column");
  std::sort(feature_cols.begin(), feature_cols.end());

  VisitDataset ds;
  ds.visit = visit;
  for (const auto& [idx, col] : feature_cols) ds.present.push_back(idx);
  const auto n = table.rows.size();
  ds.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(feature_cols.size()));
  ds.ids.reserve(n);
  ds.y_next.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = table.rows[r];
    ds.ids.push_back(row[*id_col]);
    try {
      const double y = csv::parse_double(row[*y_col]);
      if (y != 0.0 && y != 1.0) {
        throw DataError("non-binary outcome '" + row[*y_col] + "'");
      }
      ds.y_next.push_back(static_cast<int>(y));
      for (std::size_t k = 0; k < feature_cols.size(); ++k) {
        const auto [idx, col] = feature_cols[k];
        const double value = csv::parse_double(row[col]);
        if (!std::isfinite(value)) throw DataError("non-finite value in '" + table.header[col] + "'");
        if (schema.features[idx].kind == FeatureKind::Binary && value != 0.0 && value != 1.0) {
          throw DataError("binary feature '" + table.header[col] + "' has value '" + row[col] +
                          "'");
        }
        ds.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = value;
      }
    } catch (const DataError& e) {
      throw DataError(where + " row " + std::to_string(r + 2) + ": " + e.what());
    }
  }
  return ds;
}

void write_visit_file(const VisitDataset& visit, const FeatureSchema& schema, const fs::path& file) {
  csv::Table table;
  table.header.push_back("id");
  for (auto idx : visit.present) table.header.push_back(schema.features[idx].name);
  table.header.push_back("y_next");
  table.rows.reserve(visit.rows());
  for (std::size_t r = 0; r < visit.rows(); ++r) {
    std::vector<std::string> row;
    row.reserve(table.header.size());
    row.push_back(visit.ids[r]);
    for (Eigen::Index c = 0; c < visit.X.cols(); ++c) {
      row.push_back(csv::format_double(visit.X(static_cast<Eigen::Index>(r), c)));
    }
    row.push_back(std::to_string(visit.y_next[r]));
    table.rows.push_back(std::move(row));
  }
  csv::write(table, file);
}

Cohort load_cohort(const fs::path& dir, const CohortConfig& config) {
  if (config.visit_files.empty()) throw ConfigError("cohort config lists no visit files");
  Cohort cohort;
  cohort.schema = config.schema;
  cohort.partition = config.partition;
  cohort.cost_model = config.cost_model;
  cohort.raw_bounds = config.raw_bounds;
  for (std::size_t v = 0; v < config.visit_files.size(); ++v) {
    cohort.visits.push_back(
        read_visit_file(dir / config.visit_files[v], config.schema, static_cast<int>(v + 1)));
  }
  validate_cohort(cohort);
  return cohort;
}

Cohort load_cohort(const fs::path& dir) {
  return load_cohort(dir, load_cohort_config(dir / "cohort.json"));
}

CohortConfig config_of(const Cohort& cohort) {
  CohortConfig config;
  config.schema = cohort.schema;
  config.partition = cohort.partition;
  config.cost_model = cohort.cost_model;
  config.raw_bounds = cohort.raw_bounds;
  for (int v = 1; v <= cohort.num_visits(); ++v) {
    config.visit_files.push_back("visit" + std::to_string(v) + ".csv");
  }
  return config;
}

void save_cohort(const Cohort& cohort, const fs::path& dir) {
  fs::create_directories(dir);
  const auto config = config_of(cohort);
  save_cohort_config(config, dir / "cohort.json");
  for (int v = 1; v <= cohort.num_visits(); ++v) {
    write_visit_file(cohort.visit(v), cohort.schema,
                     dir / config.visit_files[static_cast<std::size_t>(v - 1)]);
  }
}

// ---------------------------------------------------------------------------
// Longitudinal discipline

std::vector<VisitDataset> enforce_exclusion(std::vector<VisitDataset> visits) {
  IdSet events;
  for (auto& visit : visits) {
    if (!events.empty()) {
      std::vector<Eigen::Index> keep;
      keep.reserve(visit.rows());
      for (std::size_t r = 0; r < visit.rows(); ++r) {
        if (!events.count(visit.ids[r])) keep.push_back(static_cast<Eigen::Index>(r));
      }
      if (keep.size() != visit.rows()) {
        VisitDataset filtered;
        filtered.visit = visit.visit;
        filtered.present = visit.present;
        filtered.X.resize(static_cast<Eigen::Index>(keep.size()), visit.X.cols());
        for (std::size_t k = 0; k < keep.size(); ++k) {
          filtered.X.row(static_cast<Eigen::Index>(k)) = visit.X.row(keep[k]);
          filtered.ids.push_back(visit.ids[static_cast<std::size_t>(keep[k])]);
          filtered.y_next.push_back(visit.y_next[static_cast<std::size_t>(keep[k])]);
        }
        visit = std::move(filtered);
      }
    }
    for (std::size_t r = 0; r < visit.rows(); ++r) {
      if (visit.y_next[r] == 1) events.insert(visit.ids[r]);
    }
  }
  return visits;
}

std::vector<std::size_t> missing_feature_set(const Cohort& cohort, int v) {
  const auto& visit = cohort.visit(v);
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < cohort.schema.size(); ++i) {
    if (!visit.column_of(i)) missing.push_back(i);
  }
  return missing;
}

void validate_cohort(const Cohort& cohort) {
  cohort.schema.validate();
  cohort.partition.validate(cohort.schema.size());
  if (cohort.visits.empty()) throw DataError("cohort has no visits");
  if (cohort.cost_model.size() != cohort.partition.direct.size()) {
    throw DataError("cost model size does not match |D|");
  }
  if (static_cast<std::size_t>(cohort.raw_bounds.size()) != cohort.partition.direct.size()) {
    throw DataError("bounds size does not match |D|");
  }
  const auto p1 = cohort.schema.size();
  const IdSet* previous = nullptr;
  IdSet previous_ids;
  IdSet events;
  for (int v = 1; v <= cohort.num_visits(); ++v) {
    const auto& visit = cohort.visit(v);
    const auto tag = "visit " + std::to_string(v) + ": ";
    if (visit.visit != v) throw DataError(tag + "visit index mismatch");
    if (visit.ids.size() != visit.y_next.size() ||
        static_cast<Eigen::Index>(visit.ids.size()) != visit.X.rows()) {
      throw DataError(tag + "ids, rows and outcomes differ in length");
    }
    if (static_cast<Eigen::Index>(visit.present.size()) != visit.X.cols()) {
      throw DataError(tag + "present features do not match the column count");
    }
    if (!std::is_sorted(visit.present.begin(), visit.present.end()) ||
        std::adjacent_find(visit.present.begin(), visit.present.end()) != visit.present.end()) {
      throw DataError(tag + "present features must be strictly increasing");
    }
    if (!visit.present.empty() && visit.present.back() >= p1) {
      throw DataError(tag + "schema mismatch: feature index outside the visit-1 schema");
    }
    if (v == 1 && visit.present.size() != p1) {
      throw DataError("visit 1 must measure every schema feature");
    }
    IdSet ids;
    for (std::size_t r = 0; r < visit.rows(); ++r) {
      const auto& id = visit.ids[r];
      if (!ids.insert(id).second) throw DataError(tag + "duplicate id '" + id + "'");
      if (visit.y_next[r] != 0 && visit.y_next[r] != 1) {
        throw DataError(tag + "non-binary outcome for id '" + id + "'");
      }
      if (previous && !previous->count(id)) {
        throw DataError(tag + "continuity violated: id '" + id + "' absent from visit " +
                        std::to_string(v - 1));
      }
      if (events.count(id)) {
        throw DataError(tag + "event exclusion violated: id '" + id +
                        "' had the outcome at an earlier visit");
      }
    }
    for (Eigen::Index c = 0; c < visit.X.cols(); ++c) {
      const auto feature = visit.present[static_cast<std::size_t>(c)];
      const bool binary = cohort.schema.features[feature].kind == FeatureKind::Binary;
      for (Eigen::Index r = 0; r < visit.X.rows(); ++r) {
        const double x = visit.X(r, c);
        if (!std::isfinite(x)) throw DataError(tag + "non-finite feature value");
        if (binary && x != 0.0 && x != 1.0) {
          throw DataError(tag + "binary feature '" + cohort.schema.features[feature].name +
                          "' is not 0/1");
        }
      }
    }
    for (std::size_t r = 0; r < visit.rows(); ++r) {
      if (visit.y_next[r] == 1) events.insert(visit.ids[r]);
    }
    previous_ids = std::move(ids);
    previous = &previous_ids;
  }
}

}  // namespace longic
