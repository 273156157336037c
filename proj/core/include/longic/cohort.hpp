#pragma once

#include "longic/cost.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace longic {

enum class FeatureKind { Continuous, Binary };

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view text);

struct Feature {
  std::string name;
  FeatureKind kind = FeatureKind::Continuous;
  std::string unit;
};

/// Ordered visit-1 feature set. Later visits measure a subset of it.
struct FeatureSchema {
  std::vector<Feature> features;
  std::string version;

  std::size_t size() const { return features.size(); }
  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws DataError if the name is not in the schema.
  std::size_t index_of(std::string_view name) const;
  std::vector<FeatureKind> kinds() const;
  void validate() const;
};

enum class Partition { Unchangeable, Indirect, Direct };

/// Index sets U (unchangeable), I (indirectly changeable) and D (directly
/// changeable) into the schema. Each set is kept sorted ascending.
struct FeaturePartition {
  std::vector<std::size_t> unchangeable;
  std::vector<std::size_t> indirect;
  std::vector<std::size_t> direct;

  /// Disjoint, covering [0, n), D nonempty. Throws DataError otherwise.
  void validate(std::size_t n) const;
  Partition of(std::size_t index) const;
};

/// One visit's instances. Columns of X follow `present` (ascending schema indices).
struct VisitDataset {
  int visit = 1;
  std::vector<std::string> ids;
  Eigen::MatrixXd X;
  std::vector<int> y_next;
  std::vector<std::size_t> present;

  std::size_t rows() const { return ids.size(); }
  /// Column of schema feature `feature` in X, if measured at this visit.
  std::optional<std::size_t> column_of(std::size_t feature) const;
};

using IdIndex = std::unordered_map<std::string, std::size_t>;
using IdSet = std::unordered_set<std::string>;

IdIndex index_ids(const std::vector<std::string>& ids);

struct Cohort {
  FeatureSchema schema;
  FeaturePartition partition;
  std::vector<VisitDataset> visits;  ///< visits[v-1] holds visit v
  CostModel cost_model;              ///< one entry per partition.direct, same order
  Bounds raw_bounds;                 ///< raw-unit bounds per partition.direct

  int num_visits() const { return static_cast<int>(visits.size()); }
  /// 1-based access; throws DataError when out of range.
  const VisitDataset& visit(int v) const;
};

/// Schema, partition, costs and bounds, plus the per-visit file names.
struct CohortConfig {
  FeatureSchema schema;
  FeaturePartition partition;
  CostModel cost_model;
  Bounds raw_bounds;
  std::vector<std::string> visit_files;
};

CohortConfig load_cohort_config(const std::filesystem::path& file);
void save_cohort_config(const CohortConfig& config, const std::filesystem::path& file);

/// Load every visit file named in `config` from directory `dir` and validate.
Cohort load_cohort(const std::filesystem::path& dir, const CohortConfig& config);
/// Convenience: reads `dir/cohort.json` first.
Cohort load_cohort(const std::filesystem::path& dir);

/// Writes `config` as cohort.json and one CSV per visit into `dir`.
void save_cohort(const Cohort& cohort, const std::filesystem::path& dir);
void write_visit_file(const VisitDataset& visit, const FeatureSchema& schema,
                      const std::filesystem::path& file);
VisitDataset read_visit_file(const std::filesystem::path& file, const FeatureSchema& schema,
                             int visit);

CohortConfig config_of(const Cohort& cohort);

/// Removes from every later visit the ids that had y_next = 1 at an earlier visit.
std::vector<VisitDataset> enforce_exclusion(std::vector<VisitDataset> visits);

/// M_v = F_1 \ F_v as sorted schema indices.
std::vector<std::size_t> missing_feature_set(const Cohort& cohort, int v);

/// Checks schema, partition, per-visit shape, binary encodings, continuity
/// (ids at v+1 are a subset of ids at v) and event exclusion.
void validate_cohort(const Cohort& cohort);

}  // namespace longic
