#pragma once

#include "longic/cohort.hpp"
#include "longic/models.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace longic {

/// Fully assembled model inputs at one visit, rows keyed by id.
struct DesignMatrix {
  int visit = 1;
  std::vector<std::string> ids;
  Eigen::MatrixXd X;
  std::vector<int> y_next;
  std::vector<std::string> columns;

  std::size_t rows() const { return ids.size(); }
};

/// A visit dataset with v - 1 past-risk columns appended.
struct RiskAugmentedDataset {
  VisitDataset base;
  Eigen::MatrixXd risk;                 ///< n x (v - 1), column k from visit k+1's classifier
  std::vector<std::string> provenance;  ///< one identifier per risk column

  /// [base.X, risk]: p_v + v - 1 columns.
  Eigen::MatrixXd augmented() const;
};

std::string risk_column_name(int source_visit);

/// Per-row predicted probability.
Eigen::VectorXd estimate_risk(const Classifier& classifier, const Eigen::MatrixXd& rows);

/// Appends one risk column per earlier visit. `earlier[k]` must be the full
/// input layout that `classifiers[k]` was trained on (visit k + 1); each
/// row of `base` is matched to its own earlier rows by id. Throws DataError
/// if an id is missing from an earlier visit.
RiskAugmentedDataset augment_with_risk(const VisitDataset& base,
                                       std::span<const DesignMatrix> earlier,
                                       std::span<const ClassifierPtr> classifiers);

/// Rows of visit v concatenated with the same ids' measured feature vectors
/// from visits 1..v-1, oldest visit first: sum_k p_k columns.
DesignMatrix augment_with_carryforward(const Cohort& cohort, int v);

/// Same CSV dialect as the visit files: id, columns..., y_next.
void write_design_file(const DesignMatrix& design, const std::filesystem::path& file);

}  // namespace longic
