#pragma once

#include "longic/cohort.hpp"
#include "longic/models.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace longic {

struct MissingEstimator {
  std::size_t feature = 0;  ///< schema index of the estimated feature
  FeatureKind kind = FeatureKind::Continuous;
  ModelKind model = ModelKind::Ridge;
  ClassifierPtr classifier;  ///< set for binary features
  RegressorPtr regressor;    ///< set for continuous features
};

/// One estimator per feature missing at `visit`, each consuming the
/// features measured at that visit and trained on visit-1 rows.
struct MissingFeaturePlan {
  int visit = 1;
  std::size_t schema_size = 0;
  std::vector<std::size_t> consumed;
  std::vector<MissingEstimator> estimators;

  bool empty() const { return estimators.empty(); }
};

struct PlanOptions {
  ModelKind continuous = ModelKind::Ridge;
  ModelKind binary = ModelKind::Logistic;
  std::map<std::string, ModelKind> overrides;  ///< by feature name
  BaselineHyper hyper;
};

/// `train_ids`, when given, restricts the visit-1 training rows.
MissingFeaturePlan fit_plan(const Cohort& cohort, int v, const PlanOptions& options = {},
                            const IdSet* train_ids = nullptr);

struct EnrichedRows {
  Eigen::MatrixXd X;                   ///< n x p_1, schema order
  Eigen::MatrixXd binary_probability;  ///< diagnostics: one column per binary estimator
};

/// Fills every missing feature with its estimate; binary estimates are
/// thresholded at 0.5. Throws DataError if a consumed feature is not measured.
EnrichedRows enrich(const MissingFeaturePlan& plan, const VisitDataset& dataset);

/// Rows of visit v with missing features copied from the same id at visit 1.
Eigen::MatrixXd carry_forward(const Cohort& cohort, int v);

/// One (feature, estimator) cell of the estimator comparison.
struct ScoreCell {
  std::string feature;
  FeatureKind feature_kind = FeatureKind::Continuous;
  std::string estimator;
  std::string metric;  ///< "mse" or "auc"
  double value = 0.0;  ///< NaN when the estimator does not apply or failed to train
  std::string error;   ///< training failure message, empty otherwise
};

struct ScoreTable {
  std::vector<std::string> features;
  std::vector<std::string> estimators;  ///< "carry" first
  std::vector<ScoreCell> cells;         ///< feature-major

  const ScoreCell& at(std::string_view feature, std::string_view estimator) const;
  /// Best estimator for a feature (lowest MSE / highest AUC); first wins ties.
  std::string winner(std::string_view feature) const;
  /// Columns (feature, kind, metric_name, value); kind is the estimator.
  void write_csv(const std::filesystem::path& file) const;
};

struct EvaluationOptions {
  const IdSet* train_ids = nullptr;  ///< visit-1 rows used for fitting
  const IdSet* test_ids = nullptr;   ///< visit-v rows used for scoring
  BaselineHyper hyper;
};

/// Treats `holdout` (measured at v) as missing, fits each estimator on
/// visit-1 rows using the remaining visit-v features, and scores the
/// estimates against the true visit-v values. Estimator names: the model
/// kinds plus "oracle" (returns the truth) and "constant" (training mean);
/// "carry" is always added first.
ScoreTable evaluate_estimators(const Cohort& cohort, int v,
                               std::span<const std::string> holdout,
                               std::span<const std::string> estimators,
                               const EvaluationOptions& options = {});

}  // namespace longic
