#pragma once

#include "longic/cohort.hpp"
#include "longic/indirect.hpp"
#include "longic/missing_features.hpp"
#include "longic/models.hpp"
#include "longic/optimizer.hpp"
#include "longic/report.hpp"
#include "longic/risk_features.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace longic {

/// Classifier defaults for the per-visit models. A fixed gamma keeps kernel
/// width comparable between designs of different width; null in JSON
/// restores the median heuristic.
inline SvmOptions pipeline_svm_defaults() {
  SvmOptions o;
  o.gamma = 0.01;
  return o;
}

struct ModelConfig {
  SvmOptions svm = pipeline_svm_defaults();
  PlanOptions plan;
  std::optional<double> indirect_bandwidth;
  double test_fraction = 0.3;
};

ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelConfig& config);

/// Patient-level train/test split drawn on visit-1 ids; nested ids make it
/// apply to every visit.
struct Split {
  IdSet train;
  IdSet test;
};

Split split_ids(const Cohort& cohort, double test_fraction, std::uint64_t seed);

struct VisitModel {
  int visit = 1;
  MissingFeaturePlan plan;
  DesignMatrix design;  ///< rows aligned with cohort.visit(visit)
  IdIndex rows;         ///< id -> row of `design`
  std::shared_ptr<const SvmClassifier> classifier;
  std::shared_ptr<const IndirectEstimator> indirect;
  DecisionLayout layout;
};

struct TrainedModels {
  Split split;
  std::vector<VisitModel> visits;

  const VisitModel& at(int v) const;
};

/// Visit-ordered training: enrich missing features, append risk columns
/// from the already trained earlier classifiers, fit f_v and H_v on the
/// training ids only.
TrainedModels train_all(const Cohort& cohort, const ModelConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiments

struct Experiment1Options {
  int visit = 2;
  /// Empty: three random continuous changeable features measured at `visit`
  /// plus `binary_holdout` when set.
  std::vector<std::string> holdout;
  std::string binary_holdout = "statin_use";  ///< skipped when absent at `visit`
  std::vector<std::string> estimators = {"rbf_svm", "linear_svm", "cart", "knn", "logistic",
                                         "ridge"};
};

/// Seeded random holdout choice used when Experiment1Options::holdout is empty.
std::vector<std::string> choose_holdout(const Cohort& cohort, const Experiment1Options& options,
                                        std::uint64_t seed);

ExperimentReport experiment1(const Cohort& cohort, const Split& split,
                             const Experiment1Options& options, const ModelConfig& config,
                             std::uint64_t seed);

struct Experiment2Options {
  /// Feed the risk-feature design to both arms (ablation; gap is zero).
  bool identical_arms = false;
  /// Independent train/test splits; the first reuses `models`, later ones
  /// retrain the whole chain. Reported AUCs are means over repeats.
  int repeats = 5;
};

ExperimentReport experiment2(const Cohort& cohort, const TrainedModels& models,
                             const ModelConfig& config, std::uint64_t seed,
                             const Experiment2Options& options = {});

/// How optimized direct values reach later visits.
enum class Injection {
  Overwrite,  ///< later rows take the optimized values verbatim
  Delta,      ///< later rows add the optimized change to their observed values
};

struct Experiment3Options {
  double budget = 2.0;
  /// Delta keeps the zero-budget arms identical to the baseline.
  Injection injection = Injection::Delta;
  SolverOptions solver;
};

/// Per-patient arm values at each visit where the patient is present.
struct PatientArms {
  std::string id;
  std::vector<int> visits;
  std::vector<double> baseline;
  std::vector<double> strategy_a;  ///< optimize at v=1, carry forward
  std::vector<double> strategy_b;  ///< additionally re-optimize at v=2
  std::vector<Recommendation> recommendations;  ///< v=1 then (if present) v=2
};

PatientArms simulate_patient(const Cohort& cohort, const TrainedModels& models,
                             const std::string& id, const CostModel& costs, const Bounds& bounds,
                             const Experiment3Options& options);

ExperimentReport experiment3(const Cohort& cohort, const TrainedModels& models,
                             const CostModel& costs, const Experiment3Options& options,
                             std::uint64_t seed);

// ---------------------------------------------------------------------------
// Patient-level queries (CLI and service)

/// Model input of patient `id` at visit v with I replaced by H and risk
/// columns taken from `history` (baseline arm when empty).
Eigen::VectorXd baseline_instance(const TrainedModels& models, const std::string& id, int v,
                                  std::span<const double> history);

/// Optimizes at visit 1 and fills the baseline vs strategy-(a) trajectory.
Recommendation recommend(const Cohort& cohort, const TrainedModels& models, const std::string& id,
                         const CostModel& costs, const Bounds& bounds, double budget,
                         const SolverOptions& options = {});

std::vector<Recommendation> recommend_sweep(const Cohort& cohort, const TrainedModels& models,
                                            const std::string& id, const CostModel& costs,
                                            const Bounds& bounds, std::span<const double> budgets,
                                            const SolverOptions& options = {});

/// Per-feature (name, before_raw, after_raw, delta_std, cost_spent) view plus
/// trace, probabilities and trajectory.
nlohmann::json recommendation_to_json(const Cohort& cohort, const Recommendation& rec,
                                      const std::string& id, double budget);

}  // namespace longic
