#pragma once

#include "longic/cohort.hpp"
#include "longic/cost.hpp"
#include "longic/indirect.hpp"
#include "longic/models.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace longic {

/// Column roles inside a model input vector: schema features first, then the
/// historical risk columns.
struct DecisionLayout {
  std::vector<Eigen::Index> context;   ///< fed to H, never modified (U then risk)
  std::vector<Eigen::Index> indirect;  ///< replaced by H's output
  std::vector<Eigen::Index> direct;    ///< decision variables
  Eigen::Index dim = 0;
};

DecisionLayout make_layout(const FeaturePartition& partition, std::size_t schema_size,
                           std::size_t risk_columns);

struct SolverOptions {
  int max_iterations = 1000;
  double min_decrease = 1e-8;  ///< stop once an iteration gains less than this
  double initial_step = 1.0;
  double shrink = 0.5;
  double armijo = 1e-4;
  double min_step = 1e-12;
  bool round_binary = false;  ///< round relaxed binary direct features at 0.5 afterwards
};

struct TrajectoryPoint {
  int visit = 0;
  double baseline = 0.0;
  double optimized = 0.0;
};

struct Recommendation {
  Eigen::VectorXd direct_before;  ///< raw units
  Eigen::VectorXd direct_after;   ///< raw units
  Eigen::VectorXd delta_std;      ///< (after - before) / scale
  Eigen::VectorXd feature_cost;   ///< per-feature share of cost_spent
  double cost_spent = 0.0;
  Eigen::VectorXd indirect_before;  ///< H at the start
  Eigen::VectorXd indirect_after;   ///< H at the optimum
  Eigen::VectorXd instance_before;  ///< full model input at the start
  Eigen::VectorXd instance_after;   ///< full model input at the optimum
  std::vector<double> objective_trace;
  double before_probability = 0.0;
  double after_probability = 0.0;
  int iterations = 0;
  std::vector<TrajectoryPoint> trajectory;
};

/// Objective f(x_U, H(x_U, x_D), x_D) of the decision variables, expressed as
/// a standardized delta from the starting direct values.
class CompositeObjective {
 public:
  /// `H` may be null when the layout has no indirect features.
  CompositeObjective(const Classifier& classifier, const IndirectEstimator* indirect,
                     const DecisionLayout& layout, Eigen::VectorXd start);

  Eigen::Index dim() const { return static_cast<Eigen::Index>(layout_.direct.size()); }
  const Eigen::VectorXd& scale() const { return scale_; }
  const Eigen::VectorXd& start_direct() const { return start_direct_; }

  /// Full model input for a given standardized delta.
  Eigen::VectorXd instance(const Eigen::Ref<const Eigen::VectorXd>& delta) const;
  double value(const Eigen::Ref<const Eigen::VectorXd>& delta) const;
  /// Value and gradient in delta (chain rule through H).
  double value_and_gradient(const Eigen::Ref<const Eigen::VectorXd>& delta,
                            Eigen::VectorXd& gradient) const;

 private:
  const Classifier& classifier_;
  const IndirectEstimator* indirect_;
  DecisionLayout layout_;
  Eigen::VectorXd start_;
  Eigen::VectorXd start_direct_;
  Eigen::VectorXd context_;
  Eigen::VectorXd scale_;
};

/// Projected gradient descent with Armijo backtracking on the composite
/// objective subject to the cost budget and raw-unit box bounds. Costs and
/// budget apply to standardized deltas (scale taken from the classifier).
/// Binary direct features are relaxed to [0, 1]. Returns the best iterate.
///
/// Throws SolverError on an infeasible start or a non-finite gradient.
Recommendation optimize(const Classifier& classifier, const IndirectEstimator* indirect,
                        const Eigen::VectorXd& instance, const DecisionLayout& layout,
                        std::span<const FeatureKind> direct_kinds, const CostModel& costs,
                        const BudgetSpec& budget, const SolverOptions& options = {});

/// Same, starting the descent from `warm_direct` (raw, feasible for `budget`).
Recommendation optimize_from(const Classifier& classifier, const IndirectEstimator* indirect,
                             const Eigen::VectorXd& instance, const DecisionLayout& layout,
                             std::span<const FeatureKind> direct_kinds, const CostModel& costs,
                             const BudgetSpec& budget, const Eigen::VectorXd& warm_direct,
                             const SolverOptions& options = {});

/// One recommendation per budget (sorted ascending, non-negative), each run
/// warm-started from the previous optimum so final objectives never increase.
std::vector<Recommendation> sweep_budget(const Classifier& classifier,
                                         const IndirectEstimator* indirect,
                                         const Eigen::VectorXd& instance,
                                         const DecisionLayout& layout,
                                         std::span<const FeatureKind> direct_kinds,
                                         const CostModel& costs, const Bounds& bounds,
                                         std::span<const double> budgets,
                                         const SolverOptions& options = {});

}  // namespace longic
