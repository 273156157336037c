#include "longic/optimizer.hpp"

#include "longic/error.hpp"
#include "longic/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace longic {

using Eigen::VectorXd;

namespace {

VectorXd gather(const VectorXd& x, const std::vector<Eigen::Index>& idx) {
  VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = x[idx[k]];
  return out;
}

void scatter(VectorXd& x, const std::vector<Eigen::Index>& idx, const VectorXd& values) {
  for (std::size_t k = 0; k < idx.size(); ++k) x[idx[k]] = values[static_cast<Eigen::Index>(k)];
}

}  // namespace

DecisionLayout make_layout(const FeaturePartition& partition, std::size_t schema_size,
                           std::size_t risk_columns) {
  partition.validate(schema_size);
  DecisionLayout layout;
  for (auto i : partition.unchangeable) layout.context.push_back(static_cast<Eigen::Index>(i));
  for (std::size_t k = 0; k < risk_columns; ++k) {
    layout.context.push_back(static_cast<Eigen::Index>(schema_size + k));
  }
  for (auto i : partition.indirect) layout.indirect.push_back(static_cast<Eigen::Index>(i));
  for (auto i : partition.direct) layout.direct.push_back(static_cast<Eigen::Index>(i));
  layout.dim = static_cast<Eigen::Index>(schema_size + risk_columns);
  return layout;
}

CompositeObjective::CompositeObjective(const Classifier& classifier,
                                       const IndirectEstimator* indirect,
                                       const DecisionLayout& layout, VectorXd start)
    : classifier_(classifier), indirect_(indirect), layout_(layout), start_(std::move(start)) {
  if (start_.size() != layout_.dim || classifier_.input_dim() != layout_.dim) {
    throw DimensionError("objective: instance has " + std::to_string(start_.size()) +
                         " features, layout expects " + std::to_string(layout_.dim) +
                         " and classifier " + std::to_string(classifier_.input_dim()));
  }
  if (!layout_.indirect.empty()) {
    if (indirect_ == nullptr) throw ConfigError("objective: indirect features need an estimator");
    if (indirect_->context_dim() != static_cast<Eigen::Index>(layout_.context.size()) ||
        indirect_->direct_dim() != static_cast<Eigen::Index>(layout_.direct.size()) ||
        indirect_->output_dim() != static_cast<Eigen::Index>(layout_.indirect.size())) {
      throw DimensionError("objective: indirect estimator does not match the layout");
    }
  }
  start_direct_ = gather(start_, layout_.direct);
  context_ = gather(start_, layout_.context);
  scale_ = gather(classifier_.standardizer().scale(), layout_.direct);
}

VectorXd CompositeObjective::instance(const Eigen::Ref<const VectorXd>& delta) const {
  VectorXd x = start_;
  const VectorXd direct = start_direct_ + scale_.cwiseProduct(delta);
  scatter(x, layout_.direct, direct);
  if (!layout_.indirect.empty()) scatter(x, layout_.indirect, indirect_->predict(context_, direct));
  return x;
}

double CompositeObjective::value(const Eigen::Ref<const VectorXd>& delta) const {
  return classifier_.predict_proba(instance(delta));
}

double CompositeObjective::value_and_gradient(const Eigen::Ref<const VectorXd>& delta,
                                              VectorXd& gradient) const {
  VectorXd x = start_;
  const VectorXd direct = start_direct_ + scale_.cwiseProduct(delta);
  scatter(x, layout_.direct, direct);
  Eigen::MatrixXd J;
  if (!layout_.indirect.empty()) {
    scatter(x, layout_.indirect, indirect_->predict_with_jacobian(context_, direct, J));
  }
  const VectorXd g = classifier_.grad_proba(x);
  VectorXd g_direct = gather(g, layout_.direct);
  if (!layout_.indirect.empty()) g_direct.noalias() += J.transpose() * gather(g, layout_.indirect);
  gradient = scale_.cwiseProduct(g_direct);
  return classifier_.predict_proba(x);
}

namespace {

struct Prepared {
  BudgetSpec delta_spec;  ///< box in standardized-delta units
  VectorXd raw_lower;
  VectorXd raw_upper;
};

Prepared prepare(const CompositeObjective& objective, std::span<const FeatureKind> kinds,
                 const CostModel& costs, const BudgetSpec& budget) {
  const auto n = objective.dim();
  if (static_cast<Eigen::Index>(kinds.size()) != n || static_cast<Eigen::Index>(costs.size()) != n) {
    throw DimensionError("optimize: direct kinds or costs do not match the direct features");
  }
  costs.validate();
  if (!(budget.budget >= 0.0) || !std::isfinite(budget.budget)) {
    throw ConfigError("optimize: budget must be finite and non-negative");
  }
  Prepared p;
  const Bounds box = budget.bounds.size() == 0 ? Bounds::unbounded(n) : budget.bounds;
  if (box.lower.size() != n || box.upper.size() != n) {
    throw DimensionError("optimize: bounds do not match the direct features");
  }
  p.raw_lower = box.lower;
  p.raw_upper = box.upper;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (kinds[static_cast<std::size_t>(j)] == FeatureKind::Binary) {
      p.raw_lower[j] = std::max(p.raw_lower[j], 0.0);
      p.raw_upper[j] = std::min(p.raw_upper[j], 1.0);
    }
  }
  const VectorXd& start = objective.start_direct();
  const VectorXd& scale = objective.scale();
  p.delta_spec.budget = budget.budget;
  p.delta_spec.bounds.lower.resize(n);
  p.delta_spec.bounds.upper.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(start[j] >= p.raw_lower[j] && start[j] <= p.raw_upper[j])) {
      throw SolverError("optimize: starting direct feature " + std::to_string(j) +
                        " lies outside its bounds");
    }
    p.delta_spec.bounds.lower[j] = (p.raw_lower[j] - start[j]) / scale[j];
    p.delta_spec.bounds.upper[j] = (p.raw_upper[j] - start[j]) / scale[j];
  }
  return p;
}

Recommendation descend(const Classifier& classifier, const IndirectEstimator* indirect,
                       const VectorXd& instance, const DecisionLayout& layout,
                       std::span<const FeatureKind> kinds, const CostModel& costs,
                       const BudgetSpec& budget, const VectorXd* warm_direct,
                       const SolverOptions& options) {
  if (!classifier.has_gradient()) {
    throw UnsupportedError(std::string(classifier.kind()) + " cannot drive gradient descent");
  }
  if (options.max_iterations < 0 || !(options.shrink > 0.0 && options.shrink < 1.0) ||
      !(options.initial_step > 0.0)) {
    throw ConfigError("optimize: invalid solver options");
  }
  const CompositeObjective objective(classifier, indirect, layout, instance);
  const auto prep = prepare(objective, kinds, costs, budget);
  const auto n = objective.dim();
  const VectorXd zero = VectorXd::Zero(n);
  const VectorXd& scale = objective.scale();

  VectorXd delta = zero;
  if (warm_direct != nullptr) {
    if (warm_direct->size() != n) throw DimensionError("optimize: warm start size mismatch");
    const VectorXd warm = (*warm_direct - objective.start_direct()).cwiseQuotient(scale);
    delta = project(costs, prep.delta_spec, zero, warm);
  }

  Recommendation rec;
  rec.before_probability = objective.value(zero);
  VectorXd grad;
  double f = objective.value_and_gradient(delta, grad);
  if (!grad.allFinite() || !std::isfinite(f)) throw SolverError("optimize: non-finite gradient");
  rec.objective_trace.push_back(f);
  VectorXd best = delta;
  double best_f = f;

  int it = 0;
  for (; it < options.max_iterations; ++it) {
    double step = options.initial_step;
    bool accepted = false;
    VectorXd candidate;
    double fc = f;
    while (step >= options.min_step) {
      candidate = project(costs, prep.delta_spec, zero, delta - step * grad);
      const double predicted = grad.dot(candidate - delta);
      if (predicted >= 0.0) break;  // projected gradient vanished
      fc = objective.value(candidate);
      if (fc <= f + options.armijo * predicted) {
        accepted = true;
        break;
      }
      step *= options.shrink;
    }
    if (!accepted) break;
    const double gain = f - fc;
    delta = candidate;
    f = objective.value_and_gradient(delta, grad);
    if (!grad.allFinite() || !std::isfinite(f)) throw SolverError("optimize: non-finite gradient");
    rec.objective_trace.push_back(f);
    if (f < best_f) {
      best_f = f;
      best = delta;
    }
    if (gain < options.min_decrease) {
      ++it;
      break;
    }
  }
  rec.iterations = it;

  VectorXd raw = objective.start_direct() + scale.cwiseProduct(best);
  for (Eigen::Index j = 0; j < n; ++j) raw[j] = std::clamp(raw[j], prep.raw_lower[j], prep.raw_upper[j]);
  if (options.round_binary) {
    VectorXd rounded = raw;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (kinds[static_cast<std::size_t>(j)] == FeatureKind::Binary) {
        rounded[j] = raw[j] >= 0.5 ? 1.0 : 0.0;
      }
    }
    const VectorXd d = (rounded - objective.start_direct()).cwiseQuotient(scale);
    if (costs.cost(d) <= budget.budget) raw = rounded;
  }

  rec.direct_before = objective.start_direct();
  rec.direct_after = raw;
  rec.delta_std = (raw - rec.direct_before).cwiseQuotient(scale);
  rec.feature_cost = costs.contributions(rec.delta_std);
  rec.cost_spent = rec.feature_cost.sum();
  rec.instance_before = objective.instance(zero);
  rec.instance_after = instance;
  scatter(rec.instance_after, layout.direct, raw);
  const VectorXd context = gather(instance, layout.context);
  if (!layout.indirect.empty()) {
    rec.indirect_before = gather(rec.instance_before, layout.indirect);
    rec.indirect_after = indirect->predict(context, raw);
    scatter(rec.instance_after, layout.indirect, rec.indirect_after);
  } else {
    rec.indirect_before = VectorXd(0);
    rec.indirect_after = VectorXd(0);
  }
  rec.after_probability = classifier.predict_proba(rec.instance_after);
  return rec;
}

}  // namespace

Recommendation optimize(const Classifier& classifier, const IndirectEstimator* indirect,
                        const VectorXd& instance, const DecisionLayout& layout,
                        std::span<const FeatureKind> direct_kinds, const CostModel& costs,
                        const BudgetSpec& budget, const SolverOptions& options) {
  return descend(classifier, indirect, instance, layout, direct_kinds, costs, budget, nullptr,
                 options);
}

Recommendation optimize_from(const Classifier& classifier, const IndirectEstimator* indirect,
                             const VectorXd& instance, const DecisionLayout& layout,
                             std::span<const FeatureKind> direct_kinds, const CostModel& costs,
                             const BudgetSpec& budget, const VectorXd& warm_direct,
                             const SolverOptions& options) {
  return descend(classifier, indirect, instance, layout, direct_kinds, costs, budget, &warm_direct,
                 options);
}

std::vector<Recommendation> sweep_budget(const Classifier& classifier,
                                         const IndirectEstimator* indirect,
                                         const VectorXd& instance, const DecisionLayout& layout,
                                         std::span<const FeatureKind> direct_kinds,
                                         const CostModel& costs, const Bounds& bounds,
                                         std::span<const double> budgets,
                                         const SolverOptions& options) {
  for (std::size_t k = 0; k < budgets.size(); ++k) {
    if (!(budgets[k] >= 0.0)) throw ConfigError("sweep: budgets must be non-negative");
    if (k > 0 && budgets[k] < budgets[k - 1]) throw ConfigError("sweep: budgets must be ascending");
  }
  std::vector<Recommendation> out;
  out.reserve(budgets.size());
  for (double b : budgets) {
    const BudgetSpec spec{b, bounds};
    if (out.empty()) {
      out.push_back(optimize(classifier, indirect, instance, layout, direct_kinds, costs, spec,
                             options));
    } else {
      const VectorXd warm = out.back().direct_after;
      out.push_back(optimize_from(classifier, indirect, instance, layout, direct_kinds, costs, spec,
                                  warm, options));
    }
  }
  return out;
}

}  // namespace longic
