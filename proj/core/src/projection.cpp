#include "longic/projection.hpp"

#include "longic/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace longic {

namespace {

using Eigen::VectorXd;

/// Soft-thresholded, box-clipped point for multiplier lambda.
void shrink(const CostModel& costs, const VectorXd& lo, const VectorXd& hi,
            const Eigen::Ref<const VectorXd>& x_bar, const VectorXd& d, double lambda,
            VectorXd& w) {
  for (Eigen::Index j = 0; j < d.size(); ++j) {
    const auto& c = costs[static_cast<std::size_t>(j)];
    double s = 0.0;
    if (d[j] > 0.0 && c.increase_allowed()) {
      s = std::max(0.0, d[j] - lambda * c.up);
    } else if (d[j] < 0.0 && c.decrease_allowed()) {
      s = std::min(0.0, d[j] + lambda * c.down);
    }
    w[j] = std::clamp(x_bar[j] + s, lo[j], hi[j]);
  }
}

}  // namespace

VectorXd project(const CostModel& costs, const BudgetSpec& budget,
                 const Eigen::Ref<const VectorXd>& x_bar, const Eigen::Ref<const VectorXd>& z) {
  const auto n = z.size();
  if (x_bar.size() != n || static_cast<Eigen::Index>(costs.size()) != n) {
    throw ConfigError("project: cost model, anchor and point sizes differ");
  }
  const double inf = std::numeric_limits<double>::infinity();
  const VectorXd lower = budget.bounds.size() == 0 ? VectorXd::Constant(n, -inf)
                                                   : budget.bounds.lower;
  const VectorXd upper = budget.bounds.size() == 0 ? VectorXd::Constant(n, inf)
                                                   : budget.bounds.upper;
  if (lower.size() != n || upper.size() != n) throw ConfigError("project: bounds size mismatch");
  if (!(budget.budget >= 0.0)) throw ConfigError("project: budget must be non-negative");
  if (!z.allFinite()) throw SolverError("project: non-finite input point");

  // Effective box: a locked direction clamps at the anchor.
  VectorXd lo = lower, hi = upper;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (lower[j] > upper[j]) {
      throw ConfigError("project: lower bound exceeds upper bound at index " + std::to_string(j));
    }
    if (!(x_bar[j] >= lower[j] && x_bar[j] <= upper[j])) {
      throw ConfigError("project: anchor lies outside the bounds at index " + std::to_string(j));
    }
    const auto& c = costs[static_cast<std::size_t>(j)];
    if (!c.increase_allowed()) hi[j] = x_bar[j];
    if (!c.decrease_allowed()) lo[j] = x_bar[j];
  }

  VectorXd w(n);
  for (Eigen::Index j = 0; j < n; ++j) w[j] = std::clamp(z[j], lo[j], hi[j]);
  if (costs.cost(w - x_bar) <= budget.budget) return w;

  const VectorXd d = z - x_bar;
  double lambda_hi = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& c = costs[static_cast<std::size_t>(j)];
    if (d[j] > 0.0 && c.increase_allowed() && c.up > 0.0) {
      lambda_hi = std::max(lambda_hi, d[j] / c.up);
    } else if (d[j] < 0.0 && c.decrease_allowed() && c.down > 0.0) {
      lambda_hi = std::max(lambda_hi, -d[j] / c.down);
    }
  }
  // spent(lambda_hi) == 0 <= B; spent(0) > B. Keep spent(hi) <= B throughout.
  double lambda_lo = 0.0;
  VectorXd trial(n);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lambda_lo + lambda_hi);
    if (!(mid > lambda_lo && mid < lambda_hi)) break;
    shrink(costs, lo, hi, x_bar, d, mid, trial);
    if (costs.cost(trial - x_bar) <= budget.budget) {
      lambda_hi = mid;
    } else {
      lambda_lo = mid;
    }
  }
  shrink(costs, lo, hi, x_bar, d, lambda_hi, w);
  return w;
}

}  // namespace longic
