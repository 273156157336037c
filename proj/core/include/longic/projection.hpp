#pragma once

#include "longic/cost.hpp"

#include <Eigen/Core>

namespace longic {

/// Euclidean projection of `z` onto
///   { w : C(w - x_bar) <= B,  l <= w <= u }.
/// The box is clipped first; if the budget still binds, the per-direction
/// soft-threshold w(lambda) is bisected on lambda until the spend reaches B.
/// Locked directions act as a hard clamp at x_bar. Among equal-cost
/// multipliers the smallest is returned.
///
/// Throws ConfigError on l > u, a negative budget or size mismatches.
Eigen::VectorXd project(const CostModel& costs, const BudgetSpec& budget,
                        const Eigen::Ref<const Eigen::VectorXd>& x_bar,
                        const Eigen::Ref<const Eigen::VectorXd>& z);

}  // namespace longic
