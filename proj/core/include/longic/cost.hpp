#pragma once

#include <Eigen/Core>

#include <limits>
#include <span>
#include <vector>

namespace longic {

/// Cost sentinel for a forbidden direction of change.
inline constexpr double kLockedCost = std::numeric_limits<double>::infinity();

struct DirectionalCost {
  double up = 1.0;    ///< c+ : cost per unit increase
  double down = 1.0;  ///< c- : cost per unit decrease

  bool increase_allowed() const { return up != kLockedCost; }
  bool decrease_allowed() const { return down != kLockedCost; }
};

/// Asymmetric weighted l1 cost over the directly changeable features:
///   C(z) = sum_j c+_j (z_j)_+ + c-_j (z_j)_-
class CostModel {
 public:
  CostModel() = default;
  explicit CostModel(std::vector<DirectionalCost> costs);

  std::size_t size() const { return costs_.size(); }
  const DirectionalCost& operator[](std::size_t j) const { return costs_[j]; }
  DirectionalCost& operator[](std::size_t j) { return costs_[j]; }
  const std::vector<DirectionalCost>& costs() const { return costs_; }

  /// Total cost of a delta vector. Infinite if a locked direction is used.
  double cost(const Eigen::Ref<const Eigen::VectorXd>& delta) const;
  /// Per-feature contributions to cost(delta).
  Eigen::VectorXd contributions(const Eigen::Ref<const Eigen::VectorXd>& delta) const;

  /// Throws ConfigError on negative or NaN costs. Both directions may be locked.
  void validate() const;

 private:
  std::vector<DirectionalCost> costs_;
};

/// Box bounds l <= x <= u, one entry per directly changeable feature.
struct Bounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index size() const { return lower.size(); }
  static Bounds unbounded(Eigen::Index n);
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// Budget B together with the feasible box.
struct BudgetSpec {
  double budget = 0.0;
  Bounds bounds;
};

}  // namespace longic
