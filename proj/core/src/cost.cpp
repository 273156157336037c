#include "longic/cost.hpp"

#include "longic/error.hpp"

#include <cmath>
#include <string>

namespace longic {

CostModel::CostModel(std::vector<DirectionalCost> costs) : costs_(std::move(costs)) {}

double CostModel::cost(const Eigen::Ref<const Eigen::VectorXd>& delta) const {
  if (static_cast<std::size_t>(delta.size()) != costs_.size()) {
    throw DimensionError("cost: delta has " + std::to_string(delta.size()) + " entries, expected " +
                         std::to_string(costs_.size()));
  }
  double total = 0.0;
  for (std::size_t j = 0; j < costs_.size(); ++j) {
    const double z = delta[static_cast<Eigen::Index>(j)];
    if (z > 0.0) {
      total += costs_[j].up * z;
    } else if (z < 0.0) {
      total += costs_[j].down * -z;
    }
  }
  return total;
}

Eigen::VectorXd CostModel::contributions(const Eigen::Ref<const Eigen::VectorXd>& delta) const {
  if (static_cast<std::size_t>(delta.size()) != costs_.size()) {
    throw DimensionError("cost: delta size mismatch");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(delta.size());
  for (std::size_t j = 0; j < costs_.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    if (delta[i] > 0.0) out[i] = costs_[j].up * delta[i];
    if (delta[i] < 0.0) out[i] = costs_[j].down * -delta[i];
  }
  return out;
}

void CostModel::validate() const {
  for (std::size_t j = 0; j < costs_.size(); ++j) {
    const auto& c = costs_[j];
    if (std::isnan(c.up) || std::isnan(c.down) || c.up < 0.0 || c.down < 0.0) {
      throw ConfigError("cost model: feature " + std::to_string(j) +
                        " has a negative or NaN cost");
    }
  }
}

Bounds Bounds::unbounded(Eigen::Index n) {
  const double inf = std::numeric_limits<double>::infinity();
  return {Eigen::VectorXd::Constant(n, -inf), Eigen::VectorXd::Constant(n, inf)};
}

bool Bounds::contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != lower.size() || x.size() != upper.size()) return false;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (!(x[j] >= lower[j] && x[j] <= upper[j])) return false;
  }
  return true;
}

}  // namespace longic
