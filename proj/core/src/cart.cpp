#include "longic/error.hpp"
#include "longic/models.hpp"
#include "longic/model_io.hpp"

#include <algorithm>
#include <numeric>

namespace longic {

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

/// n * impurity of a node: Gini for 0/1 targets, sum of squared deviations otherwise.
double node_impurity(double n, double sum, double sumsq, bool classification) {
  if (n <= 0.0) return 0.0;
  if (classification) return 2.0 * sum * (n - sum) / n;
  return std::max(0.0, sumsq - sum * sum / n);
}

class Grower {
 public:
  Grower(const Matrix& Z, const Vector& target, bool classification, const CartOptions& options)
      : Z_(Z), t_(target), classification_(classification), options_(options) {}

  int grow(std::vector<Eigen::Index> rows, int depth) {
    double sum = 0.0, sumsq = 0.0;
    for (auto r : rows) {
      sum += t_[r];
      sumsq += t_[r] * t_[r];
    }
    const double n = static_cast<double>(rows.size());
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(TreeNode{-1, 0.0, -1, -1, sum / n});
    const double parent = node_impurity(n, sum, sumsq, classification_);
    if (depth >= options_.max_depth || parent <= 0.0 ||
        rows.size() < 2 * static_cast<std::size_t>(std::max(options_.min_leaf, 1))) {
      return id;
    }
    const auto split = best_split(rows, parent);
    if (split.feature < 0) return id;
    std::vector<Eigen::Index> left, right;
    for (auto r : rows) (Z_(r, split.feature) <= split.threshold ? left : right).push_back(r);
    nodes_[static_cast<std::size_t>(id)].feature = split.feature;
    nodes_[static_cast<std::size_t>(id)].threshold = split.threshold;
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  std::vector<TreeNode> take() { return std::move(nodes_); }

 private:
  Split best_split(const std::vector<Eigen::Index>& rows, double parent) const {
    Split best;
    best.impurity = parent;
    const auto min_leaf = static_cast<std::size_t>(std::max(options_.min_leaf, 1));
    std::vector<Eigen::Index> order(rows);
    double total = 0.0, totalsq = 0.0;
    for (auto r : rows) {
      total += t_[r];
      totalsq += t_[r] * t_[r];
    }
    const double n = static_cast<double>(rows.size());
    for (Eigen::Index f = 0; f < Z_.cols(); ++f) {
      std::stable_sort(order.begin(), order.end(),
                       [&](Eigen::Index a, Eigen::Index b) { return Z_(a, f) < Z_(b, f); });
      double ls = 0.0, lsq = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const double v = t_[order[k]];
        ls += v;
        lsq += v * v;
        const double a = Z_(order[k], f);
        const double b = Z_(order[k + 1], f);
        if (!(a < b)) continue;
        const std::size_t nl = k + 1;
        if (nl < min_leaf || order.size() - nl < min_leaf) continue;
        const double dl = static_cast<double>(nl);
        const double imp = node_impurity(dl, ls, lsq, classification_) +
                           node_impurity(n - dl, total - ls, totalsq - lsq, classification_);
        if (imp < best.impurity - 1e-12 * (1.0 + parent)) {
          best.feature = static_cast<int>(f);
          best.threshold = 0.5 * (a + b);
          best.impurity = imp;
        }
      }
    }
    return best;
  }

  const Matrix& Z_;
  const Vector& t_;
  bool classification_;
  CartOptions options_;
  std::vector<TreeNode> nodes_;
};

double descend(const std::vector<TreeNode>& nodes, const VectorRef& z) {
  int at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const auto& node = nodes[static_cast<std::size_t>(at)];
    at = z[node.feature] <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(at)].value;
}

nlohmann::json nodes_json(const std::vector<TreeNode>& nodes) {
  auto out = nlohmann::json::array();
  for (const auto& n : nodes) {
    out.push_back({{"feature", n.feature},
                   {"threshold", n.threshold},
                   {"left", n.left},
                   {"right", n.right},
                   {"value", n.value}});
  }
  return out;
}

void check_nodes(const std::vector<TreeNode>& nodes, Eigen::Index dim) {
  if (nodes.empty()) throw DimensionError("cart: empty tree");
  const int count = static_cast<int>(nodes.size());
  for (int i = 0; i < count; ++i) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.feature < 0) continue;
    if (n.feature >= dim || n.left <= i || n.right <= i || n.left >= count || n.right >= count) {
      throw DimensionError("cart: malformed tree node " + std::to_string(i));
    }
  }
}

}  // namespace

std::vector<TreeNode> grow_tree(const Matrix& Z, const Vector& target, bool classification,
                                const CartOptions& options) {
  if (Z.rows() != target.size() || Z.rows() == 0) {
    throw DimensionError("cart: target size does not match row count");
  }
  if (options.max_depth < 0) throw ConfigError("cart max_depth must be non-negative");
  Grower grower(Z, target, classification, options);
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(Z.rows()));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  grower.grow(std::move(rows), 0);
  return grower.take();
}

CartClassifier::CartClassifier(Standardizer standardizer, std::vector<TreeNode> nodes)
    : Classifier(std::move(standardizer)), nodes_(std::move(nodes)) {
  check_nodes(nodes_, input_dim());
}

double CartClassifier::proba_std(const VectorRef& z) const { return descend(nodes_, z); }

nlohmann::json CartClassifier::to_json() const {
  auto j = base_json();
  j["nodes"] = nodes_json(nodes_);
  return j;
}

CartRegressor::CartRegressor(Standardizer standardizer, std::vector<TreeNode> nodes)
    : Regressor(std::move(standardizer)), nodes_(std::move(nodes)) {
  check_nodes(nodes_, input_dim());
}

double CartRegressor::predict_std(const VectorRef& z) const { return descend(nodes_, z); }

nlohmann::json CartRegressor::to_json() const {
  auto j = base_json();
  j["nodes"] = nodes_json(nodes_);
  return j;
}

}  // namespace longic
