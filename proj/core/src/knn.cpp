#include "longic/error.hpp"
#include "longic/models.hpp"
#include "longic/model_io.hpp"

#include <algorithm>
#include <numeric>

namespace longic {

namespace {

nlohmann::json matrix_json(const Matrix& M) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

double mean_of(const Vector& values, const std::vector<Eigen::Index>& rows) {
  double sum = 0.0;
  for (auto r : rows) sum += values[r];
  return sum / static_cast<double>(rows.size());
}

}  // namespace

std::vector<Eigen::Index> nearest_rows(const Matrix& points, const VectorRef& query, int k) {
  if (k < 1) throw ConfigError("knn requires k >= 1");
  if (query.size() != points.cols()) throw DimensionError("knn: query dimension mismatch");
  const auto n = points.rows();
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    dist[static_cast<std::size_t>(r)] = (points.row(r).transpose() - query).squaredNorm();
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](Eigen::Index a, Eigen::Index b) {
                      const double da = dist[static_cast<std::size_t>(a)];
                      const double db = dist[static_cast<std::size_t>(b)];
                      return da < db || (da == db && a < b);
                    });
  order.resize(take);
  return order;
}

KnnClassifier::KnnClassifier(Standardizer standardizer, Matrix points, Vector labels, int k)
    : Classifier(std::move(standardizer)), points_(std::move(points)), labels_(std::move(labels)),
      k_(k) {
  if (k_ < 1) throw ConfigError("knn requires k >= 1");
  if (points_.rows() != labels_.size() || points_.rows() == 0) {
    throw DimensionError("knn: points/labels size mismatch");
  }
}

double KnnClassifier::proba_std(const VectorRef& z) const {
  return mean_of(labels_, nearest_rows(points_, z, k_));
}

nlohmann::json KnnClassifier::to_json() const {
  auto j = base_json();
  j["k"] = k_;
  j["points"] = matrix_json(points_);
  j["labels"] = std::vector<double>(labels_.data(), labels_.data() + labels_.size());
  return j;
}

KnnRegressor::KnnRegressor(Standardizer standardizer, Matrix points, Vector targets, int k)
    : Regressor(std::move(standardizer)), points_(std::move(points)), targets_(std::move(targets)),
      k_(k) {
  if (k_ < 1) throw ConfigError("knn requires k >= 1");
  if (points_.rows() != targets_.size() || points_.rows() == 0) {
    throw DimensionError("knn: points/targets size mismatch");
  }
}

double KnnRegressor::predict_std(const VectorRef& z) const {
  return mean_of(targets_, nearest_rows(points_, z, k_));
}

nlohmann::json KnnRegressor::to_json() const {
  auto j = base_json();
  j["k"] = k_;
  j["points"] = matrix_json(points_);
  j["targets"] = std::vector<double>(targets_.data(), targets_.data() + targets_.size());
  return j;
}

}  // namespace longic
