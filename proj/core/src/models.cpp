#include "longic/models.hpp"

#include "longic/error.hpp"
#include "longic/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace longic {

// ---------------------------------------------------------------------------
// Classifier / Regressor bases

void Classifier::check_dim(const VectorRef& x) const {
  if (x.size() != input_dim()) {
    throw DimensionError(std::string(kind()) + ": input has " + std::to_string(x.size()) +
                         " features, model expects " + std::to_string(input_dim()));
  }
}

double Classifier::predict_proba(const VectorRef& x) const {
  check_dim(x);
  const double p = proba_std(standardizer_.transform(x));
  return std::clamp(p, 0.0, 1.0);
}

Vector Classifier::predict_proba_rows(const Matrix& X) const {
  Vector out(X.rows());
  for (Eigen::Index r = 0; r < X.rows(); ++r) out[r] = predict_proba(X.row(r).transpose());
  return out;
}

Vector Classifier::grad_proba(const VectorRef& x) const {
  check_dim(x);
  if (!has_gradient()) {
    throw UnsupportedError(std::string(kind()) + " does not provide input gradients");
  }
  Vector g = grad_proba_std(standardizer_.transform(x));
  return (g.array() / standardizer_.scale().array()).matrix();
}

Vector Classifier::grad_proba_std(const VectorRef&) const {
  throw UnsupportedError(std::string(kind()) + " does not provide input gradients");
}

nlohmann::json Classifier::base_json() const {
  return {{"format_version", kModelFormatVersion},
          {"kind", std::string(kind())},
          {"task", "classification"},
          {"standardizer", standardizer_to_json(standardizer_)}};
}

void Regressor::check_dim(const VectorRef& x) const {
  if (x.size() != input_dim()) {
    throw DimensionError(std::string(kind()) + ": input has " + std::to_string(x.size()) +
                         " features, model expects " + std::to_string(input_dim()));
  }
}

double Regressor::predict(const VectorRef& x) const {
  check_dim(x);
  return predict_std(standardizer_.transform(x));
}

Vector Regressor::predict_rows(const Matrix& X) const {
  Vector out(X.rows());
  for (Eigen::Index r = 0; r < X.rows(); ++r) out[r] = predict(X.row(r).transpose());
  return out;
}

nlohmann::json Regressor::base_json() const {
  return {{"format_version", kModelFormatVersion},
          {"kind", std::string(kind())},
          {"task", "regression"},
          {"standardizer", standardizer_to_json(standardizer_)}};
}

// ---------------------------------------------------------------------------
// Constant models

ConstantClassifier::ConstantClassifier(Eigen::Index dim, double probability)
    : Classifier(Standardizer::identity(dim)), probability_(probability) {
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw ConfigError("constant classifier probability must lie in [0, 1]");
  }
}

Vector ConstantClassifier::grad_proba_std(const VectorRef& z) const {
  return Vector::Zero(z.size());
}

nlohmann::json ConstantClassifier::to_json() const {
  auto j = base_json();
  j["probability"] = probability_;
  return j;
}

ConstantRegressor::ConstantRegressor(Eigen::Index dim, double value)
    : Regressor(Standardizer::identity(dim)), value_(value) {}

nlohmann::json ConstantRegressor::to_json() const {
  auto j = base_json();
  j["value"] = value_;
  return j;
}

// ---------------------------------------------------------------------------
// Zoo dispatch

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Knn:
      return "knn";
    case ModelKind::Cart:
      return "cart";
    case ModelKind::Logistic:
      return "logistic";
    case ModelKind::Ridge:
      return "ridge";
    case ModelKind::LinearSvm:
      return "linear_svm";
    case ModelKind::RbfSvm:
      return "rbf_svm";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
  for (auto k : {ModelKind::Knn, ModelKind::Cart, ModelKind::Logistic, ModelKind::Ridge,
                 ModelKind::LinearSvm, ModelKind::RbfSvm}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("unknown model kind '" + std::string(text) + "'");
}

void check_binary_training_set(const Matrix& X, std::span<const int> y) {
  if (static_cast<Eigen::Index>(y.size()) != X.rows()) {
    throw DimensionError("training set: label count does not match row count");
  }
  if (X.rows() < 2) throw TrainingError("training set needs at least two rows");
  if (!X.allFinite()) throw TrainingError("training set contains non-finite values");
  bool pos = false, neg = false;
  for (int label : y) {
    if (label == 1) {
      pos = true;
    } else if (label == 0) {
      neg = true;
    } else {
      throw TrainingError("labels must be 0 or 1");
    }
  }
  if (!pos || !neg) throw TrainingError("single-class labels: both classes are required");
}

ClassifierPtr fit_classifier(ModelKind kind, const Matrix& X, std::span<const int> y,
                             const BaselineHyper& hyper, std::span<const FeatureKind> kinds) {
  switch (kind) {
    case ModelKind::RbfSvm: {
      auto options = hyper.svm;
      options.kernel = KernelKind::Rbf;
      return fit_svm(X, y, options, kinds);
    }
    case ModelKind::LinearSvm: {
      auto options = hyper.svm;
      options.kernel = KernelKind::Linear;
      return fit_svm(X, y, options, kinds);
    }
    case ModelKind::Logistic:
      return fit_logistic(X, y, hyper.logistic_l2, kinds);
    case ModelKind::Knn: {
      check_binary_training_set(X, y);
      if (hyper.k < 1) throw ConfigError("knn requires k >= 1");
      auto s = Standardizer::fit(X, kinds);
      Vector labels(X.rows());
      for (Eigen::Index r = 0; r < X.rows(); ++r) labels[r] = y[static_cast<std::size_t>(r)];
      return std::make_shared<KnnClassifier>(s, s.transform_rows(X), labels, hyper.k);
    }
    case ModelKind::Cart: {
      check_binary_training_set(X, y);
      if (hyper.cart.max_depth < 1) throw ConfigError("cart requires max_depth >= 1");
      auto s = Standardizer::fit(X, kinds);
      Vector labels(X.rows());
      for (Eigen::Index r = 0; r < X.rows(); ++r) labels[r] = y[static_cast<std::size_t>(r)];
      return std::make_shared<CartClassifier>(s, grow_tree(s.transform_rows(X), labels, true,
                                                           hyper.cart));
    }
    case ModelKind::Ridge:
      break;
  }
  throw ConfigError("ridge is a regressor, not a classifier");
}

RegressorPtr fit_regressor(ModelKind kind, const Matrix& X, std::span<const double> target,
                           const BaselineHyper& hyper, std::span<const FeatureKind> kinds) {
  if (static_cast<Eigen::Index>(target.size()) != X.rows()) {
    throw DimensionError("regression target size does not match row count");
  }
  if (X.rows() < 1) throw TrainingError("regression needs at least one row");
  if (!X.allFinite()) throw TrainingError("training set contains non-finite values");
  for (double t : target) {
    if (!std::isfinite(t)) throw TrainingError("regression target contains non-finite values");
  }
  switch (kind) {
    case ModelKind::Ridge:
      return fit_ridge(X, target, hyper.ridge_lambda, kinds);
    case ModelKind::RbfSvm: {
      auto options = hyper.svm;
      options.kernel = KernelKind::Rbf;
      return fit_svr(X, target, options, kinds);
    }
    case ModelKind::LinearSvm: {
      auto options = hyper.svm;
      options.kernel = KernelKind::Linear;
      return fit_svr(X, target, options, kinds);
    }
    case ModelKind::Knn: {
      if (hyper.k < 1) throw ConfigError("knn requires k >= 1");
      auto s = Standardizer::fit(X, kinds);
      Vector t = Eigen::Map<const Vector>(target.data(), static_cast<Eigen::Index>(target.size()));
      return std::make_shared<KnnRegressor>(s, s.transform_rows(X), t, hyper.k);
    }
    case ModelKind::Cart: {
      if (hyper.cart.max_depth < 1) throw ConfigError("cart requires max_depth >= 1");
      auto s = Standardizer::fit(X, kinds);
      Vector t = Eigen::Map<const Vector>(target.data(), static_cast<Eigen::Index>(target.size()));
      return std::make_shared<CartRegressor>(s, grow_tree(s.transform_rows(X), t, false,
                                                          hyper.cart));
    }
    case ModelKind::Logistic:
      break;
  }
  throw ConfigError("logistic is a classifier, not a regressor");
}

}  // namespace longic
