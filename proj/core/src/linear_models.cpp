#include "longic/error.hpp"
#include "longic/models.hpp"
#include "longic/model_io.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace longic {

namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

LogisticClassifier::LogisticClassifier(Standardizer standardizer, Vector weights, double bias)
    : Classifier(std::move(standardizer)), weights_(std::move(weights)), bias_(bias) {
  if (weights_.size() != input_dim()) throw DimensionError("logistic: weight size mismatch");
}

double LogisticClassifier::proba_std(const VectorRef& z) const {
  return sigmoid(weights_.dot(z) + bias_);
}

Vector LogisticClassifier::grad_proba_std(const VectorRef& z) const {
  const double p = proba_std(z);
  return (p * (1.0 - p)) * weights_;
}

nlohmann::json LogisticClassifier::to_json() const {
  auto j = base_json();
  j["weights"] = to_std(weights_);
  j["bias"] = bias_;
  return j;
}

std::shared_ptr<const LogisticClassifier> fit_logistic(const Matrix& X, std::span<const int> y,
                                                       double l2,
                                                       std::span<const FeatureKind> kinds) {
  check_binary_training_set(X, y);
  if (!(l2 > 0.0)) throw ConfigError("logistic l2 penalty must be positive");
  auto scaling = Standardizer::fit(X, kinds);
  const Matrix Z = scaling.transform_rows(X);
  const auto n = Z.rows();
  const auto d = Z.cols();
  // Augmented design [Z 1]; the intercept is not penalized.
  Matrix A(n, d + 1);
  A.leftCols(d) = Z;
  A.col(d).setOnes();
  Vector t(n);
  for (Eigen::Index i = 0; i < n; ++i) t[i] = y[static_cast<std::size_t>(i)];
  Vector penalty = Vector::Constant(d + 1, l2 * static_cast<double>(n));
  penalty[d] = 0.0;

  Vector beta = Vector::Zero(d + 1);
  auto loss = [&](const Vector& b) {
    const Vector eta = A * b;
    double f = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = eta[i];
      f += (e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e))) - t[i] * e;
    }
    return f + 0.5 * (penalty.array() * b.array().square()).sum();
  };
  double f = loss(beta);
  for (int it = 0; it < 100; ++it) {
    const Vector eta = A * beta;
    Vector p(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p[i] = sigmoid(eta[i]);
      w[i] = std::max(p[i] * (1.0 - p[i]), 1e-12);
    }
    const Vector grad = A.transpose() * (p - t) + (penalty.array() * beta.array()).matrix();
    Matrix H = A.transpose() * w.asDiagonal() * A;
    H.diagonal() += penalty;
    H.diagonal().array() += 1e-10;
    const Vector step = H.ldlt().solve(grad);
    double s = 1.0;
    bool moved = false;
    while (s > 1e-10) {
      const Vector trial = beta - s * step;
      const double ft = loss(trial);
      if (ft <= f - 1e-4 * s * grad.dot(step)) {
        beta = trial;
        moved = f - ft > 1e-12 * (1.0 + std::abs(f));
        f = ft;
        break;
      }
      s *= 0.5;
    }
    if (!moved || grad.lpNorm<Eigen::Infinity>() < 1e-9) break;
  }
  if (!beta.allFinite()) throw TrainingError("logistic regression diverged");
  return std::make_shared<LogisticClassifier>(std::move(scaling), beta.head(d), beta[d]);
}

RidgeRegressor::RidgeRegressor(Standardizer standardizer, Vector weights, double intercept)
    : Regressor(std::move(standardizer)), weights_(std::move(weights)), intercept_(intercept) {
  if (weights_.size() != input_dim()) throw DimensionError("ridge: weight size mismatch");
}

double RidgeRegressor::predict_std(const VectorRef& z) const { return weights_.dot(z) + intercept_; }

Vector RidgeRegressor::raw_coefficients() const {
  return (weights_.array() / standardizer_.scale().array()).matrix();
}

nlohmann::json RidgeRegressor::to_json() const {
  auto j = base_json();
  j["weights"] = to_std(weights_);
  j["intercept"] = intercept_;
  return j;
}

std::shared_ptr<const RidgeRegressor> fit_ridge(const Matrix& X, std::span<const double> target,
                                                double lambda,
                                                std::span<const FeatureKind> kinds) {
  if (static_cast<Eigen::Index>(target.size()) != X.rows()) {
    throw DimensionError("ridge: target size does not match row count");
  }
  if (!(lambda > 0.0)) throw ConfigError("ridge lambda must be positive");
  if (X.rows() < 1) throw TrainingError("ridge needs at least one row");
  auto scaling = Standardizer::fit(X, kinds);
  const Matrix Z = scaling.transform_rows(X);
  const Vector t = Eigen::Map<const Vector>(target.data(), X.rows());
  // Centering removes the intercept from the penalized system.
  const Vector zbar = Z.colwise().mean();
  const double tbar = t.mean();
  const Matrix Zc = Z.rowwise() - zbar.transpose();
  Matrix G = Zc.transpose() * Zc;
  G.diagonal().array() += lambda;
  const Vector w = G.ldlt().solve(Zc.transpose() * (t.array() - tbar).matrix());
  if (!w.allFinite()) throw TrainingError("ridge solve produced non-finite weights");
  return std::make_shared<RidgeRegressor>(std::move(scaling), w, tbar - zbar.dot(w));
}

}  // namespace longic
