#pragma once

#include "longic/cohort.hpp"
#include "longic/kernel.hpp"
#include "longic/smo.hpp"
#include "longic/standardizer.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace longic {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

/// A trained binary classifier producing P(y = 1 | x). Inputs are raw feature
/// vectors; standardization happens inside the model.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::string_view kind() const = 0;
  Eigen::Index input_dim() const { return standardizer_.dim(); }
  const Standardizer& standardizer() const { return standardizer_; }

  /// In [0, 1]. Throws DimensionError on a size mismatch.
  double predict_proba(const VectorRef& x) const;
  Vector predict_proba_rows(const Matrix& X) const;

  virtual bool has_gradient() const { return false; }
  /// d predict_proba / d x (raw units). Throws UnsupportedError by default.
  Vector grad_proba(const VectorRef& x) const;

  virtual nlohmann::json to_json() const = 0;

 protected:
  explicit Classifier(Standardizer standardizer) : standardizer_(std::move(standardizer)) {}

  virtual double proba_std(const VectorRef& z) const = 0;
  /// Gradient with respect to the standardized input.
  virtual Vector grad_proba_std(const VectorRef& z) const;
  void check_dim(const VectorRef& x) const;
  nlohmann::json base_json() const;

  Standardizer standardizer_;
};

/// A trained regressor for continuous targets.
class Regressor {
 public:
  virtual ~Regressor() = default;

  virtual std::string_view kind() const = 0;
  Eigen::Index input_dim() const { return standardizer_.dim(); }
  const Standardizer& standardizer() const { return standardizer_; }

  double predict(const VectorRef& x) const;
  Vector predict_rows(const Matrix& X) const;

  virtual nlohmann::json to_json() const = 0;

 protected:
  explicit Regressor(Standardizer standardizer) : standardizer_(std::move(standardizer)) {}

  virtual double predict_std(const VectorRef& z) const = 0;
  void check_dim(const VectorRef& x) const;
  nlohmann::json base_json() const;

  Standardizer standardizer_;
};

using ClassifierPtr = std::shared_ptr<const Classifier>;
using RegressorPtr = std::shared_ptr<const Regressor>;

// ---------------------------------------------------------------------------
// Support vector machines

/// P = sigmoid(a * f + b), a > 0 so the map is strictly increasing in f.
struct PlattParams {
  double a = 1.0;
  double b = 0.0;

  double operator()(double decision) const;
};

/// Newton fit on decision values with smoothed targets (N+ + 1)/(N+ + 2) and
/// 1/(N- + 2). The slope is floored at a small positive value.
PlattParams fit_platt(std::span<const double> decision, std::span<const int> labels);

struct SvmOptions {
  KernelKind kernel = KernelKind::Rbf;
  double C = 1.0;
  std::optional<double> gamma;   ///< unset: median heuristic
  double positive_weight = 1.0;  ///< C+ = C * positive_weight (classification)
  double epsilon = 0.1;          ///< tube width for regression, standardized target units
  int platt_folds = 3;
  std::uint64_t seed = 0;
  SmoSettings smo;
};

/// Raw dual solution of a C-SVC on already standardized inputs.
struct SvcSolution {
  Vector alpha;           ///< 0 <= alpha_i <= C_i
  Eigen::VectorXi signs;  ///< +1 / -1 labels
  Vector upper;           ///< C_i
  double rho = 0.0;
  long iterations = 0;
};

SvcSolution solve_svc(const Matrix& Z, std::span<const int> labels, const Kernel& kernel,
                      const SvmOptions& options);

class SvmClassifier final : public Classifier {
 public:
  SvmClassifier(Standardizer standardizer, Kernel kernel, Matrix support, Vector coef, double rho,
                PlattParams platt);

  std::string_view kind() const override;
  bool has_gradient() const override { return true; }

  const Kernel& kernel() const { return kernel_; }
  const Matrix& support_vectors() const { return support_; }
  const Vector& dual_coef() const { return coef_; }
  double rho() const { return rho_; }
  const PlattParams& platt() const { return platt_; }

  double decision(const VectorRef& x) const;
  double decision_std(const VectorRef& z) const;
  Vector grad_decision_std(const VectorRef& z) const;

  nlohmann::json to_json() const override;

 protected:
  double proba_std(const VectorRef& z) const override;
  Vector grad_proba_std(const VectorRef& z) const override;

 private:
  Kernel kernel_;
  Matrix support_;  ///< standardized support vectors, one per row
  Vector coef_;     ///< alpha_i * y_i
  double rho_;
  PlattParams platt_;
  Vector linear_w_;  ///< collapsed weights for the linear kernel
};

/// Soft-margin SVM trained by SMO, then Platt-scaled on k-fold
/// cross-validated decision values. Throws TrainingError on single-class
/// labels, non-finite inputs or an SMO iteration cap hit.
std::shared_ptr<const SvmClassifier> fit_svm(const Matrix& X, std::span<const int> y,
                                             const SvmOptions& options = {},
                                             std::span<const FeatureKind> kinds = {});

/// epsilon-SVR on a standardized target.
class SvmRegressor final : public Regressor {
 public:
  SvmRegressor(Standardizer standardizer, Kernel kernel, Matrix support, Vector coef, double rho,
               double target_mean, double target_scale);

  std::string_view kind() const override;
  nlohmann::json to_json() const override;

 protected:
  double predict_std(const VectorRef& z) const override;

 private:
  Kernel kernel_;
  Matrix support_;
  Vector coef_;
  double rho_;
  double target_mean_;
  double target_scale_;
};

std::shared_ptr<const SvmRegressor> fit_svr(const Matrix& X, std::span<const double> target,
                                            const SvmOptions& options = {},
                                            std::span<const FeatureKind> kinds = {});

// ---------------------------------------------------------------------------
// Linear models

class LogisticClassifier final : public Classifier {
 public:
  LogisticClassifier(Standardizer standardizer, Vector weights, double bias);

  std::string_view kind() const override { return "logistic"; }
  bool has_gradient() const override { return true; }
  const Vector& weights() const { return weights_; }
  double bias() const { return bias_; }
  nlohmann::json to_json() const override;

 protected:
  double proba_std(const VectorRef& z) const override;
  Vector grad_proba_std(const VectorRef& z) const override;

 private:
  Vector weights_;
  double bias_;
};

/// L2-regularized logistic regression fit by Newton iterations.
std::shared_ptr<const LogisticClassifier> fit_logistic(const Matrix& X, std::span<const int> y,
                                                       double l2 = 1e-3,
                                                       std::span<const FeatureKind> kinds = {});

class RidgeRegressor final : public Regressor {
 public:
  RidgeRegressor(Standardizer standardizer, Vector weights, double intercept);

  std::string_view kind() const override { return "ridge"; }
  const Vector& weights() const { return weights_; }
  double intercept() const { return intercept_; }
  /// Coefficients with respect to raw (unstandardized) inputs.
  Vector raw_coefficients() const;
  nlohmann::json to_json() const override;

 protected:
  double predict_std(const VectorRef& z) const override;

 private:
  Vector weights_;
  double intercept_;
};

/// Closed-form ridge with an unpenalized intercept. `lambda` must be positive.
std::shared_ptr<const RidgeRegressor> fit_ridge(const Matrix& X, std::span<const double> target,
                                                double lambda = 1.0,
                                                std::span<const FeatureKind> kinds = {});

// ---------------------------------------------------------------------------
// Nearest neighbours and trees

class KnnClassifier final : public Classifier {
 public:
  KnnClassifier(Standardizer standardizer, Matrix points, Vector labels, int k);
  std::string_view kind() const override { return "knn"; }
  nlohmann::json to_json() const override;

 protected:
  double proba_std(const VectorRef& z) const override;

 private:
  Matrix points_;
  Vector labels_;
  int k_;
};

class KnnRegressor final : public Regressor {
 public:
  KnnRegressor(Standardizer standardizer, Matrix points, Vector targets, int k);
  std::string_view kind() const override { return "knn"; }
  nlohmann::json to_json() const override;

 protected:
  double predict_std(const VectorRef& z) const override;

 private:
  Matrix points_;
  Vector targets_;
  int k_;
};

/// Indices of the k nearest rows of `points` to `query`, Euclidean, ties by row order.
std::vector<Eigen::Index> nearest_rows(const Matrix& points, const VectorRef& query, int k);

struct TreeNode {
  int feature = -1;  ///< -1 for a leaf
  double threshold = 0.0;
  int left = -1;   ///< x[feature] <= threshold
  int right = -1;  ///< x[feature] > threshold
  double value = 0.0;
};

struct CartOptions {
  int max_depth = 6;
  int min_leaf = 5;
};

class CartClassifier final : public Classifier {
 public:
  CartClassifier(Standardizer standardizer, std::vector<TreeNode> nodes);
  std::string_view kind() const override { return "cart"; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  nlohmann::json to_json() const override;

 protected:
  double proba_std(const VectorRef& z) const override;

 private:
  std::vector<TreeNode> nodes_;
};

class CartRegressor final : public Regressor {
 public:
  CartRegressor(Standardizer standardizer, std::vector<TreeNode> nodes);
  std::string_view kind() const override { return "cart"; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  nlohmann::json to_json() const override;

 protected:
  double predict_std(const VectorRef& z) const override;

 private:
  std::vector<TreeNode> nodes_;
};

/// Thresholds are in standardized units; with an identity standardizer
/// (all-binary kinds or pre-scaled data) they are raw thresholds.
std::vector<TreeNode> grow_tree(const Matrix& Z, const Vector& target, bool classification,
                                const CartOptions& options);

// ---------------------------------------------------------------------------
// Constant models (degenerate estimators, test fixtures)

class ConstantClassifier final : public Classifier {
 public:
  ConstantClassifier(Eigen::Index dim, double probability);
  std::string_view kind() const override { return "constant"; }
  bool has_gradient() const override { return true; }
  double probability() const { return probability_; }
  nlohmann::json to_json() const override;

 protected:
  double proba_std(const VectorRef&) const override { return probability_; }
  Vector grad_proba_std(const VectorRef& z) const override;

 private:
  double probability_;
};

class ConstantRegressor final : public Regressor {
 public:
  ConstantRegressor(Eigen::Index dim, double value);
  std::string_view kind() const override { return "constant"; }
  double value() const { return value_; }
  nlohmann::json to_json() const override;

 protected:
  double predict_std(const VectorRef&) const override { return value_; }

 private:
  double value_;
};

// ---------------------------------------------------------------------------
// Baseline zoo

enum class ModelKind { Knn, Cart, Logistic, Ridge, LinearSvm, RbfSvm };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct BaselineHyper {
  int k = 5;
  CartOptions cart;
  double ridge_lambda = 1.0;
  double logistic_l2 = 1e-3;
  SvmOptions svm;
};

/// Classifier of the requested kind. Ridge is not a classifier (ConfigError).
ClassifierPtr fit_classifier(ModelKind kind, const Matrix& X, std::span<const int> y,
                             const BaselineHyper& hyper = {},
                             std::span<const FeatureKind> kinds = {});
/// Regressor of the requested kind. Logistic is not a regressor (ConfigError).
RegressorPtr fit_regressor(ModelKind kind, const Matrix& X, std::span<const double> target,
                           const BaselineHyper& hyper = {},
                           std::span<const FeatureKind> kinds = {});

/// Throws TrainingError unless both classes are present and inputs are finite.
void check_binary_training_set(const Matrix& X, std::span<const int> y);

}  // namespace longic
