#include "longic/error.hpp"
#include "longic/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace longic {

namespace {

constexpr Eigen::Index kPrecomputeLimit = 4096;

/// Gram matrix of the training rows, precomputed when it fits.
class Gram {
 public:
  Gram(const Matrix& Z, const Kernel& kernel) : Z_(Z), kernel_(kernel) {
    if (Z.rows() <= kPrecomputeLimit) {
      K_ = Z * Z.transpose();
      if (kernel.kind == KernelKind::Rbf) {
        const Vector sq = Z.rowwise().squaredNorm();
        for (Eigen::Index j = 0; j < K_.cols(); ++j) {
          for (Eigen::Index i = 0; i < K_.rows(); ++i) {
            const double d2 = std::max(0.0, sq[i] + sq[j] - 2.0 * K_(i, j));
            K_(i, j) = std::exp(-kernel.gamma * d2);
          }
        }
      }
      precomputed_ = true;
    }
  }

  Eigen::Index size() const { return Z_.rows(); }

  void column(Eigen::Index i, Eigen::Ref<Vector> out) const {
    if (precomputed_) {
      out = K_.col(i);
      return;
    }
    for (Eigen::Index t = 0; t < Z_.rows(); ++t) {
      out[t] = kernel_(Z_.row(t).transpose(), Z_.row(i).transpose());
    }
  }

  double diagonal(Eigen::Index i) const {
    return precomputed_ ? K_(i, i) : kernel_(Z_.row(i).transpose(), Z_.row(i).transpose());
  }

 private:
  const Matrix& Z_;
  Kernel kernel_;
  Matrix K_;
  bool precomputed_ = false;
};

class SvcQ final : public QMatrix {
 public:
  SvcQ(const Gram& gram, const Eigen::VectorXi& y) : gram_(gram), y_(y.cast<double>()) {}
  Eigen::Index size() const override { return gram_.size(); }
  void column(Eigen::Index i, Eigen::Ref<Vector> out) const override {
    gram_.column(i, out);
    out.array() *= y_.array() * y_[i];
  }
  double diagonal(Eigen::Index i) const override { return gram_.diagonal(i); }

 private:
  const Gram& gram_;
  Vector y_;
};

/// 2n-variable dual of epsilon-SVR: alpha (y = +1) then alpha* (y = -1).
class SvrQ final : public QMatrix {
 public:
  explicit SvrQ(const Gram& gram) : gram_(gram), buffer_(gram.size()) {}
  Eigen::Index size() const override { return 2 * gram_.size(); }
  void column(Eigen::Index i, Eigen::Ref<Vector> out) const override {
    const auto n = gram_.size();
    const double si = i < n ? 1.0 : -1.0;
    gram_.column(i % n, buffer_);
    out.head(n) = si * buffer_;
    out.tail(n) = -si * buffer_;
  }
  double diagonal(Eigen::Index i) const override { return gram_.diagonal(i % gram_.size()); }

 private:
  const Gram& gram_;
  mutable Vector buffer_;
};

Kernel make_kernel(const Matrix& Z, const SvmOptions& options) {
  Kernel kernel;
  kernel.kind = options.kernel;
  if (options.kernel == KernelKind::Rbf) {
    if (options.gamma) {
      if (!(*options.gamma > 0.0)) throw ConfigError("svm gamma must be positive");
      kernel.gamma = *options.gamma;
    } else {
      kernel.gamma = median_heuristic_gamma(Z, options.seed);
    }
  }
  return kernel;
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double evaluate_expansion(const Kernel& kernel, const Matrix& support, const Vector& coef,
                          const Vector& linear_w, double rho, const VectorRef& z) {
  if (kernel.kind == KernelKind::Linear) return linear_w.dot(z) - rho;
  if (support.rows() == 0) return -rho;
  const Vector k = (-kernel.gamma * (support.rowwise() - z.transpose()).rowwise().squaredNorm())
                       .array()
                       .exp()
                       .matrix();
  return coef.dot(k) - rho;
}

nlohmann::json matrix_json(const Matrix& M) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

/// Decision values for rows of Z from an SVC trained on (Z_train, labels).
struct TrainedSvc {
  Kernel kernel;
  Matrix support;
  Vector coef;
  double rho = 0.0;
  Vector linear_w;
};

TrainedSvc train_svc(const Matrix& Z, std::span<const int> labels, const Kernel& kernel,
                     const SvmOptions& options) {
  const auto sol = solve_svc(Z, labels, kernel, options);
  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < sol.alpha.size(); ++i) {
    if (sol.alpha[i] > 0.0) sv.push_back(i);
  }
  TrainedSvc out;
  out.kernel = kernel;
  out.support.resize(static_cast<Eigen::Index>(sv.size()), Z.cols());
  out.coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    const auto i = sv[k];
    out.support.row(static_cast<Eigen::Index>(k)) = Z.row(i);
    out.coef[static_cast<Eigen::Index>(k)] = sol.alpha[i] * sol.signs[i];
  }
  out.rho = sol.rho;
  out.linear_w = out.support.transpose() * out.coef;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Platt scaling

double PlattParams::operator()(double decision) const { return sigmoid(a * decision + b); }

PlattParams fit_platt(std::span<const double> decision, std::span<const int> labels) {
  if (decision.size() != labels.size() || decision.empty()) {
    throw DimensionError("fit_platt: decision/label size mismatch");
  }
  // Newton's method with backtracking on the regularized cross-entropy, in the
  // P = 1 / (1 + exp(A f + B)) parameterization; the result is a = -A, b = -B.
  double prior1 = 0.0, prior0 = 0.0;
  for (int y : labels) (y == 1 ? prior1 : prior0) += 1.0;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo = 1.0 / (prior0 + 2.0);
  const std::size_t n = decision.size();
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = labels[i] == 1 ? hi : lo;

  double A = 0.0;
  double B = std::log((prior0 + 1.0) / (prior1 + 1.0));
  auto objective = [&](double a, double b) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double fApB = decision[i] * a + b;
      if (fApB >= 0.0) {
        f += t[i] * fApB + std::log1p(std::exp(-fApB));
      } else {
        f += (t[i] - 1.0) * fApB + std::log1p(std::exp(fApB));
      }
    }
    return f;
  };
  double fval = objective(A, B);
  constexpr double kSigma = 1e-12;
  for (int it = 0; it < 100; ++it) {
    double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double fApB = decision[i] * A + B;
      double p, q;
      if (fApB >= 0.0) {
        const double e = std::exp(-fApB);
        p = e / (1.0 + e);
        q = 1.0 / (1.0 + e);
      } else {
        const double e = std::exp(fApB);
        p = 1.0 / (1.0 + e);
        q = e / (1.0 + e);
      }
      const double d2 = p * q;
      h11 += decision[i] * decision[i] * d2;
      h22 += d2;
      h21 += decision[i] * d2;
      const double d1 = t[i] - p;
      g1 += decision[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
    const double det = h11 * h22 - h21 * h21;
    const double dA = -(h22 * g1 - h21 * g2) / det;
    const double dB = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * dA + g2 * dB;
    double step = 1.0;
    while (step >= 1e-10) {
      const double nA = A + step * dA;
      const double nB = B + step * dB;
      const double nf = objective(nA, nB);
      if (nf < fval + 1e-4 * step * gd) {
        A = nA;
        B = nB;
        fval = nf;
        break;
      }
      step *= 0.5;
    }
    if (step < 1e-10) break;
  }
  PlattParams params;
  params.a = std::max(-A, 1e-6);
  params.b = -B;
  return params;
}

// ---------------------------------------------------------------------------
// C-SVC

SvcSolution solve_svc(const Matrix& Z, std::span<const int> labels, const Kernel& kernel,
                      const SvmOptions& options) {
  if (!(options.C > 0.0)) throw ConfigError("svm C must be positive");
  if (!(options.positive_weight > 0.0)) throw ConfigError("svm positive_weight must be positive");
  const auto n = Z.rows();
  SvcSolution sol;
  sol.signs.resize(n);
  sol.upper.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool pos = labels[static_cast<std::size_t>(i)] == 1;
    sol.signs[i] = pos ? 1 : -1;
    sol.upper[i] = pos ? options.C * options.positive_weight : options.C;
  }
  Gram gram(Z, kernel);
  SvcQ Q(gram, sol.signs);
  const auto result = solve_smo(Q, Vector::Constant(n, -1.0), sol.signs, sol.upper, options.smo);
  sol.alpha = result.alpha;
  sol.rho = result.rho;
  sol.iterations = result.iterations;
  return sol;
}

SvmClassifier::SvmClassifier(Standardizer standardizer, Kernel kernel, Matrix support, Vector coef,
                             double rho, PlattParams platt)
    : Classifier(std::move(standardizer)),
      kernel_(kernel),
      support_(std::move(support)),
      coef_(std::move(coef)),
      rho_(rho),
      platt_(platt) {
  if (support_.rows() != coef_.size()) throw DimensionError("svm: support/coef size mismatch");
  if (support_.rows() > 0 && support_.cols() != input_dim()) {
    throw DimensionError("svm: support vector dimension mismatch");
  }
  linear_w_ = support_.rows() > 0 ? Vector(support_.transpose() * coef_) : Vector::Zero(input_dim());
}

std::string_view SvmClassifier::kind() const {
  return kernel_.kind == KernelKind::Rbf ? "rbf_svm" : "linear_svm";
}

double SvmClassifier::decision_std(const VectorRef& z) const {
  return evaluate_expansion(kernel_, support_, coef_, linear_w_, rho_, z);
}

double SvmClassifier::decision(const VectorRef& x) const {
  check_dim(x);
  return decision_std(standardizer_.transform(x));
}

Vector SvmClassifier::grad_decision_std(const VectorRef& z) const {
  if (kernel_.kind == KernelKind::Linear) return linear_w_;
  if (support_.rows() == 0) return Vector::Zero(z.size());
  // sum_i c_i k_i (-2 gamma)(z - s_i)
  const Vector ck = coef_.cwiseProduct(
      (-kernel_.gamma * (support_.rowwise() - z.transpose()).rowwise().squaredNorm())
          .array()
          .exp()
          .matrix());
  return (-2.0 * kernel_.gamma) * (ck.sum() * z - support_.transpose() * ck);
}

double SvmClassifier::proba_std(const VectorRef& z) const { return platt_(decision_std(z)); }

Vector SvmClassifier::grad_proba_std(const VectorRef& z) const {
  const double p = platt_(decision_std(z));
  return (platt_.a * p * (1.0 - p)) * grad_decision_std(z);
}

nlohmann::json SvmClassifier::to_json() const {
  auto j = base_json();
  j["kernel"] = {{"type", std::string(to_string(kernel_.kind))}, {"gamma", kernel_.gamma}};
  j["support"] = matrix_json(support_);
  j["coef"] = to_std(coef_);
  j["rho"] = rho_;
  j["platt"] = {{"a", platt_.a}, {"b", platt_.b}};
  return j;
}

std::shared_ptr<const SvmClassifier> fit_svm(const Matrix& X, std::span<const int> y,
                                             const SvmOptions& options,
                                             std::span<const FeatureKind> kinds) {
  check_binary_training_set(X, y);
  auto scaling = Standardizer::fit(X, kinds);
  const Matrix Z = scaling.transform_rows(X);
  const Kernel kernel = make_kernel(Z, options);
  const auto n = Z.rows();

  // Cross-validated decision values for Platt scaling; folds stratified by class.
  const int folds = std::max(2, options.platt_folds);
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  {
    std::vector<Eigen::Index> pos, neg;
    for (Eigen::Index i = 0; i < n; ++i) (y[static_cast<std::size_t>(i)] == 1 ? pos : neg).push_back(i);
    std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);
    int next = 0;
    for (auto i : pos) fold_of[static_cast<std::size_t>(i)] = next++ % folds;
    for (auto i : neg) fold_of[static_cast<std::size_t>(i)] = next++ % folds;
  }
  std::vector<double> cv_decision(static_cast<std::size_t>(n), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, held;
    for (Eigen::Index i = 0; i < n; ++i) {
      (fold_of[static_cast<std::size_t>(i)] == f ? held : train).push_back(i);
    }
    if (held.empty()) continue;
    Matrix Zt(static_cast<Eigen::Index>(train.size()), Z.cols());
    std::vector<int> yt(train.size());
    bool has_pos = false, has_neg = false;
    for (std::size_t k = 0; k < train.size(); ++k) {
      Zt.row(static_cast<Eigen::Index>(k)) = Z.row(train[k]);
      yt[k] = y[static_cast<std::size_t>(train[k])];
      (yt[k] == 1 ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) {
      for (auto i : held) cv_decision[static_cast<std::size_t>(i)] = has_pos ? 1.0 : -1.0;
      continue;
    }
    const auto sub = train_svc(Zt, yt, kernel, options);
    for (auto i : held) {
      cv_decision[static_cast<std::size_t>(i)] = evaluate_expansion(
          sub.kernel, sub.support, sub.coef, sub.linear_w, sub.rho, Z.row(i).transpose());
    }
  }
  const PlattParams platt = fit_platt(cv_decision, y);

  auto full = train_svc(Z, y, kernel, options);
  return std::make_shared<SvmClassifier>(std::move(scaling), kernel, std::move(full.support),
                                         std::move(full.coef), full.rho, platt);
}

// ---------------------------------------------------------------------------
// epsilon-SVR

SvmRegressor::SvmRegressor(Standardizer standardizer, Kernel kernel, Matrix support, Vector coef,
                           double rho, double target_mean, double target_scale)
    : Regressor(std::move(standardizer)),
      kernel_(kernel),
      support_(std::move(support)),
      coef_(std::move(coef)),
      rho_(rho),
      target_mean_(target_mean),
      target_scale_(target_scale) {
  if (support_.rows() != coef_.size()) throw DimensionError("svr: support/coef size mismatch");
}

std::string_view SvmRegressor::kind() const {
  return kernel_.kind == KernelKind::Rbf ? "rbf_svm" : "linear_svm";
}

double SvmRegressor::predict_std(const VectorRef& z) const {
  Vector w;
  if (kernel_.kind == KernelKind::Linear) {
    w = support_.rows() > 0 ? Vector(support_.transpose() * coef_) : Vector(Vector::Zero(z.size()));
  }
  const double f = evaluate_expansion(kernel_, support_, coef_, w, rho_, z);
  return target_mean_ + target_scale_ * f;
}

nlohmann::json SvmRegressor::to_json() const {
  auto j = base_json();
  j["kernel"] = {{"type", std::string(to_string(kernel_.kind))}, {"gamma", kernel_.gamma}};
  j["support"] = matrix_json(support_);
  j["coef"] = to_std(coef_);
  j["rho"] = rho_;
  j["target_mean"] = target_mean_;
  j["target_scale"] = target_scale_;
  return j;
}

std::shared_ptr<const SvmRegressor> fit_svr(const Matrix& X, std::span<const double> target,
                                            const SvmOptions& options,
                                            std::span<const FeatureKind> kinds) {
  if (static_cast<Eigen::Index>(target.size()) != X.rows()) {
    throw DimensionError("svr: target size does not match row count");
  }
  if (X.rows() < 2) throw TrainingError("svr needs at least two rows");
  if (!X.allFinite()) throw TrainingError("svr: non-finite inputs");
  if (!(options.C > 0.0)) throw ConfigError("svm C must be positive");
  if (!(options.epsilon >= 0.0)) throw ConfigError("svr epsilon must be non-negative");
  auto scaling = Standardizer::fit(X, kinds);
  const Matrix Z = scaling.transform_rows(X);
  const Kernel kernel = make_kernel(Z, options);
  const auto n = Z.rows();

  const Vector t = Eigen::Map<const Vector>(target.data(), n);
  const double mean = t.mean();
  double scale = std::sqrt((t.array() - mean).square().mean());
  if (!(scale > 1e-12)) scale = 1.0;
  const Vector ts = (t.array() - mean) / scale;

  Vector p(2 * n);
  Eigen::VectorXi signs(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    p[i] = options.epsilon - ts[i];
    p[i + n] = options.epsilon + ts[i];
    signs[i] = 1;
    signs[i + n] = -1;
  }
  Gram gram(Z, kernel);
  SvrQ Q(gram);
  const auto result = solve_smo(Q, p, signs, Vector::Constant(2 * n, options.C), options.smo);

  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (result.alpha[i] - result.alpha[i + n] != 0.0) sv.push_back(i);
  }
  Matrix support(static_cast<Eigen::Index>(sv.size()), Z.cols());
  Vector coef(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    support.row(static_cast<Eigen::Index>(k)) = Z.row(sv[k]);
    coef[static_cast<Eigen::Index>(k)] = result.alpha[sv[k]] - result.alpha[sv[k] + n];
  }
  return std::make_shared<SvmRegressor>(std::move(scaling), kernel, std::move(support),
                                        std::move(coef), result.rho, mean, scale);
}

}  // namespace longic
