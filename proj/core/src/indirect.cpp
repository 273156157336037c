#include "longic/indirect.hpp"

#include "longic/error.hpp"
#include "longic/kernel.hpp"
#include "longic/model_io.hpp"

#include <cmath>

namespace longic {

using Eigen::MatrixXd;
using Eigen::VectorXd;

IndirectEstimator::IndirectEstimator(Standardizer input_scaling, MatrixXd inputs, MatrixXd targets,
                                     Eigen::Index context_dim, double bandwidth)
    : scaling_(std::move(input_scaling)),
      inputs_(std::move(inputs)),
      targets_(std::move(targets)),
      context_dim_(context_dim),
      bandwidth_(bandwidth) {
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) {
    throw ConfigError("indirect estimator bandwidth must be positive");
  }
  if (inputs_.rows() != targets_.rows() || inputs_.rows() < 1) {
    throw DataError("indirect estimator: input/target row mismatch");
  }
  if (scaling_.dim() != inputs_.cols() || context_dim_ < 0 || context_dim_ > inputs_.cols()) {
    throw DimensionError("indirect estimator: inconsistent input layout");
  }
  target_mean_ = targets_.colwise().mean();
}

void IndirectEstimator::check(const Eigen::Ref<const VectorXd>& context,
                              const Eigen::Ref<const VectorXd>& direct) const {
  if (context.size() != context_dim_ || direct.size() != direct_dim()) {
    throw DimensionError("indirect estimator: expected " + std::to_string(context_dim_) +
                         " context and " + std::to_string(direct_dim()) + " direct features");
  }
}

VectorXd IndirectEstimator::scaled_query(const Eigen::Ref<const VectorXd>& context,
                                         const Eigen::Ref<const VectorXd>& direct) const {
  VectorXd x(inputs_.cols());
  x << context, direct;
  return scaling_.transform(x);
}

VectorXd IndirectEstimator::predict(const Eigen::Ref<const VectorXd>& context,
                                    const Eigen::Ref<const VectorXd>& direct) const {
  check(context, direct);
  const VectorXd s = scaled_query(context, direct);
  const double gamma = 1.0 / (2.0 * bandwidth_ * bandwidth_);
  const VectorXd k = (-gamma * (inputs_.rowwise() - s.transpose()).rowwise().squaredNorm())
                         .array()
                         .exp()
                         .matrix();
  const double mass = k.sum();
  if (!(mass >= kMassFloor)) return target_mean_;
  return targets_.transpose() * k / mass;
}

MatrixXd IndirectEstimator::jacobian(const Eigen::Ref<const VectorXd>& context,
                                     const Eigen::Ref<const VectorXd>& direct) const {
  MatrixXd J;
  predict_with_jacobian(context, direct, J);
  return J;
}

VectorXd IndirectEstimator::predict_with_jacobian(const Eigen::Ref<const VectorXd>& context,
                                                  const Eigen::Ref<const VectorXd>& direct,
                                                  MatrixXd& jacobian) const {
  check(context, direct);
  const VectorXd s = scaled_query(context, direct);
  const double gamma = 1.0 / (2.0 * bandwidth_ * bandwidth_);
  const auto dd = direct_dim();
  const VectorXd k = (-gamma * (inputs_.rowwise() - s.transpose()).rowwise().squaredNorm())
                         .array()
                         .exp()
                         .matrix();
  const double mass = k.sum();
  if (!(mass >= kMassFloor)) {
    jacobian = MatrixXd::Zero(targets_.cols(), dd);
    return target_mean_;
  }
  const VectorXd m = targets_.transpose() * k / mass;
  // dk_i/dx_d = k_i (-2 gamma) (s_d - s_id) / sigma_d, on the direct block only.
  const auto& scale = scaling_.scale().tail(dd);
  MatrixXd dK = (-(inputs_.rightCols(dd).rowwise() - s.tail(dd).transpose()));
  dK = k.asDiagonal() * dK;
  dK *= -2.0 * gamma;
  dK = dK * scale.cwiseInverse().asDiagonal();
  jacobian = (targets_.transpose() * dK - m * dK.colwise().sum()) / mass;
  return m;
}

nlohmann::json IndirectEstimator::to_json() const {
  auto rows = [](const MatrixXd& M) {
    auto out = nlohmann::json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      auto row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
      out.push_back(std::move(row));
    }
    return out;
  };
  return {{"format_version", kModelFormatVersion},
          {"kind", "nw_kernel"},
          {"standardizer", standardizer_to_json(scaling_)},
          {"context_dim", context_dim_},
          {"bandwidth", bandwidth_},
          {"inputs", rows(inputs_)},
          {"targets", rows(targets_)}};
}

IndirectEstimator fit_indirect(const MatrixXd& context, const MatrixXd& direct,
                               const MatrixXd& indirect, std::optional<double> bandwidth) {
  if (context.rows() != direct.rows() || direct.rows() != indirect.rows()) {
    throw DimensionError("fit_indirect: row counts differ");
  }
  if (direct.rows() < 2) throw DataError("fit_indirect needs at least two rows");
  MatrixXd X(direct.rows(), context.cols() + direct.cols());
  X << context, direct;
  if (!X.allFinite() || !indirect.allFinite()) throw DataError("fit_indirect: non-finite values");
  auto scaling = Standardizer::fit(X);
  MatrixXd Z = scaling.transform_rows(X);
  double h;
  if (bandwidth) {
    if (!(*bandwidth > 0.0)) throw ConfigError("indirect estimator bandwidth must be positive");
    h = *bandwidth;
  } else {
    // gamma = 1 / median d^2 and gamma = 1 / (2 h^2).
    const double gamma = median_heuristic_gamma(Z, 0);
    h = std::sqrt(1.0 / (2.0 * gamma));
  }
  return IndirectEstimator(std::move(scaling), std::move(Z), indirect, context.cols(), h);
}

}  // namespace longic
