#include "longic/standardizer.hpp"

#include "longic/error.hpp"

#include <cmath>

namespace longic {

Standardizer::Standardizer(Eigen::VectorXd mean, Eigen::VectorXd scale)
    : mean_(std::move(mean)), scale_(std::move(scale)) {
  if (mean_.size() != scale_.size()) throw DimensionError("standardizer: mean/scale size mismatch");
}

Standardizer Standardizer::identity(Eigen::Index dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X, std::span<const FeatureKind> kinds) {
  if (!kinds.empty() && static_cast<Eigen::Index>(kinds.size()) != X.cols()) {
    throw DimensionError("standardizer: kinds size does not match column count");
  }
  const auto d = X.cols();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(d);
  if (X.rows() == 0) return {mean, scale};
  for (Eigen::Index c = 0; c < d; ++c) {
    if (!kinds.empty() && kinds[static_cast<std::size_t>(c)] == FeatureKind::Binary) continue;
    const double m = X.col(c).mean();
    const double var = (X.col(c).array() - m).square().mean();
    mean[c] = m;
    const double sd = std::sqrt(var);
    scale[c] = sd > 1e-12 ? sd : 1.0;
  }
  return {mean, scale};
}

Eigen::VectorXd Standardizer::transform(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != mean_.size()) throw DimensionError("standardizer: input dimension mismatch");
  return ((x - mean_).array() / scale_.array()).matrix();
}

Eigen::MatrixXd Standardizer::transform_rows(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean_.size()) throw DimensionError("standardizer: input dimension mismatch");
  Eigen::MatrixXd Z = X.rowwise() - mean_.transpose();
  Z.array().rowwise() /= scale_.transpose().array();
  return Z;
}

Eigen::VectorXd Standardizer::inverse(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (z.size() != mean_.size()) throw DimensionError("standardizer: input dimension mismatch");
  return (z.array() * scale_.array()).matrix() + mean_;
}

}  // namespace longic
