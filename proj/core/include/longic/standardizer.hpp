#pragma once

#include "longic/cohort.hpp"

#include <Eigen/Core>

#include <span>

namespace longic {

/// Per-column z-scoring. Binary columns pass through (mean 0, scale 1); a
/// continuous column with zero spread keeps scale 1.
class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(Eigen::VectorXd mean, Eigen::VectorXd scale);

  static Standardizer identity(Eigen::Index dim);
  /// `kinds` may be empty, meaning every column is continuous.
  static Standardizer fit(const Eigen::MatrixXd& X, std::span<const FeatureKind> kinds = {});

  Eigen::Index dim() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& scale() const { return scale_; }

  Eigen::VectorXd transform(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::MatrixXd transform_rows(const Eigen::MatrixXd& X) const;
  Eigen::VectorXd inverse(const Eigen::Ref<const Eigen::VectorXd>& z) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
};

}  // namespace longic
