#pragma once

#include "longic/standardizer.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <optional>

namespace longic {

/// Nadaraya-Watson regression H : (context, direct) -> indirect with a
/// Gaussian kernel on standardized inputs. `context` carries the unchangeable
/// features (and any risk columns); only `direct` is differentiated.
class IndirectEstimator {
 public:
  /// Kernel mass below which the estimator falls back to the target mean.
  static constexpr double kMassFloor = 1e-12;

  IndirectEstimator(Standardizer input_scaling, Eigen::MatrixXd inputs, Eigen::MatrixXd targets,
                    Eigen::Index context_dim, double bandwidth);

  Eigen::Index context_dim() const { return context_dim_; }
  Eigen::Index direct_dim() const { return inputs_.cols() - context_dim_; }
  Eigen::Index output_dim() const { return targets_.cols(); }
  double bandwidth() const { return bandwidth_; }
  const Standardizer& input_scaling() const { return scaling_; }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::MatrixXd& targets() const { return targets_; }

  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::VectorXd>& context,
                          const Eigen::Ref<const Eigen::VectorXd>& direct) const;

  /// |I| x |D| Jacobian with respect to the raw direct inputs.
  Eigen::MatrixXd jacobian(const Eigen::Ref<const Eigen::VectorXd>& context,
                           const Eigen::Ref<const Eigen::VectorXd>& direct) const;

  /// Both at once; `jacobian` is resized to |I| x |D|.
  Eigen::VectorXd predict_with_jacobian(const Eigen::Ref<const Eigen::VectorXd>& context,
                                        const Eigen::Ref<const Eigen::VectorXd>& direct,
                                        Eigen::MatrixXd& jacobian) const;

  nlohmann::json to_json() const;

 private:
  void check(const Eigen::Ref<const Eigen::VectorXd>& context,
             const Eigen::Ref<const Eigen::VectorXd>& direct) const;
  Eigen::VectorXd scaled_query(const Eigen::Ref<const Eigen::VectorXd>& context,
                               const Eigen::Ref<const Eigen::VectorXd>& direct) const;

  Standardizer scaling_;
  Eigen::MatrixXd inputs_;   ///< standardized training inputs, context columns first
  Eigen::MatrixXd targets_;  ///< raw training targets
  Eigen::VectorXd target_mean_;
  Eigen::Index context_dim_;
  double bandwidth_;  ///< k(a, b) = exp(-|a - b|^2 / (2 h^2))
};

/// Fits H. `bandwidth` unset selects h with 2 h^2 equal to the median pairwise
/// squared distance (the same heuristic the SVM uses for gamma). Throws
/// ConfigError for a non-positive bandwidth, DataError for fewer than two rows.
IndirectEstimator fit_indirect(const Eigen::MatrixXd& context, const Eigen::MatrixXd& direct,
                               const Eigen::MatrixXd& indirect,
                               std::optional<double> bandwidth = std::nullopt);

}  // namespace longic
