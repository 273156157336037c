#pragma once

#include <Eigen/Core>

#include <functional>
#include <span>

namespace longic {

struct SmoSettings {
  double tolerance = 1e-3;  ///< maximal KKT violation at exit
  long max_iterations = 100000;
};

/// Column access to the Hessian Q of the dual. `column(i, out)` fills Q(:, i).
class QMatrix {
 public:
  virtual ~QMatrix() = default;
  virtual Eigen::Index size() const = 0;
  virtual void column(Eigen::Index i, Eigen::Ref<Eigen::VectorXd> out) const = 0;
  virtual double diagonal(Eigen::Index i) const = 0;
};

struct SmoResult {
  Eigen::VectorXd alpha;
  double rho = 0.0;  ///< decision offset: f(x) = sum coef_i k(x_i, x) - rho
  long iterations = 0;
  double objective = 0.0;
};

/// Solves  min 0.5 a'Qa + p'a  s.t.  y'a = 0,  0 <= a_i <= upper_i
/// with second-order working-set selection. `y` holds +1/-1. Throws
/// TrainingError when `max_iterations` is exhausted before the KKT gap
/// closes below `tolerance`.
SmoResult solve_smo(const QMatrix& Q, const Eigen::VectorXd& p, const Eigen::VectorXi& y,
                    const Eigen::VectorXd& upper, const SmoSettings& settings);

}  // namespace longic
