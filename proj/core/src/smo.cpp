#include "longic/smo.hpp"

#include "longic/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace longic {

namespace {

constexpr double kTau = 1e-12;

}  // namespace

SmoResult solve_smo(const QMatrix& Q, const Eigen::VectorXd& p, const Eigen::VectorXi& y,
                    const Eigen::VectorXd& upper, const SmoSettings& settings) {
  const Eigen::Index n = Q.size();
  if (p.size() != n || y.size() != n || upper.size() != n) {
    throw DimensionError("solve_smo: inconsistent problem dimensions");
  }
  const double inf = std::numeric_limits<double>::infinity();

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd G = p;  // gradient Q alpha + p at alpha = 0
  Eigen::VectorXd QD(n);
  for (Eigen::Index t = 0; t < n; ++t) QD[t] = Q.diagonal(t);
  Eigen::VectorXd Qi(n), Qj(n);

  auto at_upper = [&](Eigen::Index t) { return alpha[t] >= upper[t]; };
  auto at_lower = [&](Eigen::Index t) { return alpha[t] <= 0.0; };

  long iter = 0;
  for (;; ++iter) {
    // Working set: i maximizes -y G over I_up, j minimizes the second-order
    // objective decrease over I_low.
    double gmax = -inf;
    double gmax2 = -inf;
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (y[t] == 1) {
        if (!at_upper(t) && -G[t] >= gmax) {
          gmax = -G[t];
          i = t;
        }
      } else if (!at_lower(t) && G[t] >= gmax) {
        gmax = G[t];
        i = t;
      }
    }
    Eigen::Index j = -1;
    if (i != -1) {
      Q.column(i, Qi);
      double best = inf;
      for (Eigen::Index t = 0; t < n; ++t) {
        if (y[t] == 1) {
          if (at_lower(t)) continue;
          const double grad_diff = gmax + G[t];
          if (G[t] >= gmax2) gmax2 = G[t];
          if (grad_diff > 0.0) {
            double quad = QD[i] + QD[t] - 2.0 * y[i] * Qi[t];
            const double obj = -(grad_diff * grad_diff) / (quad > 0.0 ? quad : kTau);
            if (obj <= best) {
              best = obj;
              j = t;
            }
          }
        } else {
          if (at_upper(t)) continue;
          const double grad_diff = gmax - G[t];
          if (-G[t] >= gmax2) gmax2 = -G[t];
          if (grad_diff > 0.0) {
            double quad = QD[i] + QD[t] + 2.0 * y[i] * Qi[t];
            const double obj = -(grad_diff * grad_diff) / (quad > 0.0 ? quad : kTau);
            if (obj <= best) {
              best = obj;
              j = t;
            }
          }
        }
      }
    }
    if (i == -1 || j == -1 || gmax + gmax2 < settings.tolerance) break;
    if (iter >= settings.max_iterations) {
      throw TrainingError("SMO did not converge within " + std::to_string(settings.max_iterations) +
                          " iterations (KKT gap " + std::to_string(gmax + gmax2) + ")");
    }

    Q.column(j, Qj);
    const double ci = upper[i];
    const double cj = upper[j];
    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    double ai = old_ai;
    double aj = old_aj;
    if (y[i] != y[j]) {
      double quad = QD[i] + QD[j] + 2.0 * Qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) {
          aj = 0.0;
          ai = diff;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = -diff;
      }
      if (diff > ci - cj) {
        if (ai > ci) {
          ai = ci;
          aj = ci - diff;
        }
      } else if (aj > cj) {
        aj = cj;
        ai = cj + diff;
      }
    } else {
      double quad = QD[i] + QD[j] - 2.0 * Qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > ci) {
        if (ai > ci) {
          ai = ci;
          aj = sum - ci;
        }
      } else if (aj < 0.0) {
        aj = 0.0;
        ai = sum;
      }
      if (sum > cj) {
        if (aj > cj) {
          aj = cj;
          ai = sum - cj;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = sum;
      }
    }
    alpha[i] = ai;
    alpha[j] = aj;
    const double dai = ai - old_ai;
    const double daj = aj - old_aj;
    G.noalias() += Qi * dai + Qj * daj;
  }

  // Offset from free variables, or the midpoint of the feasible interval.
  double ub = inf;
  double lb = -inf;
  double sum_free = 0.0;
  long n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y[t] * G[t];
    if (at_upper(t)) {
      if (y[t] == -1) {
        ub = std::min(ub, yg);
      } else {
        lb = std::max(lb, yg);
      }
    } else if (at_lower(t)) {
      if (y[t] == 1) {
        ub = std::min(ub, yg);
      } else {
        lb = std::max(lb, yg);
      }
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  SmoResult result;
  if (n_free > 0) {
    result.rho = sum_free / static_cast<double>(n_free);
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    result.rho = 0.5 * (ub + lb);
  } else {
    result.rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
  }
  result.iterations = iter;
  result.objective = 0.5 * alpha.dot(G + p);
  result.alpha = std::move(alpha);
  return result;
}

}  // namespace longic
