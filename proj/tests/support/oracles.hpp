#pragma once

// Reference implementations used only by tests. None of them call into the
// library code they are compared against.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace oracle {

/// Asymmetric weighted l1 spend, recomputed from scratch.
inline double spend(const std::vector<double>& up, const std::vector<double>& down,
                    const Eigen::VectorXd& w, const Eigen::VectorXd& x_bar) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    const double d = w[j] - x_bar[j];
    const auto k = static_cast<std::size_t>(j);
    if (d > 0.0) total += up[k] == std::numeric_limits<double>::infinity() ? up[k] : up[k] * d;
    if (d < 0.0) total += down[k] == std::numeric_limits<double>::infinity() ? down[k] : -down[k] * d;
  }
  return total;
}

/// Exact minimizer of |w - z|^2 over {spend(w - x_bar) <= B, lo <= w <= hi}
/// by enumerating every active set. Each coordinate is at its lower bound, at
/// its upper bound, at x_bar, or free on the increasing or decreasing side
/// with w_j = z_j -/+ lambda c_j. For a given assignment lambda solves the
/// spend = B equation in closed form (or is 0). The feasible candidate
/// closest to z is the optimum because the true solution is one of them.
inline Eigen::VectorXd project_by_enumeration(const std::vector<double>& up,
                                              const std::vector<double>& down, double budget,
                                              const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                              const Eigen::VectorXd& x_bar,
                                              const Eigen::VectorXd& z) {
  const auto n = z.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<int> state(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd best = x_bar;
  double best_dist = (x_bar - z).squaredNorm();
  auto consider = [&](const Eigen::VectorXd& w) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(w[j] >= lo[j] - 1e-12 && w[j] <= hi[j] + 1e-12)) return;
    }
    if (spend(up, down, w, x_bar) > budget + 1e-10) return;
    const double d = (w - z).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = w;
    }
  };
  // Budget slack: the box clip alone.
  consider(z.cwiseMax(lo).cwiseMin(hi));
  std::size_t total = 1;
  for (Eigen::Index j = 0; j < n; ++j) total *= 5;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (auto& s : state) {
      s = static_cast<int>(c % 5);
      c /= 5;
    }
    // fixed spend from bound states, and the linear lambda coefficient from free ones
    double fixed = 0.0, free_lin = 0.0, free_quad = 0.0;
    bool ok = true;
    for (Eigen::Index j = 0; j < n && ok; ++j) {
      const auto k = static_cast<std::size_t>(j);
      switch (state[k]) {
        case 0: {
          const double d = lo[j] - x_bar[j];
          fixed += d > 0 ? up[k] * d : (d < 0 ? -down[k] * d : 0.0);
          break;
        }
        case 1: {
          const double d = hi[j] - x_bar[j];
          fixed += d > 0 ? up[k] * d : (d < 0 ? -down[k] * d : 0.0);
          break;
        }
        case 2:
          break;
        case 3:
          if (up[k] == inf) ok = false;
          free_lin += up[k] * (z[j] - x_bar[j]);
          free_quad += up[k] * up[k];
          break;
        case 4:
          if (down[k] == inf) ok = false;
          free_lin += down[k] * (x_bar[j] - z[j]);
          free_quad += down[k] * down[k];
          break;
      }
    }
    if (!ok || !std::isfinite(fixed)) continue;
    double lambda = 0.0;
    if (free_quad > 0.0) lambda = std::max(0.0, (fixed + free_lin - budget) / free_quad);
    Eigen::VectorXd w(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto k = static_cast<std::size_t>(j);
      switch (state[k]) {
        case 0: w[j] = lo[j]; break;
        case 1: w[j] = hi[j]; break;
        case 2: w[j] = x_bar[j]; break;
        case 3: w[j] = z[j] - lambda * up[k]; break;
        case 4: w[j] = z[j] + lambda * down[k]; break;
      }
    }
    consider(w);
  }
  return best;
}

/// Mann-Whitney AUC by counting every positive/negative pair.
inline double auc_by_pairs(std::span<const double> scores, std::span<const int> labels) {
  long long twice_wins = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) twice_wins += 2;
      if (scores[i] == scores[j]) twice_wins += 1;
    }
  }
  return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(pairs));
}

/// Central differences of a scalar function along the unit axes.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd a = x, b = x;
    a[j] += h;
    b[j] -= h;
    g[j] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

/// |a - b| / max(|a|, |b|), zero when both vanish.
inline double relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
  const double scale = std::max(analytic.norm(), numeric.norm());
  if (scale == 0.0) return 0.0;
  return (analytic - numeric).norm() / scale;
}

/// Exact minimizer of the SVM dual 0.5 a'Qa - 1'a s.t. y'a = 0, 0 <= a <= C
/// by enumerating each a_i in {0, C, free} and solving the KKT system of
/// the free block. Feasible for small n only (3^n systems).
inline double svm_dual_by_enumeration(const Eigen::MatrixXd& Q, const Eigen::VectorXd& y,
                                      double C, Eigen::VectorXd* argmin = nullptr) {
  const auto n = Q.rows();
  std::size_t total = 1;
  for (Eigen::Index i = 0; i < n; ++i) total *= 3;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int s = static_cast<int>(c % 3);
      c /= 3;
      if (s == 1) a[i] = C;
      if (s == 2) free.push_back(i);
    }
    if (!free.empty()) {
      // [Q_FF  y_F] [a_F]   [1 - Q_FB a_B]
      // [y_F'  0  ] [ b ] = [  - y_B' a_B ]
      const auto m = static_cast<Eigen::Index>(free.size());
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m + 1, m + 1);
      Eigen::VectorXd rhs(m + 1);
      const Eigen::VectorXd Qa = Q * a;
      for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index s = 0; s < m; ++s) K(r, s) = Q(free[r], free[s]);
        K(r, m) = y[free[r]];
        K(m, r) = y[free[r]];
        rhs[r] = 1.0 - Qa[free[r]];
      }
      rhs[m] = -y.dot(a);
      const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
      if (!((K * sol - rhs).norm() < 1e-8)) continue;
      for (Eigen::Index r = 0; r < m; ++r) a[free[r]] = sol[r];
    }
    bool feasible = std::abs(y.dot(a)) < 1e-9;
    for (Eigen::Index i = 0; i < n && feasible; ++i) {
      feasible = a[i] >= -1e-12 && a[i] <= C + 1e-12;
    }
    if (!feasible) continue;
    const double obj = 0.5 * a.dot(Q * a) - a.sum();
    if (obj < best) {
      best = obj;
      if (argmin) *argmin = a;
    }
  }
  return best;
}

}  // namespace oracle
