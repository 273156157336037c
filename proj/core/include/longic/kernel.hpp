#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string_view>

namespace longic {

enum class KernelKind { Linear, Rbf };

std::string_view to_string(KernelKind kind);
KernelKind parse_kernel_kind(std::string_view text);

/// k(a, b) = a.b (linear) or exp(-gamma |a - b|^2) (rbf).
struct Kernel {
  KernelKind kind = KernelKind::Rbf;
  double gamma = 1.0;

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& a,
                    const Eigen::Ref<const Eigen::VectorXd>& b) const;
};

/// gamma = 1 / median pairwise squared distance over a seeded subsample of
/// at most `subsample` rows. Falls back to 1 / dim when the median is zero.
double median_heuristic_gamma(const Eigen::MatrixXd& Z, std::uint64_t seed = 0,
                              Eigen::Index subsample = 256);

}  // namespace longic
