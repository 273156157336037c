#include "longic/kernel.hpp"

#include "longic/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace longic {

std::string_view to_string(KernelKind kind) { return kind == KernelKind::Rbf ? "rbf" : "linear"; }

KernelKind parse_kernel_kind(std::string_view text) {
  if (text == "rbf") return KernelKind::Rbf;
  if (text == "linear") return KernelKind::Linear;
  throw ConfigError("unknown kernel '" + std::string(text) + "'");
}

double Kernel::operator()(const Eigen::Ref<const Eigen::VectorXd>& a,
                          const Eigen::Ref<const Eigen::VectorXd>& b) const {
  if (kind == KernelKind::Linear) return a.dot(b);
  return std::exp(-gamma * (a - b).squaredNorm());
}

double median_heuristic_gamma(const Eigen::MatrixXd& Z, std::uint64_t seed,
                              Eigen::Index subsample) {
  const auto n = Z.rows();
  if (n < 2) return Z.cols() > 0 ? 1.0 / static_cast<double>(Z.cols()) : 1.0;
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  if (n > subsample) {
    std::mt19937_64 rng(seed);
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(static_cast<std::size_t>(subsample));
    std::sort(rows.begin(), rows.end());
  }
  std::vector<double> dists;
  dists.reserve(rows.size() * (rows.size() - 1) / 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      dists.push_back((Z.row(rows[i]) - Z.row(rows[j])).squaredNorm());
    }
  }
  const auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  const double median = *mid;
  if (!(median > 0.0)) return Z.cols() > 0 ? 1.0 / static_cast<double>(Z.cols()) : 1.0;
  return 1.0 / median;
}

}  // namespace longic
