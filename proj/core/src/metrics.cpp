#include "longic/metrics.hpp"

#include "longic/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace longic {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DataError("auc: score/label size mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of midranks of the positives.
  double rank_sum = 0.0;
  double positives = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      const int y = labels[order[k]];
      if (y != 0 && y != 1) throw DataError("auc: labels must be 0 or 1");
      if (y == 1) {
        rank_sum += midrank;
        positives += 1.0;
      }
    }
    i = j + 1;
  }
  const double negatives = static_cast<double>(n) - positives;
  if (positives == 0.0 || negatives == 0.0) throw DataError("auc: both classes are required");
  return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

double mse(std::span<const double> prediction, std::span<const double> truth) {
  if (prediction.size() != truth.size()) throw DataError("mse: size mismatch");
  if (prediction.empty()) throw DataError("mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = prediction[i] - truth[i];
    sum += d * d;
  }
  return sum / static_cast<double>(truth.size());
}

}  // namespace longic
