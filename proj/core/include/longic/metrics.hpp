#pragma once

#include <span>

namespace longic {

/// Area under the ROC curve as the normalized Mann-Whitney U statistic; ties
/// count one half. Throws DataError unless both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Mean squared error. Throws DataError on empty or mismatched input.
double mse(std::span<const double> prediction, std::span<const double> truth);

}  // namespace longic
