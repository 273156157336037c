#include "doctest.h"

#include "oracles.hpp"

#include "longic/error.hpp"
#include "longic/metrics.hpp"

#include <random>

using namespace longic;

TEST_CASE("auc edge cases") {
  const std::vector<double> ranked = {0.1, 0.2, 0.8, 0.9};
  const std::vector<int> labels = {0, 0, 1, 1};
  CHECK(auc(ranked, labels) == 1.0);
  const std::vector<double> flat = {0.5, 0.5, 0.5, 0.5};
  CHECK(auc(flat, labels) == 0.5);
  const std::vector<double> reversed = {0.9, 0.8, 0.2, 0.1};
  CHECK(auc(reversed, labels) == 0.0);
  const std::vector<int> one_class = {1, 1, 1, 1};
  CHECK_THROWS_AS(auc(ranked, one_class), DataError);
  const std::vector<int> short_labels = {0, 1};
  CHECK_THROWS_AS(auc(ranked, short_labels), DataError);
}

TEST_CASE("auc equals pair counting on random data with ties") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> coarse(0, 9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> s(50);
    std::vector<int> y(50);
    for (std::size_t i = 0; i < 50; ++i) {
      s[i] = coarse(rng) / 10.0;  // coarse grid forces ties
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    CHECK(auc(s, y) == oracle::auc_by_pairs(s, y));
  }
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::vector<double> s(80), t(80);
  std::vector<int> y(80);
  for (std::size_t i = 0; i < 80; ++i) {
    s[i] = g(rng);
    t[i] = std::exp(3.0 * s[i]) + 7.0;
    y[i] = s[i] + g(rng) > 0 ? 1 : 0;
  }
  CHECK(auc(s, y) == auc(t, y));
}

TEST_CASE("mse") {
  const std::vector<double> truth = {1.0, -2.0, 3.5};
  CHECK(mse(truth, truth) == 0.0);
  const std::vector<double> shifted = {2.0, -1.0, 4.5};
  CHECK(mse(shifted, truth) == 1.0);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  std::vector<double> a(10), b(10);
  for (std::size_t i = 0; i < 10; ++i) {
    a[i] = g(rng);
    b[i] = g(rng);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < 10; ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  CHECK(mse(a, b) == doctest::Approx(sum / 10.0).epsilon(1e-15));

  const std::vector<double> empty;
  CHECK_THROWS_AS(mse(empty, empty), DataError);
  const std::vector<double> two = {1.0, 2.0};
  CHECK_THROWS_AS(mse(two, truth), DataError);
}
