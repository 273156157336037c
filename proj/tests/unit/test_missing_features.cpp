#include "doctest.h"

#include "fixtures.hpp"

#include "longic/error.hpp"
#include "longic/missing_features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

using namespace longic;
using Eigen::MatrixXd;

namespace {

const Cohort& cohort_missing_statin_and_hematocrit() {
  static const Cohort c = [] {
    auto spec = fixture::small_spec(800, 21);
    for (auto& list : spec.missing) {
      list.push_back("statin_use");
      list.push_back("hematocrit");
    }
    return generate(spec).cohort;
  }();
  return c;
}

}  // namespace

TEST_CASE("visit 1 gets an empty plan and enrichment is the identity") {
  const auto& c = fixture::small_cohort();
  const auto plan = fit_plan(c, 1);
  CHECK(plan.empty());
  const auto rows = enrich(plan, c.visit(1));
  CHECK(rows.X == c.visit(1).X);
}

TEST_CASE("default estimator kinds follow the feature kind") {
  const auto& c = cohort_missing_statin_and_hematocrit();
  const auto plan = fit_plan(c, 2);
  const auto statin = c.schema.index_of("statin_use");
  const auto hct = c.schema.index_of("hematocrit");
  bool saw_statin = false, saw_hct = false;
  for (const auto& e : plan.estimators) {
    if (e.feature == statin) {
      saw_statin = true;
      CHECK(e.model == ModelKind::Logistic);
      CHECK(e.classifier != nullptr);
      CHECK(e.regressor == nullptr);
    }
    if (e.feature == hct) {
      saw_hct = true;
      CHECK(e.model == ModelKind::Ridge);
      CHECK(e.regressor != nullptr);
    }
    // consumed features exclude every missing feature
    CHECK(std::find(plan.consumed.begin(), plan.consumed.end(), e.feature) == plan.consumed.end());
  }
  CHECK(saw_statin);
  CHECK(saw_hct);
  CHECK(plan.estimators.size() == missing_feature_set(c, 2).size());
}

TEST_CASE("enrichment fills every missing feature") {
  const auto& c = cohort_missing_statin_and_hematocrit();
  for (int v = 2; v <= 3; ++v) {
    const auto plan = fit_plan(c, v);
    const auto rows = enrich(plan, c.visit(v));
    CHECK(rows.X.cols() == static_cast<Eigen::Index>(c.schema.size()));
    CHECK(rows.X.rows() == static_cast<Eigen::Index>(c.visit(v).rows()));
    CHECK(rows.X.allFinite());
    // measured columns pass through untouched
    for (std::size_t k = 0; k < c.visit(v).present.size(); ++k) {
      const auto f = static_cast<Eigen::Index>(c.visit(v).present[k]);
      CHECK(rows.X.col(f) == c.visit(v).X.col(static_cast<Eigen::Index>(k)));
    }
    // binary estimates are thresholded
    const auto statin = static_cast<Eigen::Index>(c.schema.index_of("statin_use"));
    CHECK(((rows.X.col(statin).array() == 0.0) || (rows.X.col(statin).array() == 1.0)).all());
  }
}

TEST_CASE("a constant-mean estimator yields a constant column") {
  const auto& c = cohort_missing_statin_and_hematocrit();
  auto plan = fit_plan(c, 2);
  const auto hct = c.schema.index_of("hematocrit");
  const double mean = c.visit(1).X.col(static_cast<Eigen::Index>(hct)).mean();
  for (auto& e : plan.estimators) {
    if (e.feature == hct) {
      e.regressor = std::make_shared<ConstantRegressor>(
          static_cast<Eigen::Index>(plan.consumed.size()), mean);
    }
  }
  const auto rows = enrich(plan, c.visit(2));
  CHECK((rows.X.col(static_cast<Eigen::Index>(hct)).array() == mean).all());
}

TEST_CASE("enrich rejects a dataset that lacks a consumed feature") {
  const auto& c = fixture::small_cohort();
  const auto plan = fit_plan(c, 2);
  CHECK_THROWS_AS(enrich(plan, c.visit(3)), DataError);
}

TEST_CASE("carry-forward copies each patient's own visit-1 values") {
  const auto& c = fixture::small_cohort();
  const MatrixXd filled = carry_forward(c, 2);
  const auto index = index_ids(c.visit(1).ids);
  for (auto f : missing_feature_set(c, 2)) {
    for (std::size_t r = 0; r < c.visit(2).rows(); ++r) {
      const auto row = static_cast<Eigen::Index>(index.at(c.visit(2).ids[r]));
      CHECK(filled(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) ==
            c.visit(1).X(row, static_cast<Eigen::Index>(f)));
    }
  }
}

TEST_CASE("on drifting data ridge beats carry-forward on a drifting lifestyle feature") {
  const auto& c = fixture::default_synthetic().cohort;
  const std::vector<std::string> holdout = {"saturated_fat", "sodium", "bmi"};
  const std::vector<std::string> est = {"ridge"};
  const auto table = evaluate_estimators(c, 2, holdout, est);
  int wins = 0;
  for (const auto& f : holdout) {
    wins += table.at(f, "ridge").value < table.at(f, "carry").value ? 1 : 0;
  }
  CHECK(wins >= 2);
}

TEST_CASE("oracle, constant and table shape") {
  const auto& c = cohort_missing_statin_and_hematocrit();
  // statin_use is missing at visit 2 here, so score on the base cohort instead
  const auto& base = fixture::small_cohort();
  const std::vector<std::string> holdout = {"ldl", "exercise_hours", "statin_use"};
  const std::vector<std::string> est = {"oracle", "constant", "ridge", "logistic"};
  const auto table = evaluate_estimators(base, 2, holdout, est);
  CHECK(table.estimators.front() == "carry");
  CHECK(table.cells.size() == holdout.size() * (est.size() + 1));
  CHECK(table.at("ldl", "oracle").value == 0.0);
  CHECK(table.at("ldl", "oracle").metric == "mse");
  CHECK(table.at("statin_use", "oracle").value == 1.0);
  CHECK(table.at("statin_use", "oracle").metric == "auc");
  CHECK(table.at("statin_use", "constant").value == 0.5);
  CHECK(std::isnan(table.at("ldl", "logistic").value));  // classifier on a continuous feature
  CHECK(table.winner("ldl") == "oracle");
  CHECK(table.winner("exercise_hours") == "oracle");
  // unchangeable features do not move between visits; carry ties the oracle and is listed first
  CHECK(table.at("statin_use", "carry").value == 1.0);
  CHECK(table.winner("statin_use") == "carry");

  const auto dir = fixture::scratch_dir("scores");
  table.write_csv(dir / "scores.csv");
  std::ifstream in(dir / "scores.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "feature,kind,metric_name,value");
  std::filesystem::remove_all(dir);

  const std::vector<std::string> absent = {"statin_use"};
  CHECK_THROWS_AS(evaluate_estimators(c, 2, absent, est), ConfigError);
}
