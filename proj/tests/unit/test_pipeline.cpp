#include "doctest.h"

#include "fixtures.hpp"

#include "longic/error.hpp"
#include "longic/metrics.hpp"
#include "longic/pipeline.hpp"

#include <algorithm>
#include <cmath>

using namespace longic;
using Eigen::VectorXd;

namespace {

std::vector<std::size_t> test_rows(const TrainedModels& m, int v) {
  std::vector<std::size_t> rows;
  const auto& ids = m.at(v).design.ids;
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (m.split.test.count(ids[r])) rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("split is patient level, disjoint and seeded") {
  const auto& c = fixture::small_cohort();
  const auto a = split_ids(c, 0.3, 4);
  const auto b = split_ids(c, 0.3, 4);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK(a.train.size() + a.test.size() == c.visit(1).rows());
  for (const auto& id : a.test) CHECK(a.train.count(id) == 0);
  CHECK(std::abs(static_cast<double>(a.test.size()) - 180.0) <= 1.0);
  CHECK(split_ids(c, 0.3, 5).test != a.test);
  CHECK_THROWS_AS(split_ids(c, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split_ids(c, 1.0, 1), ConfigError);
}

TEST_CASE("design width grows by one risk column per visit") {
  const auto& c = fixture::small_cohort();
  const auto& m = fixture::small_models();
  const auto p1 = static_cast<Eigen::Index>(c.schema.size());
  REQUIRE(m.visits.size() == 3);
  for (int v = 1; v <= 3; ++v) {
    const auto& vm = m.at(v);
    CHECK(vm.design.X.cols() == p1 + (v - 1));
    CHECK(vm.classifier->input_dim() == p1 + (v - 1));
    CHECK(vm.layout.dim == p1 + (v - 1));
    CHECK(vm.layout.direct.size() == c.partition.direct.size());
    CHECK(vm.design.rows() == c.visit(v).rows());
    CHECK(vm.design.X.allFinite());
    CHECK(vm.indirect != nullptr);
  }
  CHECK_THROWS_AS(m.at(4), DataError);
}

TEST_CASE("a single-visit cohort trains one model without risk columns") {
  auto spec = fixture::small_spec(400, 13);
  spec.visits = 1;
  spec.missing.clear();
  const auto c = generate(spec).cohort;
  const auto m = train_all(c, ModelConfig{}, 2);
  CHECK(m.visits.size() == 1);
  CHECK(m.at(1).design.X.cols() == static_cast<Eigen::Index>(c.schema.size()));
  CHECK(m.at(1).plan.empty());
}

TEST_CASE("held-out discrimination at every visit") {
  const auto& m = fixture::default_models();
  for (int v = 1; v <= 3; ++v) {
    const auto rows = test_rows(m, v);
    const auto& d = m.at(v).design;
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), d.X.cols());
    std::vector<int> y;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      X.row(static_cast<Eigen::Index>(k)) = d.X.row(static_cast<Eigen::Index>(rows[k]));
      y.push_back(d.y_next[rows[k]]);
    }
    const VectorXd p = m.at(v).classifier->predict_proba_rows(X);
    const double a = auc(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), y);
    MESSAGE("visit " << v << " held-out AUC " << a);
    CHECK(a > 0.7);
  }
}

TEST_CASE("models do not see test rows") {
  const auto& c = fixture::small_cohort();
  const auto& m = fixture::small_models();
  Cohort perturbed = c;
  for (auto& ds : perturbed.visits) {
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      if (!m.split.test.count(ds.ids[r])) continue;
      for (std::size_t k = 0; k < ds.present.size(); ++k) {
        if (c.schema.features[ds.present[k]].kind == FeatureKind::Continuous) {
          ds.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) += 3.0;
        }
      }
    }
  }
  const auto m2 = train_all(perturbed, ModelConfig{}, 5);
  CHECK(m2.split.test == m.split.test);
  for (int v = 1; v <= 3; ++v) {
    CHECK(m2.at(v).classifier->to_json().dump() == m.at(v).classifier->to_json().dump());
    CHECK(m2.at(v).indirect->to_json().dump() == m.at(v).indirect->to_json().dump());
  }
}

TEST_CASE("experiment 1: the oracle wins and no drift favours carry-forward") {
  const auto& c = fixture::small_cohort();
  const auto& m = fixture::small_models();
  Experiment1Options opts;
  opts.holdout = {"saturated_fat", "ldl", "bmi"};
  opts.binary_holdout.clear();
  opts.estimators = {"oracle", "ridge", "knn"};
  const auto report = experiment1(c, m.split, opts, ModelConfig{}, 3);
  CHECK(report.experiment == 1);
  for (const auto& row : report.summary.at("features")) CHECK(row.at("winner") == "oracle");

  auto spec = fixture::small_spec(400, 17);
  spec.drift = 0.0;
  spec.noise = 0.0;
  const auto still = generate(spec).cohort;
  const auto split = split_ids(still, 0.3, 1);
  Experiment1Options plain;
  plain.holdout = {"saturated_fat", "sodium", "ldl"};
  plain.binary_holdout.clear();
  plain.estimators = {"ridge", "knn", "cart"};
  const auto r2 = experiment1(still, split, plain, ModelConfig{}, 3);
  for (const auto& row : r2.summary.at("features")) CHECK(row.at("winner") == "carry");
  CHECK(r2.summary.at("continuous_learned_wins") == 0);
}

TEST_CASE("choose_holdout picks continuous changeable features measured at the visit") {
  const auto& c = fixture::small_cohort();
  Experiment1Options opts;
  const auto h = choose_holdout(c, opts, 9);
  REQUIRE(h.size() == 4);
  CHECK(h.back() == "statin_use");
  for (std::size_t k = 0; k + 1 < h.size(); ++k) {
    const auto f = c.schema.index_of(h[k]);
    CHECK(c.schema.features[f].kind == FeatureKind::Continuous);
    CHECK(c.partition.of(f) != Partition::Unchangeable);
    CHECK(c.visit(2).column_of(f).has_value());
  }
  CHECK(choose_holdout(c, opts, 9) == h);
}

TEST_CASE("experiment 2 with identical arms has a near-zero gap") {
  const auto& c = fixture::default_synthetic().cohort;
  const auto& m = fixture::default_models();
  Experiment2Options opts;
  opts.identical_arms = true;
  opts.repeats = 1;
  const auto report = experiment2(c, m, ModelConfig{}, 1, opts);
  for (const char* v : {"v2", "v3"}) {
    CHECK(std::abs(report.summary.at("gap").at(v).get<double>()) < 0.02);
  }
  CHECK(report.series.size() == 4);
}

TEST_CASE("experiment 3: zero budget leaves every arm on the baseline") {
  const auto& c = fixture::small_cohort();
  const auto& m = fixture::small_models();
  Experiment3Options opts;
  opts.budget = 0.0;
  const auto report = experiment3(c, m, c.cost_model, opts, 5);
  REQUIRE(report.series.size() == 9);
  for (int v = 1; v <= 3; ++v) {
    const double base = report.point(v, "baseline").value;
    CHECK(report.point(v, "a").value == base);
    CHECK(report.point(v, "b").value == base);
  }
  CHECK(report.summary.at("infeasible") == 0);

  const auto dir = fixture::scratch_dir("series");
  emit_series(report, dir / "series.csv");
  const auto back = read_series(dir / "series.csv");
  REQUIRE(back.size() == report.series.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    CHECK(back[k].visit == report.series[k].visit);
    CHECK(back[k].arm == report.series[k].arm);
    CHECK(back[k].value == report.series[k].value);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("experiment 3 at a positive budget is feasible, ordered and deterministic") {
  const auto& c = fixture::small_cohort();
  const auto& m = fixture::small_models();
  Experiment3Options opts;
  opts.budget = 2.0;
  const auto a = experiment3(c, m, c.cost_model, opts, 5);
  const auto b = experiment3(c, m, c.cost_model, opts, 5);
  CHECK(to_json(a).dump() == to_json(b).dump());
  CHECK(a.summary.at("infeasible") == 0);
  CHECK(a.point(1, "a").value < a.point(1, "baseline").value);
  CHECK(a.point(1, "b").value == a.point(1, "a").value);
  CHECK(a.point(2, "b").value <= a.point(2, "a").value + 1e-12);
}

TEST_CASE("simulate_patient fills one value per present visit") {
  const auto& c = fixture::small_cohort();
  const auto& m = fixture::small_models();
  const auto& id = *std::find_if(c.visit(3).ids.begin(), c.visit(3).ids.end(),
                                 [&](const std::string& s) { return m.split.test.count(s) > 0; });
  const auto arms = simulate_patient(c, m, id, c.cost_model, c.raw_bounds, Experiment3Options{});
  CHECK(arms.visits == std::vector<int>{1, 2, 3});
  CHECK(arms.baseline.size() == 3);
  CHECK(arms.recommendations.size() == 2);
  for (const auto& r : arms.recommendations) CHECK(r.cost_spent <= 2.0 + 1e-9);
  CHECK_THROWS_AS(
      simulate_patient(c, m, "nobody", c.cost_model, c.raw_bounds, Experiment3Options{}),
      UnknownIdError);
}

TEST_CASE("recommend and sweep for one patient") {
  const auto& c = fixture::small_cohort();
  const auto& m = fixture::small_models();
  const auto& id = c.visit(1).ids[3];
  const auto zero = recommend(c, m, id, c.cost_model, c.raw_bounds, 0.0);
  CHECK(zero.delta_std.cwiseAbs().maxCoeff() == 0.0);
  CHECK(zero.after_probability == zero.before_probability);
  const auto two = recommend(c, m, id, c.cost_model, c.raw_bounds, 2.0);
  CHECK(two.cost_spent <= 2.0 + 1e-9);
  CHECK(two.after_probability <= two.before_probability);
  CHECK(!two.trajectory.empty());
  const std::vector<double> budgets = {0.0, 1.0, 2.0, 4.0};
  const auto sweep = recommend_sweep(c, m, id, c.cost_model, c.raw_bounds, budgets);
  REQUIRE(sweep.size() == 4);
  for (std::size_t k = 1; k < sweep.size(); ++k) {
    CHECK(sweep[k].after_probability <= sweep[k - 1].after_probability + 1e-12);
  }
  const auto j = recommendation_to_json(c, two, id, 2.0);
  CHECK(j.at("features").size() == c.partition.direct.size());
  CHECK(j.at("indirect").size() == c.partition.indirect.size());
  CHECK_THROWS_AS(recommend(c, m, "nobody", c.cost_model, c.raw_bounds, 1.0), UnknownIdError);
  CHECK_THROWS_AS(recommend(c, m, id, c.cost_model, c.raw_bounds, -1.0), ConfigError);
}

TEST_CASE("model config JSON round trip") {
  ModelConfig cfg;
  cfg.indirect_bandwidth = 0.7;
  cfg.plan.overrides["ldl"] = ModelKind::Knn;
  const auto j = to_json(cfg);
  CHECK(to_json(model_config_from_json(j)).dump() == j.dump());
  CHECK_THROWS_AS(model_config_from_json(nlohmann::json{{"bogus", 1}}), ConfigError);
}
