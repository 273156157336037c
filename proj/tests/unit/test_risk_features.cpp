#include "doctest.h"

#include "fixtures.hpp"

#include "longic/error.hpp"
#include "longic/risk_features.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

using namespace longic;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

DesignMatrix visit1_design(const Cohort& c) {
  const auto& v1 = c.visit(1);
  return {1, v1.ids, v1.X, v1.y_next, {}};
}

}  // namespace

TEST_CASE("estimate_risk of a constant classifier") {
  const auto& c = fixture::small_cohort();
  const ConstantClassifier clf(static_cast<Eigen::Index>(c.schema.size()), 0.3);
  const VectorXd r = estimate_risk(clf, c.visit(1).X);
  CHECK(r.size() == static_cast<Eigen::Index>(c.visit(1).rows()));
  CHECK((r.array() == 0.3).all());
  CHECK_THROWS_AS(estimate_risk(clf, c.visit(2).X), DimensionError);
}

TEST_CASE("trained visit-1 svm is calibrated to the base rate") {
  const auto& c = fixture::default_synthetic().cohort;
  const auto& v1 = c.visit(1);
  const auto clf = fit_svm(v1.X, v1.y_next, ModelConfig{}.svm, c.schema.kinds());
  const VectorXd r = estimate_risk(*clf, v1.X);
  const double rate =
      std::count(v1.y_next.begin(), v1.y_next.end(), 1) / static_cast<double>(v1.rows());
  CHECK(std::abs(r.mean() - rate) < 0.05);
  CHECK(r.minCoeff() >= 0.0);
  CHECK(r.maxCoeff() <= 1.0);
}

TEST_CASE("augment_with_risk appends one column per earlier visit from the same id") {
  const auto& c = fixture::small_cohort();
  const auto& v1 = c.visit(1);
  const auto f1 = fit_logistic(v1.X, v1.y_next);
  const std::vector<DesignMatrix> earlier = {visit1_design(c)};
  const std::vector<ClassifierPtr> clfs = {f1};

  VisitDataset base = c.visit(2);
  const auto aug = augment_with_risk(base, earlier, clfs);
  CHECK(aug.risk.cols() == 1);
  CHECK(aug.augmented().cols() == static_cast<Eigen::Index>(base.present.size()) + 1);
  CHECK(aug.provenance.size() == 1);
  const auto index = index_ids(v1.ids);
  for (std::size_t r = 0; r < base.rows(); ++r) {
    const auto row = static_cast<Eigen::Index>(index.at(base.ids[r]));
    CHECK(aug.risk(static_cast<Eigen::Index>(r), 0) == f1->predict_proba(v1.X.row(row).transpose()));
  }
  CHECK((aug.risk.array() >= 0.0).all());
  CHECK((aug.risk.array() <= 1.0).all());
  CHECK(aug.augmented().leftCols(base.X.cols()) == base.X);

  // v = 3 gets two columns
  const ConstantClassifier f2(static_cast<Eigen::Index>(c.schema.size()) + 1, 0.9);
  DesignMatrix d2{2, c.visit(2).ids, MatrixXd::Zero(static_cast<Eigen::Index>(c.visit(2).rows()),
                                                    static_cast<Eigen::Index>(c.schema.size()) + 1),
                  c.visit(2).y_next, {}};
  const std::vector<DesignMatrix> two = {visit1_design(c), d2};
  const std::vector<ClassifierPtr> two_clfs = {f1, std::make_shared<ConstantClassifier>(f2)};
  const auto aug3 = augment_with_risk(c.visit(3), two, two_clfs);
  CHECK(aug3.risk.cols() == 2);
  CHECK((aug3.risk.col(1).array() == 0.9).all());
  CHECK(aug3.augmented().cols() == static_cast<Eigen::Index>(c.visit(3).present.size()) + 2);
}

TEST_CASE("augment_with_risk is permutation equivariant") {
  const auto& c = fixture::small_cohort();
  const auto& v1 = c.visit(1);
  const auto f1 = fit_logistic(v1.X, v1.y_next);
  const std::vector<DesignMatrix> earlier = {visit1_design(c)};
  const std::vector<ClassifierPtr> clfs = {f1};
  const auto& base = c.visit(2);
  std::vector<std::size_t> perm(base.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(4));
  VisitDataset shuffled = base;
  for (std::size_t r = 0; r < perm.size(); ++r) {
    shuffled.ids[r] = base.ids[perm[r]];
    shuffled.y_next[r] = base.y_next[perm[r]];
    shuffled.X.row(static_cast<Eigen::Index>(r)) = base.X.row(static_cast<Eigen::Index>(perm[r]));
  }
  const auto a = augment_with_risk(base, earlier, clfs).augmented();
  const auto b = augment_with_risk(shuffled, earlier, clfs).augmented();
  for (std::size_t r = 0; r < perm.size(); ++r) {
    CHECK(b.row(static_cast<Eigen::Index>(r)) == a.row(static_cast<Eigen::Index>(perm[r])));
  }
}

TEST_CASE("augment_with_risk errors") {
  const auto& c = fixture::small_cohort();
  const auto& v1 = c.visit(1);
  const auto f1 = fit_logistic(v1.X, v1.y_next);
  auto design = visit1_design(c);
  design.ids.erase(design.ids.begin());
  design.X = MatrixXd(design.X.bottomRows(design.X.rows() - 1));
  design.y_next.erase(design.y_next.begin());
  // visit-2 rows that were dropped from the earlier design break continuity
  VisitDataset base = c.visit(2);
  base.ids[0] = v1.ids[0];
  const std::vector<DesignMatrix> earlier = {design};
  const std::vector<ClassifierPtr> clfs = {f1};
  CHECK_THROWS_AS(augment_with_risk(base, earlier, clfs), DataError);
  const std::vector<ClassifierPtr> none;
  CHECK_THROWS_AS(augment_with_risk(c.visit(2), earlier, none), DimensionError);
}

TEST_CASE("carry-forward augmentation concatenates every earlier visit") {
  const auto& c = fixture::small_cohort();
  const auto p1 = c.visit(1).present.size();
  const auto p2 = c.visit(2).present.size();
  const auto p3 = c.visit(3).present.size();
  const auto d2 = augment_with_carryforward(c, 2);
  CHECK(d2.X.cols() == static_cast<Eigen::Index>(p1 + p2));
  CHECK(d2.columns.size() == p1 + p2);
  const auto index = index_ids(c.visit(1).ids);
  for (std::size_t r = 0; r < d2.rows(); ++r) {
    const auto row = static_cast<Eigen::Index>(index.at(d2.ids[r]));
    CHECK(d2.X.row(static_cast<Eigen::Index>(r)).head(static_cast<Eigen::Index>(p1)) ==
          c.visit(1).X.row(row));
  }
  const auto d3 = augment_with_carryforward(c, 3);
  CHECK(d3.X.cols() == static_cast<Eigen::Index>(p1 + p2 + p3));
  CHECK_THROWS_AS(augment_with_carryforward(c, 1), ConfigError);
}

TEST_CASE("design files name risk columns by source visit") {
  CHECK(risk_column_name(1) == "risk_from_v1");
  const auto& m = fixture::small_models();
  const auto& d3 = m.at(3).design;
  CHECK(d3.columns[d3.columns.size() - 2] == "risk_from_v1");
  CHECK(d3.columns.back() == "risk_from_v2");
  const auto dir = fixture::scratch_dir("design");
  write_design_file(d3, dir / "v3.csv");
  std::ifstream in(dir / "v3.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("id,", 0) == 0);
  CHECK(header.find("risk_from_v2,y_next") != std::string::npos);
  std::filesystem::remove_all(dir);
}
