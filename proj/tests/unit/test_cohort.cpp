#include "doctest.h"

#include "fixtures.hpp"

#include "longic/cohort.hpp"
#include "longic/error.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

using namespace longic;

namespace {

Cohort tiny_cohort() {
  Cohort c;
  c.schema.features = {{"age", FeatureKind::Continuous, "years"},
                       {"ldl", FeatureKind::Continuous, "mg/dL"},
                       {"exercise", FeatureKind::Continuous, "h"},
                       {"smoker", FeatureKind::Binary, ""}};
  c.partition.unchangeable = {0};
  c.partition.indirect = {1};
  c.partition.direct = {2, 3};
  c.cost_model = CostModel({{10, 10}, {kLockedCost, 5}});
  c.raw_bounds = {Eigen::Vector2d(0, 0), Eigen::Vector2d(20, 1)};
  VisitDataset v1;
  v1.visit = 1;
  v1.ids = {"a", "b", "c"};
  v1.present = {0, 1, 2, 3};
  v1.X.resize(3, 4);
  v1.X << 50, 120, 3, 1, 61, 140, 1, 0, 45, 100, 5, 0;
  v1.y_next = {0, 1, 0};
  VisitDataset v2;
  v2.visit = 2;
  v2.ids = {"a", "c"};
  v2.present = {0, 2, 3};
  v2.X.resize(2, 3);
  v2.X << 51, 3.5, 1, 46, 4, 0;
  v2.y_next = {0, 1};
  c.visits = {v1, v2};
  return c;
}

VisitDataset rows(int visit, std::vector<std::string> ids, std::vector<int> y) {
  VisitDataset d;
  d.visit = visit;
  d.present = {0};
  d.X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ids.size()), 1);
  for (Eigen::Index r = 0; r < d.X.rows(); ++r) d.X(r, 0) = static_cast<double>(r);
  d.ids = std::move(ids);
  d.y_next = std::move(y);
  return d;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_visits(const std::vector<VisitDataset>& a, const std::vector<VisitDataset>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].ids != b[k].ids || a[k].y_next != b[k].y_next || a[k].present != b[k].present) {
      return false;
    }
    if (a[k].X.rows() != b[k].X.rows() || a[k].X != b[k].X) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("well-formed cohort validates and round-trips through files") {
  const auto c = tiny_cohort();
  CHECK_NOTHROW(validate_cohort(c));
  const auto dir = fixture::scratch_dir("cohort_rt");
  save_cohort(c, dir);
  const auto back = load_cohort(dir);
  CHECK(back.num_visits() == 2);
  CHECK(back.schema.size() == 4);
  CHECK(same_visits(back.visits, c.visits));
  CHECK(back.cost_model[1].up == kLockedCost);
  CHECK(back.cost_model[1].down == 5.0);
  CHECK(back.raw_bounds.upper[0] == 20.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("generated cohort round-trips bit-exactly") {
  const auto& c = fixture::small_cohort();
  const auto dir = fixture::scratch_dir("cohort_gen_rt");
  save_cohort(c, dir);
  const auto back = load_cohort(dir);
  CHECK(back.num_visits() == 3);
  CHECK(same_visits(back.visits, c.visits));
  std::filesystem::remove_all(dir);
}

TEST_CASE("continuity violation is reported") {
  auto c = tiny_cohort();
  c.visits[1].ids[1] = "zz";
  try {
    validate_cohort(c);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("continuity violated") != std::string::npos);
  }
}

TEST_CASE("event exclusion violation is reported") {
  auto c = tiny_cohort();
  c.visits[1].ids[1] = "b";  // b had y_next = 1 at visit 1
  try {
    validate_cohort(c);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("event exclusion violated") != std::string::npos);
  }
}

TEST_CASE("visit files reject extra columns and non-binary values") {
  const auto c = tiny_cohort();
  const auto dir = fixture::scratch_dir("cohort_bad");
  {
    std::ofstream out(dir / "extra.csv");
    out << "id,age,ldl,exercise,smoker,shoe_size,y_next\na,1,2,3,0,44,0\n";
  }
  CHECK_THROWS_AS(read_visit_file(dir / "extra.csv", c.schema, 1), DataError);
  {
    std::ofstream out(dir / "nonbinary.csv");
    out << "id,age,ldl,exercise,smoker,y_next\na,1,2,3,0.5,0\n";
  }
  CHECK_THROWS_AS(read_visit_file(dir / "nonbinary.csv", c.schema, 1), DataError);
  {
    std::ofstream out(dir / "badlabel.csv");
    out << "id,age,ldl,exercise,smoker,y_next\na,1,2,3,0,2\n";
  }
  CHECK_THROWS_AS(read_visit_file(dir / "badlabel.csv", c.schema, 1), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("enforce_exclusion drops an instance after its event") {
  std::vector<VisitDataset> v = {rows(1, {"1", "7", "9"}, {0, 1, 0}),
                                 rows(2, {"1", "7", "9"}, {0, 0, 0}),
                                 rows(3, {"1", "7"}, {0, 0})};
  const auto out = enforce_exclusion(v);
  CHECK(out[0].ids == v[0].ids);
  CHECK(out[1].ids == std::vector<std::string>{"1", "9"});
  CHECK(out[2].ids == std::vector<std::string>{"1"});
  CHECK(out[1].X.rows() == 2);
  CHECK(out[1].X(1, 0) == 2.0);  // row of "9" kept with its own values
}

TEST_CASE("enforce_exclusion is the identity without events") {
  std::vector<VisitDataset> v = {rows(1, {"a", "b"}, {0, 0}), rows(2, {"a", "b"}, {0, 0})};
  CHECK(same_visits(enforce_exclusion(v), v));
}

TEST_CASE("enforce_exclusion matches a set-difference oracle and is idempotent") {
  std::mt19937_64 rng(3);
  std::vector<std::string> ids;
  for (int i = 0; i < 100; ++i) ids.push_back("p" + std::to_string(i));
  std::vector<int> y1(100, 0);
  std::vector<std::size_t> order(100);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::set<std::string> positives;
  for (int k = 0; k < 10; ++k) {
    y1[order[static_cast<std::size_t>(k)]] = 1;
    positives.insert(ids[order[static_cast<std::size_t>(k)]]);
  }
  std::vector<int> y2(100, 0);
  const std::vector<VisitDataset> v = {rows(1, ids, y1), rows(2, ids, y2)};
  const auto out = enforce_exclusion(v);

  std::vector<std::string> expected;
  for (const auto& id : ids) {
    if (!positives.count(id)) expected.push_back(id);
  }
  CHECK(out[1].ids == expected);
  CHECK(out[1].rows() <= 90);
  for (const auto& id : out[1].ids) CHECK(positives.count(id) == 0);
  CHECK(same_visits(enforce_exclusion(out), out));
}

TEST_CASE("missing_feature_set follows the measured subsets") {
  // 122 visit-1 features, 98 measured at visit 2, 74 at visit 3.
  Cohort c;
  for (int f = 0; f < 122; ++f) c.schema.features.push_back({"f" + std::to_string(f), FeatureKind::Continuous, ""});
  auto visit = [](int v, int measured) {
    VisitDataset d;
    d.visit = v;
    for (int f = 0; f < measured; ++f) d.present.push_back(static_cast<std::size_t>(f));
    d.X.resize(0, measured);
    return d;
  };
  c.visits = {visit(1, 122), visit(2, 98), visit(3, 74)};
  CHECK(missing_feature_set(c, 1).empty());
  const auto m2 = missing_feature_set(c, 2);
  const auto m3 = missing_feature_set(c, 3);
  CHECK(m2.size() == 24);
  CHECK(m3.size() == 48);
  for (int v = 1; v <= 3; ++v) {
    const auto m = missing_feature_set(c, v);
    std::set<std::size_t> all(m.begin(), m.end());
    for (auto f : c.visit(v).present) {
      CHECK(all.count(f) == 0);
      all.insert(f);
    }
    CHECK(all.size() == 122);
  }
  CHECK_THROWS_AS(missing_feature_set(c, 4), DataError);
  CHECK_THROWS_AS(missing_feature_set(c, 0), DataError);
}

TEST_CASE("schema and partition validation") {
  auto c = tiny_cohort();
  CHECK(c.schema.index_of("ldl") == 1);
  CHECK_THROWS_AS(c.schema.index_of("nope"), DataError);
  CHECK_FALSE(c.schema.find("nope").has_value());
  c.partition.direct = {2};
  CHECK_THROWS_AS(c.partition.validate(4), DataError);  // index 3 uncovered
  c.partition.direct = {2, 3, 1};
  CHECK_THROWS_AS(c.partition.validate(4), DataError);  // overlap with I
  CHECK(tiny_cohort().partition.of(1) == Partition::Indirect);
}

TEST_CASE("cohort config survives save and load") {
  const auto c = tiny_cohort();
  const auto dir = fixture::scratch_dir("cohort_cfg");
  const auto cfg = config_of(c);
  save_cohort_config(cfg, dir / "cohort.json");
  const auto back = load_cohort_config(dir / "cohort.json");
  CHECK(back.schema.size() == cfg.schema.size());
  CHECK(back.partition.direct == cfg.partition.direct);
  CHECK(back.partition.indirect == cfg.partition.indirect);
  CHECK(back.visit_files == cfg.visit_files);
  CHECK(back.raw_bounds.lower == cfg.raw_bounds.lower);
  CHECK(slurp(dir / "cohort.json").size() > 0);
  std::filesystem::remove_all(dir);
}
