#include "longic/missing_features.hpp"

#include "longic/csv.hpp"
#include "longic/error.hpp"
#include "longic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace longic {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<Eigen::Index> rows_in(const std::vector<std::string>& ids, const IdSet* keep) {
  std::vector<Eigen::Index> out;
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (keep == nullptr || keep->count(ids[r])) out.push_back(static_cast<Eigen::Index>(r));
  }
  return out;
}

/// Visit-1 values of schema features `features` for the selected rows.
Eigen::MatrixXd visit1_block(const VisitDataset& v1, const std::vector<Eigen::Index>& rows,
                             const std::vector<std::size_t>& features) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(features.size()));
  for (std::size_t c = 0; c < features.size(); ++c) {
    const auto col = v1.column_of(features[c]);
    if (!col) throw DataError("visit 1 lacks a schema feature");
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          v1.X(rows[r], static_cast<Eigen::Index>(*col));
    }
  }
  return out;
}

Eigen::MatrixXd columns_of(const VisitDataset& data, const std::vector<Eigen::Index>& rows,
                           const std::vector<std::size_t>& features) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(features.size()));
  for (std::size_t c = 0; c < features.size(); ++c) {
    const auto col = data.column_of(features[c]);
    if (!col) {
      throw DataError("feature index " + std::to_string(features[c]) +
                      " is not measured at visit " + std::to_string(data.visit));
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          data.X(rows[r], static_cast<Eigen::Index>(*col));
    }
  }
  return out;
}

std::vector<FeatureKind> kinds_of(const FeatureSchema& schema,
                                  const std::vector<std::size_t>& features) {
  std::vector<FeatureKind> out;
  for (auto f : features) out.push_back(schema.features[f].kind);
  return out;
}

std::vector<int> as_labels(const Eigen::VectorXd& v) {
  std::vector<int> out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = v[i] >= 0.5 ? 1 : 0;
  return out;
}

std::vector<double> as_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

MissingFeaturePlan fit_plan(const Cohort& cohort, int v, const PlanOptions& options,
                            const IdSet* train_ids) {
  MissingFeaturePlan plan;
  plan.visit = v;
  plan.schema_size = cohort.schema.size();
  const auto& data = cohort.visit(v);
  for (auto f : data.present) {
    if (f >= cohort.schema.size()) throw DataError("visit feature outside the visit-1 schema");
  }
  plan.consumed = data.present;
  const auto missing = missing_feature_set(cohort, v);
  if (missing.empty()) return plan;

  const auto& v1 = cohort.visit(1);
  const auto rows = rows_in(v1.ids, train_ids);
  const Eigen::MatrixXd X = visit1_block(v1, rows, plan.consumed);
  const auto kinds = kinds_of(cohort.schema, plan.consumed);
  for (auto m : missing) {
    const auto& feature = cohort.schema.features[m];
    MissingEstimator est;
    est.feature = m;
    est.kind = feature.kind;
    const auto over = options.overrides.find(feature.name);
    est.model = over != options.overrides.end()
                    ? over->second
                    : (feature.kind == FeatureKind::Binary ? options.binary : options.continuous);
    const Eigen::VectorXd target = visit1_block(v1, rows, {m}).col(0);
    try {
      if (feature.kind == FeatureKind::Binary) {
        est.classifier = fit_classifier(est.model, X, as_labels(target), options.hyper, kinds);
      } else {
        est.regressor = fit_regressor(est.model, X, as_std(target), options.hyper, kinds);
      }
    } catch (const TrainingError& e) {
      throw TrainingError("missing-feature estimator for '" + feature.name + "': " + e.what());
    }
    plan.estimators.push_back(std::move(est));
  }
  return plan;
}

EnrichedRows enrich(const MissingFeaturePlan& plan, const VisitDataset& dataset) {
  std::vector<Eigen::Index> all(dataset.rows());
  for (std::size_t r = 0; r < all.size(); ++r) all[r] = static_cast<Eigen::Index>(r);
  const Eigen::MatrixXd inputs = columns_of(dataset, all, plan.consumed);
  if (!inputs.allFinite()) throw DataError("enrich: non-finite measured values");

  EnrichedRows out;
  const auto n = static_cast<Eigen::Index>(dataset.rows());
  out.X = Eigen::MatrixXd::Constant(n, static_cast<Eigen::Index>(plan.schema_size), kNaN);
  for (std::size_t c = 0; c < dataset.present.size(); ++c) {
    out.X.col(static_cast<Eigen::Index>(dataset.present[c])) =
        dataset.X.col(static_cast<Eigen::Index>(c));
  }
  Eigen::Index binary_count = 0;
  for (const auto& e : plan.estimators) binary_count += e.kind == FeatureKind::Binary ? 1 : 0;
  out.binary_probability.resize(n, binary_count);
  Eigen::Index b = 0;
  for (const auto& e : plan.estimators) {
    const auto col = static_cast<Eigen::Index>(e.feature);
    if (e.kind == FeatureKind::Binary) {
      const Eigen::VectorXd p = e.classifier->predict_proba_rows(inputs);
      out.binary_probability.col(b++) = p;
      out.X.col(col) = (p.array() >= 0.5).cast<double>().matrix();
    } else {
      out.X.col(col) = e.regressor->predict_rows(inputs);
    }
  }
  if (!out.X.allFinite()) {
    throw DataError("enrich: visit " + std::to_string(dataset.visit) +
                    " lacks features the plan does not estimate");
  }
  return out;
}

Eigen::MatrixXd carry_forward(const Cohort& cohort, int v) {
  const auto& data = cohort.visit(v);
  const auto& v1 = cohort.visit(1);
  const auto index = index_ids(v1.ids);
  const auto p1 = static_cast<Eigen::Index>(cohort.schema.size());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(data.rows()), p1);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const auto it = index.find(data.ids[r]);
    if (it == index.end()) {
      throw DataError("continuity violated: id '" + data.ids[r] + "' has no visit-1 row");
    }
    for (Eigen::Index f = 0; f < p1; ++f) {
      const auto col = v1.column_of(static_cast<std::size_t>(f));
      out(static_cast<Eigen::Index>(r), f) =
          v1.X(static_cast<Eigen::Index>(it->second), static_cast<Eigen::Index>(*col));
    }
    for (std::size_t c = 0; c < data.present.size(); ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(data.present[c])) =
          data.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Estimator comparison

const ScoreCell& ScoreTable::at(std::string_view feature, std::string_view estimator) const {
  for (const auto& c : cells) {
    if (c.feature == feature && c.estimator == estimator) return c;
  }
  throw ConfigError("score table has no cell (" + std::string(feature) + ", " +
                    std::string(estimator) + ")");
}

std::string ScoreTable::winner(std::string_view feature) const {
  const ScoreCell* best = nullptr;
  for (const auto& c : cells) {
    if (c.feature != feature || std::isnan(c.value)) continue;
    const bool better = best == nullptr ||
                        (c.metric == "auc" ? c.value > best->value : c.value < best->value);
    if (better) best = &c;
  }
  if (best == nullptr) throw ConfigError("no scored estimator for '" + std::string(feature) + "'");
  return best->estimator;
}

void ScoreTable::write_csv(const std::filesystem::path& file) const {
  csv::Table table;
  table.header = {"feature", "kind", "metric_name", "value"};
  for (const auto& c : cells) {
    table.rows.push_back({c.feature, c.estimator, c.metric,
                          std::isnan(c.value) ? std::string("nan") : csv::format_double(c.value)});
  }
  csv::write(table, file);
}

ScoreTable evaluate_estimators(const Cohort& cohort, int v, std::span<const std::string> holdout,
                               std::span<const std::string> estimators,
                               const EvaluationOptions& options) {
  if (v < 2) throw ConfigError("estimator evaluation needs v >= 2");
  const auto& data = cohort.visit(v);
  const auto& v1 = cohort.visit(1);

  std::vector<std::size_t> held;
  for (const auto& name : holdout) {
    const auto idx = cohort.schema.index_of(name);
    if (!data.column_of(idx)) {
      throw ConfigError("holdout feature '" + name + "' is not measured at visit " +
                        std::to_string(v));
    }
    held.push_back(idx);
  }
  std::vector<std::size_t> consumed;
  for (auto f : data.present) {
    if (std::find(held.begin(), held.end(), f) == held.end()) consumed.push_back(f);
  }
  if (consumed.empty()) throw ConfigError("no measured features remain after the holdout");

  ScoreTable table;
  table.features.assign(holdout.begin(), holdout.end());
  table.estimators.push_back("carry");
  for (const auto& e : estimators) {
    if (std::find(table.estimators.begin(), table.estimators.end(), e) == table.estimators.end()) {
      table.estimators.push_back(e);
    }
  }

  const auto train_rows = rows_in(v1.ids, options.train_ids);
  const auto test_rows = rows_in(data.ids, options.test_ids);
  if (train_rows.size() < 2 || test_rows.empty()) {
    throw ConfigError("estimator evaluation: too few training or test rows");
  }
  const Eigen::MatrixXd X_train = visit1_block(v1, train_rows, consumed);
  const Eigen::MatrixXd X_test = columns_of(data, test_rows, consumed);
  const auto kinds = kinds_of(cohort.schema, consumed);

  // Visit-1 values of the test ids, for carry-forward.
  const auto v1_index = index_ids(v1.ids);
  std::vector<Eigen::Index> test_in_v1;
  for (auto r : test_rows) {
    const auto& id = data.ids[static_cast<std::size_t>(r)];
    const auto it = v1_index.find(id);
    if (it == v1_index.end()) throw DataError("continuity violated: id '" + id + "'");
    test_in_v1.push_back(static_cast<Eigen::Index>(it->second));
  }

  for (std::size_t h = 0; h < held.size(); ++h) {
    const auto m = held[h];
    const auto& feature = cohort.schema.features[m];
    const bool binary = feature.kind == FeatureKind::Binary;
    const Eigen::VectorXd train_target = visit1_block(v1, train_rows, {m}).col(0);
    const Eigen::VectorXd truth = columns_of(data, test_rows, {m}).col(0);
    const Eigen::VectorXd carried = visit1_block(v1, test_in_v1, {m}).col(0);
    const auto truth_labels = as_labels(truth);

    auto score = [&](const Eigen::VectorXd& prediction) {
      if (!binary) return mse(as_std(prediction), as_std(truth));
      try {
        return auc(as_std(prediction), truth_labels);
      } catch (const DataError&) {
        return kNaN;  // single-class truth
      }
    };

    for (const auto& name : table.estimators) {
      ScoreCell cell;
      cell.feature = feature.name;
      cell.feature_kind = feature.kind;
      cell.estimator = name;
      cell.metric = binary ? "auc" : "mse";
      if (name == "carry") {
        cell.value = score(carried);
      } else if (name == "oracle") {
        cell.value = score(truth);
      } else if (name == "constant") {
        cell.value = score(Eigen::VectorXd::Constant(truth.size(), train_target.mean()));
      } else {
        const auto kind = parse_model_kind(name);
        if (binary && kind == ModelKind::Ridge) {
          cell.value = kNaN;
        } else if (!binary && kind == ModelKind::Logistic) {
          cell.value = kNaN;
        } else {
          try {
            if (binary) {
              const auto clf = fit_classifier(kind, X_train, as_labels(train_target),
                                              options.hyper, kinds);
              cell.value = score(clf->predict_proba_rows(X_test));
            } else {
              const auto reg =
                  fit_regressor(kind, X_train, as_std(train_target), options.hyper, kinds);
              cell.value = score(reg->predict_rows(X_test));
            }
          } catch (const TrainingError& e) {
            // One estimator failing does not invalidate the comparison; the cell says why.
            cell.value = kNaN;
            cell.error = e.what();
          }
        }
      }
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

}  // namespace longic
