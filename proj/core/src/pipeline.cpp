#include "longic/pipeline.hpp"

#include "longic/csv.hpp"
#include "longic/error.hpp"
#include "longic/metrics.hpp"
#include "longic/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

namespace longic {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<Eigen::Index> rows_in(const std::vector<std::string>& ids, const IdSet& keep) {
  std::vector<Eigen::Index> out;
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (keep.count(ids[r])) out.push_back(static_cast<Eigen::Index>(r));
  }
  return out;
}

MatrixXd take_rows(const MatrixXd& X, const std::vector<Eigen::Index>& rows) {
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = X.row(rows[r]);
  return out;
}

MatrixXd take_cols(const MatrixXd& X, const std::vector<Eigen::Index>& cols) {
  MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = X.col(cols[c]);
  return out;
}

VectorXd gather(const VectorXd& x, const std::vector<Eigen::Index>& idx) {
  VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = x[idx[k]];
  return out;
}

void scatter(VectorXd& x, const std::vector<Eigen::Index>& idx, const VectorXd& values) {
  for (std::size_t k = 0; k < idx.size(); ++k) x[idx[k]] = values[static_cast<Eigen::Index>(k)];
}

std::vector<int> labels_of(const std::vector<int>& y, const std::vector<Eigen::Index>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y[static_cast<std::size_t>(r)]);
  return out;
}

double safe_auc(const VectorXd& scores, const std::vector<int>& labels) {
  try {
    return auc(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())),
               labels);
  } catch (const DataError&) {
    return kNaN;
  }
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  return csv::format_double(v);
}

std::vector<FeatureKind> design_kinds(const Cohort& cohort, std::size_t risk_columns) {
  auto kinds = cohort.schema.kinds();
  kinds.insert(kinds.end(), risk_columns, FeatureKind::Continuous);
  return kinds;
}

std::vector<FeatureKind> direct_kinds(const Cohort& cohort) {
  std::vector<FeatureKind> out;
  for (auto f : cohort.partition.direct) out.push_back(cohort.schema.features[f].kind);
  return out;
}

Bounds relaxed_bounds(const Cohort& cohort, const Bounds& bounds) {
  Bounds out = bounds.size() == 0
                   ? Bounds::unbounded(static_cast<Eigen::Index>(cohort.partition.direct.size()))
                   : bounds;
  const auto kinds = direct_kinds(cohort);
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    if (kinds[static_cast<std::size_t>(j)] == FeatureKind::Binary) {
      out.lower[j] = std::max(out.lower[j], 0.0);
      out.upper[j] = std::min(out.upper[j], 1.0);
    }
  }
  return out;
}

std::string kernel_name(KernelKind k) { return std::string(to_string(k)); }

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw ConfigError("model config must be an object");
  const auto only = [](const json& obj, std::initializer_list<std::string_view> keys,
                       const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
      (void)value;
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        throw ConfigError(where + ": unknown key '" + key + "'");
      }
    }
  };
  only(j, {"svm", "estimators", "indirect_bandwidth", "test_fraction"}, "model config");
  try {
    if (j.contains("svm")) {
      const auto& s = j.at("svm");
      only(s,
           {"kernel", "C", "gamma", "positive_weight", "epsilon", "platt_folds", "tolerance",
            "max_iterations"},
           "model config svm");
      if (s.contains("kernel")) c.svm.kernel = parse_kernel_kind(s.at("kernel").get<std::string>());
      c.svm.C = s.value("C", c.svm.C);
      if (s.contains("gamma")) {
        if (s.at("gamma").is_null()) {
          c.svm.gamma.reset();
        } else {
          c.svm.gamma = s.at("gamma").get<double>();
        }
      }
      c.svm.positive_weight = s.value("positive_weight", c.svm.positive_weight);
      c.svm.epsilon = s.value("epsilon", c.svm.epsilon);
      c.svm.platt_folds = s.value("platt_folds", c.svm.platt_folds);
      c.svm.smo.tolerance = s.value("tolerance", c.svm.smo.tolerance);
      c.svm.smo.max_iterations = s.value("max_iterations", c.svm.smo.max_iterations);
    }
    if (j.contains("estimators")) {
      const auto& e = j.at("estimators");
      only(e,
           {"continuous", "binary", "overrides", "k", "cart_max_depth", "cart_min_leaf",
            "ridge_lambda", "logistic_l2"},
           "model config estimators");
      if (e.contains("continuous")) {
        c.plan.continuous = parse_model_kind(e.at("continuous").get<std::string>());
      }
      if (e.contains("binary")) c.plan.binary = parse_model_kind(e.at("binary").get<std::string>());
      if (e.contains("overrides")) {
        for (const auto& [name, kind] : e.at("overrides").items()) {
          c.plan.overrides[name] = parse_model_kind(kind.get<std::string>());
        }
      }
      c.plan.hyper.k = e.value("k", c.plan.hyper.k);
      c.plan.hyper.cart.max_depth = e.value("cart_max_depth", c.plan.hyper.cart.max_depth);
      c.plan.hyper.cart.min_leaf = e.value("cart_min_leaf", c.plan.hyper.cart.min_leaf);
      c.plan.hyper.ridge_lambda = e.value("ridge_lambda", c.plan.hyper.ridge_lambda);
      c.plan.hyper.logistic_l2 = e.value("logistic_l2", c.plan.hyper.logistic_l2);
    }
    if (j.contains("indirect_bandwidth") && !j.at("indirect_bandwidth").is_null()) {
      c.indirect_bandwidth = j.at("indirect_bandwidth").get<double>();
    }
    c.test_fraction = j.value("test_fraction", c.test_fraction);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) {
    throw ConfigError("model config: test_fraction must lie strictly between 0 and 1");
  }
  if (!(c.svm.C > 0.0)) throw ConfigError("model config: svm C must be positive");
  if (c.indirect_bandwidth && !(*c.indirect_bandwidth > 0.0)) {
    throw ConfigError("model config: indirect_bandwidth must be positive");
  }
  return c;
}

json to_json(const ModelConfig& c) {
  json overrides = json::object();
  for (const auto& [name, kind] : c.plan.overrides) overrides[name] = std::string(to_string(kind));
  return {{"svm",
           {{"kernel", kernel_name(c.svm.kernel)},
            {"C", c.svm.C},
            {"gamma", c.svm.gamma ? json(*c.svm.gamma) : json(nullptr)},
            {"positive_weight", c.svm.positive_weight},
            {"epsilon", c.svm.epsilon},
            {"platt_folds", c.svm.platt_folds},
            {"tolerance", c.svm.smo.tolerance},
            {"max_iterations", c.svm.smo.max_iterations}}},
          {"estimators",
           {{"continuous", std::string(to_string(c.plan.continuous))},
            {"binary", std::string(to_string(c.plan.binary))},
            {"overrides", overrides},
            {"k", c.plan.hyper.k},
            {"cart_max_depth", c.plan.hyper.cart.max_depth},
            {"cart_min_leaf", c.plan.hyper.cart.min_leaf},
            {"ridge_lambda", c.plan.hyper.ridge_lambda},
            {"logistic_l2", c.plan.hyper.logistic_l2}}},
          {"indirect_bandwidth", c.indirect_bandwidth ? json(*c.indirect_bandwidth) : json(nullptr)},
          {"test_fraction", c.test_fraction}};
}

Split split_ids(const Cohort& cohort, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie strictly between 0 and 1");
  }
  const auto& v1 = cohort.visit(1);
  // Stratified by the visit-1 outcome so both halves see events.
  std::vector<std::string> pos, neg;
  for (std::size_t r = 0; r < v1.rows(); ++r) (v1.y_next[r] == 1 ? pos : neg).push_back(v1.ids[r]);
  std::mt19937_64 rng(seed);
  Split split;
  for (auto* group : {&pos, &neg}) {
    std::shuffle(group->begin(), group->end(), rng);
    const auto k = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(group->size())));
    for (std::size_t i = 0; i < group->size(); ++i) {
      (i < k ? split.test : split.train).insert((*group)[i]);
    }
  }
  return split;
}

// ---------------------------------------------------------------------------
// Training

const VisitModel& TrainedModels::at(int v) const {
  if (v < 1 || v > static_cast<int>(visits.size())) {
    throw DataError("no trained model for visit " + std::to_string(v));
  }
  return visits[static_cast<std::size_t>(v - 1)];
}

TrainedModels train_all(const Cohort& cohort, const ModelConfig& config, std::uint64_t seed) {
  validate_cohort(cohort);
  TrainedModels models;
  models.split = split_ids(cohort, config.test_fraction, seed);
  const auto p1 = cohort.schema.size();
  const auto relaxed = relaxed_bounds(cohort, cohort.raw_bounds);
  std::vector<DesignMatrix> designs;
  std::vector<ClassifierPtr> classifiers;

  for (int v = 1; v <= cohort.num_visits(); ++v) {
    try {
      VisitModel vm;
      vm.visit = v;
      const auto& data = cohort.visit(v);
      vm.plan = fit_plan(cohort, v, config.plan, &models.split.train);
      MatrixXd enriched = enrich(vm.plan, data).X;
      // Estimated direct features are kept inside their box so every row is a feasible start.
      for (const auto& e : vm.plan.estimators) {
        if (cohort.partition.of(e.feature) != Partition::Direct) continue;
        const auto d = static_cast<Eigen::Index>(
            std::lower_bound(cohort.partition.direct.begin(), cohort.partition.direct.end(),
                             e.feature) -
            cohort.partition.direct.begin());
        enriched.col(static_cast<Eigen::Index>(e.feature)) =
            enriched.col(static_cast<Eigen::Index>(e.feature))
                .cwiseMax(relaxed.lower[d])
                .cwiseMin(relaxed.upper[d]);
      }
      VisitDataset base;
      base.visit = v;
      base.ids = data.ids;
      base.X = enriched;
      base.y_next = data.y_next;
      for (std::size_t f = 0; f < p1; ++f) base.present.push_back(f);
      const auto augmented = augment_with_risk(base, designs, classifiers);

      vm.design.visit = v;
      vm.design.ids = data.ids;
      vm.design.y_next = data.y_next;
      vm.design.X = augmented.augmented();
      for (const auto& f : cohort.schema.features) vm.design.columns.push_back(f.name);
      for (int k = 1; k < v; ++k) vm.design.columns.push_back(risk_column_name(k));
      vm.rows = index_ids(vm.design.ids);
      vm.layout = make_layout(cohort.partition, p1, static_cast<std::size_t>(v - 1));

      const auto train = rows_in(vm.design.ids, models.split.train);
      const MatrixXd X_train = take_rows(vm.design.X, train);
      auto svm = config.svm;
      svm.seed = seed + static_cast<std::uint64_t>(v);
      const auto kinds = design_kinds(cohort, static_cast<std::size_t>(v - 1));
      vm.classifier = fit_svm(X_train, labels_of(vm.design.y_next, train), svm, kinds);
      vm.indirect = std::make_shared<const IndirectEstimator>(
          fit_indirect(take_cols(X_train, vm.layout.context), take_cols(X_train, vm.layout.direct),
                       take_cols(X_train, vm.layout.indirect), config.indirect_bandwidth));

      designs.push_back(vm.design);
      classifiers.push_back(vm.classifier);
      models.visits.push_back(std::move(vm));
    } catch (const TrainingError& e) {
      throw TrainingError("visit " + std::to_string(v) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("visit " + std::to_string(v) + ": " + e.what());
    }
  }
  return models;
}

// ---------------------------------------------------------------------------
// Patient-level arms

namespace {

/// Model input at visit v for a given direct vector and risk history.
VectorXd arm_instance(const VisitModel& vm, Eigen::Index row, const VectorXd& direct,
                      std::span<const double> history) {
  VectorXd x = vm.design.X.row(row).transpose();
  const auto p1 = vm.layout.dim - static_cast<Eigen::Index>(vm.visit - 1);
  if (static_cast<int>(history.size()) != vm.visit - 1) {
    throw DimensionError("risk history must hold one value per earlier visit");
  }
  for (std::size_t k = 0; k < history.size(); ++k) x[p1 + static_cast<Eigen::Index>(k)] = history[k];
  scatter(x, vm.layout.direct, direct);
  if (!vm.layout.indirect.empty()) {
    scatter(x, vm.layout.indirect, vm.indirect->predict(gather(x, vm.layout.context), direct));
  }
  return x;
}

Eigen::Index row_of(const VisitModel& vm, const std::string& id) {
  const auto it = vm.rows.find(id);
  if (it == vm.rows.end()) {
    throw UnknownIdError("unknown patient id '" + id + "' at visit " + std::to_string(vm.visit));
  }
  return static_cast<Eigen::Index>(it->second);
}

/// Direct values an arm uses at a later visit.
VectorXd carried_direct(const VectorXd& observed, const VectorXd& optimized,
                        const VectorXd& anchor, Injection injection, const Bounds& box) {
  if (injection == Injection::Overwrite) return optimized;
  VectorXd out = observed + (optimized - anchor);
  return out.cwiseMax(box.lower).cwiseMin(box.upper);
}

struct ArmRun {
  std::vector<int> visits;
  std::vector<double> baseline, a, b;
  std::vector<Recommendation> recs;
};

ArmRun run_arms(const Cohort& cohort, const TrainedModels& models, const std::string& id,
                const CostModel& costs, const Bounds& bounds, double budget,
                Injection injection, const SolverOptions& solver, bool with_b) {
  const auto kinds = direct_kinds(cohort);
  const auto box = relaxed_bounds(cohort, bounds);
  const BudgetSpec spec{budget, bounds};
  ArmRun run;
  std::vector<double> hist_base, hist_a, hist_b;
  VectorXd carried_a, anchor_a, carried_b, anchor_b;
  for (int v = 1; v <= static_cast<int>(models.visits.size()); ++v) {
    const auto& vm = models.at(v);
    const auto it = vm.rows.find(id);
    if (it == vm.rows.end()) {
      if (v == 1) throw UnknownIdError("unknown patient id '" + id + "'");
      break;  // nested ids: absent now means absent later
    }
    const auto row = static_cast<Eigen::Index>(it->second);
    const VectorXd observed = gather(vm.design.X.row(row).transpose(), vm.layout.direct);
    const auto& clf = *vm.classifier;
    run.visits.push_back(v);

    const VectorXd xb = arm_instance(vm, row, observed, hist_base);
    const double pb = clf.predict_proba(xb);

    double pa, pbb;
    if (v == 1) {
      auto rec = optimize(clf, vm.indirect.get(), xb, vm.layout, kinds, costs, spec, solver);
      pa = pbb = rec.after_probability;
      carried_a = carried_b = rec.direct_after;
      anchor_a = anchor_b = rec.direct_before;
      run.recs.push_back(std::move(rec));
    } else {
      const VectorXd da = carried_direct(observed, carried_a, anchor_a, injection, box);
      pa = clf.predict_proba(arm_instance(vm, row, da, hist_a));
      if (!with_b) {
        pbb = pa;
      } else if (v == 2) {
        const VectorXd start = arm_instance(vm, row, da, hist_b);
        auto rec = optimize(clf, vm.indirect.get(), start, vm.layout, kinds, costs, spec, solver);
        pbb = rec.after_probability;
        carried_b = rec.direct_after;
        anchor_b = observed;
        run.recs.push_back(std::move(rec));
      } else {
        const VectorXd db = carried_direct(observed, carried_b, anchor_b, injection, box);
        pbb = clf.predict_proba(arm_instance(vm, row, db, hist_b));
      }
    }
    run.baseline.push_back(pb);
    run.a.push_back(pa);
    run.b.push_back(pbb);
    hist_base.push_back(pb);
    hist_a.push_back(pa);
    hist_b.push_back(pbb);
  }
  return run;
}

}  // namespace

PatientArms simulate_patient(const Cohort& cohort, const TrainedModels& models,
                             const std::string& id, const CostModel& costs, const Bounds& bounds,
                             const Experiment3Options& options) {
  auto run = run_arms(cohort, models, id, costs, bounds, options.budget, options.injection,
                      options.solver, true);
  PatientArms out;
  out.id = id;
  out.visits = std::move(run.visits);
  out.baseline = std::move(run.baseline);
  out.strategy_a = std::move(run.a);
  out.strategy_b = std::move(run.b);
  out.recommendations = std::move(run.recs);
  return out;
}

VectorXd baseline_instance(const TrainedModels& models, const std::string& id, int v,
                           std::span<const double> history) {
  const auto& vm = models.at(v);
  const auto row = row_of(vm, id);
  const VectorXd observed = gather(vm.design.X.row(row).transpose(), vm.layout.direct);
  if (!history.empty()) return arm_instance(vm, row, observed, history);
  // Baseline history: each earlier visit's own baseline probability.
  std::vector<double> hist;
  for (int k = 1; k < v; ++k) {
    const auto& vk = models.at(k);
    const auto rk = row_of(vk, id);
    const VectorXd ok = gather(vk.design.X.row(rk).transpose(), vk.layout.direct);
    hist.push_back(vk.classifier->predict_proba(arm_instance(vk, rk, ok, hist)));
  }
  return arm_instance(vm, row, observed, hist);
}

namespace {

std::vector<TrajectoryPoint> trajectory_from(const Cohort& cohort, const TrainedModels& models,
                                             const std::string& id, const Recommendation& rec,
                                             const Bounds& bounds) {
  const auto box = relaxed_bounds(cohort, bounds);
  std::vector<TrajectoryPoint> out;
  std::vector<double> hist_base, hist_opt;
  for (int v = 1; v <= static_cast<int>(models.visits.size()); ++v) {
    const auto& vm = models.at(v);
    const auto it = vm.rows.find(id);
    if (it == vm.rows.end()) break;
    const auto row = static_cast<Eigen::Index>(it->second);
    const VectorXd observed = gather(vm.design.X.row(row).transpose(), vm.layout.direct);
    TrajectoryPoint pt;
    pt.visit = v;
    pt.baseline = vm.classifier->predict_proba(arm_instance(vm, row, observed, hist_base));
    if (v == 1) {
      pt.optimized = rec.after_probability;
    } else {
      const VectorXd d = carried_direct(observed, rec.direct_after, rec.direct_before,
                                        Injection::Overwrite, box);
      pt.optimized = vm.classifier->predict_proba(arm_instance(vm, row, d, hist_opt));
    }
    hist_base.push_back(pt.baseline);
    hist_opt.push_back(pt.optimized);
    out.push_back(pt);
  }
  return out;
}

}  // namespace

Recommendation recommend(const Cohort& cohort, const TrainedModels& models, const std::string& id,
                         const CostModel& costs, const Bounds& bounds, double budget,
                         const SolverOptions& options) {
  const auto& vm = models.at(1);
  const VectorXd x = baseline_instance(models, id, 1, {});
  auto rec = optimize(*vm.classifier, vm.indirect.get(), x, vm.layout, direct_kinds(cohort), costs,
                      BudgetSpec{budget, bounds}, options);
  rec.trajectory = trajectory_from(cohort, models, id, rec, bounds);
  return rec;
}

std::vector<Recommendation> recommend_sweep(const Cohort& cohort, const TrainedModels& models,
                                            const std::string& id, const CostModel& costs,
                                            const Bounds& bounds, std::span<const double> budgets,
                                            const SolverOptions& options) {
  const auto& vm = models.at(1);
  const VectorXd x = baseline_instance(models, id, 1, {});
  auto recs = sweep_budget(*vm.classifier, vm.indirect.get(), x, vm.layout, direct_kinds(cohort),
                           costs, bounds, budgets, options);
  for (auto& rec : recs) rec.trajectory = trajectory_from(cohort, models, id, rec, bounds);
  return recs;
}

json recommendation_to_json(const Cohort& cohort, const Recommendation& rec, const std::string& id,
                            double budget) {
  json features = json::array();
  for (std::size_t k = 0; k < cohort.partition.direct.size(); ++k) {
    const auto j = static_cast<Eigen::Index>(k);
    const auto& f = cohort.schema.features[cohort.partition.direct[k]];
    features.push_back({{"name", f.name},
                        {"unit", f.unit},
                        {"before_raw", rec.direct_before[j]},
                        {"after_raw", rec.direct_after[j]},
                        {"delta_std", rec.delta_std[j]},
                        {"cost_spent", rec.feature_cost[j]}});
  }
  json indirect = json::array();
  for (std::size_t k = 0; k < cohort.partition.indirect.size(); ++k) {
    if (static_cast<Eigen::Index>(k) >= rec.indirect_after.size()) break;
    const auto j = static_cast<Eigen::Index>(k);
    indirect.push_back({{"name", cohort.schema.features[cohort.partition.indirect[k]].name},
                        {"before", rec.indirect_before[j]},
                        {"after", rec.indirect_after[j]}});
  }
  json trajectory = json::array();
  for (const auto& p : rec.trajectory) {
    trajectory.push_back({{"visit", p.visit}, {"baseline", p.baseline}, {"optimized", p.optimized}});
  }
  return {{"id", id},
          {"budget", budget},
          {"cost_spent", rec.cost_spent},
          {"before_probability", rec.before_probability},
          {"after_probability", rec.after_probability},
          {"iterations", rec.iterations},
          {"features", features},
          {"indirect", indirect},
          {"objective_trace", rec.objective_trace},
          {"trajectory", trajectory}};
}

// ---------------------------------------------------------------------------
// Experiments

std::vector<std::string> choose_holdout(const Cohort& cohort, const Experiment1Options& options,
                                        std::uint64_t seed) {
  if (!options.holdout.empty()) return options.holdout;
  const auto& data = cohort.visit(options.visit);
  std::vector<std::string> pool;
  for (auto f : data.present) {
    const auto& feat = cohort.schema.features[f];
    if (feat.kind == FeatureKind::Continuous &&
        cohort.partition.of(f) != Partition::Unchangeable) {
      pool.push_back(feat.name);
    }
  }
  if (pool.size() < 3) throw ConfigError("experiment 1 needs three changeable continuous features");
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<std::string> out(pool.begin(), pool.begin() + 3);
  if (!options.binary_holdout.empty()) {
    const auto idx = cohort.schema.find(options.binary_holdout);
    if (idx && data.column_of(*idx) && cohort.schema.features[*idx].kind == FeatureKind::Binary) {
      out.push_back(options.binary_holdout);
    }
  }
  return out;
}

ExperimentReport experiment1(const Cohort& cohort, const Split& split,
                             const Experiment1Options& options, const ModelConfig& config,
                             std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const auto holdout = choose_holdout(cohort, options, seed);
  EvaluationOptions eval;
  eval.train_ids = &split.train;
  eval.test_ids = &split.test;
  eval.hyper = config.plan.hyper;
  eval.hyper.svm = config.svm;
  eval.hyper.svm.seed = seed;
  const auto table = evaluate_estimators(cohort, options.visit, holdout, options.estimators, eval);

  ExperimentReport report;
  report.experiment = 1;
  report.seed = seed;
  report.config = {{"visit", options.visit},
                   {"holdout", holdout},
                   {"estimators", table.estimators},
                   {"models", to_json(config)}};
  ReportTable scores{"scores", {"feature", "kind", "metric_name", "value", "error"}, {}};
  for (const auto& c : table.cells) {
    scores.rows.push_back({c.feature, c.estimator, c.metric, fmt(c.value), c.error});
  }
  report.tables.push_back(std::move(scores));

  ReportTable winners{"winners",
                      {"feature", "metric_name", "winner", "best_learned", "best_learned_value",
                       "carry_value", "learned_beats_carry"},
                      {}};
  json summary = json::array();
  int continuous_wins = 0, continuous_total = 0;
  for (const auto& feature : table.features) {
    const auto& carry = table.at(feature, "carry");
    const bool higher_better = carry.metric == "auc";
    std::string best;
    double best_value = kNaN;
    for (const auto& e : table.estimators) {
      if (e == "carry" || e == "oracle" || e == "constant") continue;
      const double v = table.at(feature, e).value;
      if (std::isnan(v)) continue;
      if (best.empty() || (higher_better ? v > best_value : v < best_value)) {
        best = e;
        best_value = v;
      }
    }
    const bool beats = !best.empty() && !std::isnan(carry.value) &&
                       (higher_better ? best_value > carry.value : best_value < carry.value);
    if (carry.metric == "mse") {
      ++continuous_total;
      continuous_wins += beats ? 1 : 0;
    }
    winners.rows.push_back({feature, carry.metric, table.winner(feature), best, fmt(best_value),
                            fmt(carry.value), beats ? "true" : "false"});
    summary.push_back({{"feature", feature},
                       {"metric", carry.metric},
                       {"winner", table.winner(feature)},
                       {"best_learned", best},
                       {"best_learned_value", number(best_value)},
                       {"carry_value", number(carry.value)},
                       {"learned_beats_carry", beats}});
  }
  report.tables.push_back(std::move(winners));
  report.summary = {{"features", summary},
                    {"continuous_learned_wins", continuous_wins},
                    {"continuous_features", continuous_total}};
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

ExperimentReport experiment2(const Cohort& cohort, const TrainedModels& models,
                             const ModelConfig& config, std::uint64_t seed,
                             const Experiment2Options& options) {
  if (cohort.num_visits() < 2) throw ConfigError("experiment 2 needs at least two visits");
  if (options.repeats < 1) throw ConfigError("experiment 2 needs at least one repeat");
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.experiment = 2;
  report.seed = seed;
  report.config = {{"identical_arms", options.identical_arms},
                   {"repeats", options.repeats},
                   {"models", to_json(config)}};
  ReportTable table{"auc",
                    {"visit", "repeat", "risk_auc", "carry_auc", "gap", "test_rows",
                     "test_positives"},
                    {}};
  const auto V = static_cast<std::size_t>(cohort.num_visits());
  std::vector<double> risk_sum(V + 1, 0.0), carry_sum(V + 1, 0.0);
  std::vector<std::size_t> test_rows(V + 1, 0), carry_rows(V + 1, 0);

  for (int rep = 0; rep < options.repeats; ++rep) {
    const auto rep_seed = seed + 7919 * static_cast<std::uint64_t>(rep);
    std::optional<TrainedModels> retrained;
    if (rep > 0) retrained = train_all(cohort, config, rep_seed);
    const TrainedModels& tm = rep == 0 ? models : *retrained;
    for (int v = 2; v <= cohort.num_visits(); ++v) {
      const auto& vm = tm.at(v);
      const auto test = rows_in(vm.design.ids, tm.split.test);
      const auto y_test = labels_of(vm.design.y_next, test);
      const double risk_auc =
          safe_auc(vm.classifier->predict_proba_rows(take_rows(vm.design.X, test)), y_test);

      DesignMatrix carry;
      std::vector<FeatureKind> kinds;
      if (options.identical_arms) {
        carry = vm.design;
        kinds = design_kinds(cohort, static_cast<std::size_t>(v - 1));
      } else {
        carry = augment_with_carryforward(cohort, v);
        for (int k = 1; k <= v; ++k) {
          for (auto f : cohort.visit(k).present) kinds.push_back(cohort.schema.features[f].kind);
        }
      }
      auto svm = config.svm;
      svm.seed = rep_seed + static_cast<std::uint64_t>(v);
      const auto carry_train = rows_in(carry.ids, tm.split.train);
      const auto carry_test = rows_in(carry.ids, tm.split.test);
      const auto clf = fit_svm(take_rows(carry.X, carry_train),
                               labels_of(carry.y_next, carry_train), svm, kinds);
      const double carry_auc = safe_auc(clf->predict_proba_rows(take_rows(carry.X, carry_test)),
                                        labels_of(carry.y_next, carry_test));
      const int positives = static_cast<int>(std::count(y_test.begin(), y_test.end(), 1));
      table.rows.push_back({std::to_string(v), std::to_string(rep), fmt(risk_auc), fmt(carry_auc),
                            fmt(risk_auc - carry_auc), std::to_string(test.size()),
                            std::to_string(positives)});
      const auto k = static_cast<std::size_t>(v);
      risk_sum[k] += risk_auc;
      carry_sum[k] += carry_auc;
      test_rows[k] += test.size();
      carry_rows[k] += carry_test.size();
    }
  }

  json gaps = json::object();
  json means = json::object();
  const double reps = static_cast<double>(options.repeats);
  for (int v = 2; v <= cohort.num_visits(); ++v) {
    const auto k = static_cast<std::size_t>(v);
    const double risk = risk_sum[k] / reps;
    const double carry = carry_sum[k] / reps;
    report.series.push_back({v, "risk", risk, test_rows[k]});
    report.series.push_back({v, "carry", carry, carry_rows[k]});
    gaps["v" + std::to_string(v)] = number(risk - carry);
    means["v" + std::to_string(v)] = {{"risk", number(risk)}, {"carry", number(carry)}};
  }
  report.tables.push_back(std::move(table));
  report.summary = {{"gap", gaps}, {"mean_auc", means}};
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

ExperimentReport experiment3(const Cohort& cohort, const TrainedModels& models,
                             const CostModel& costs, const Experiment3Options& options,
                             std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const auto& v1 = models.at(1);
  std::vector<std::string> ids;
  for (const auto& id : v1.design.ids) {
    if (models.split.test.count(id)) ids.push_back(id);
  }
  std::vector<PatientArms> arms(ids.size());
  parallel_for(ids.size(), [&](std::size_t i) {
    arms[i] = simulate_patient(cohort, models, ids[i], costs, cohort.raw_bounds, options);
  });

  ExperimentReport report;
  report.experiment = 3;
  report.seed = seed;
  report.config = {{"budget", options.budget},
                   {"injection", options.injection == Injection::Overwrite ? "overwrite" : "delta"},
                   {"solver",
                    {{"max_iterations", options.solver.max_iterations},
                     {"min_decrease", options.solver.min_decrease},
                     {"initial_step", options.solver.initial_step},
                     {"shrink", options.solver.shrink},
                     {"armijo", options.solver.armijo},
                     {"min_step", options.solver.min_step},
                     {"round_binary", options.solver.round_binary}}},
                   {"test_patients", ids.size()}};

  std::size_t infeasible = 0, recs = 0;
  for (const auto& a : arms) {
    for (const auto& r : a.recommendations) {
      ++recs;
      const Bounds box = relaxed_bounds(cohort, cohort.raw_bounds);
      if (!(r.cost_spent <= options.budget + 1e-9) || !box.contains(r.direct_after)) ++infeasible;
    }
  }

  ReportTable table{"mean_probability", {"visit", "arm", "value", "population"}, {}};
  const int V = static_cast<int>(models.visits.size());
  json means = json::object();
  for (int v = 1; v <= V; ++v) {
    double sb = 0.0, sa = 0.0, sbb = 0.0;
    std::size_t count = 0;
    for (const auto& a : arms) {
      for (std::size_t k = 0; k < a.visits.size(); ++k) {
        if (a.visits[k] != v) continue;
        sb += a.baseline[k];
        sa += a.strategy_a[k];
        sbb += a.strategy_b[k];
        ++count;
      }
    }
    const double denom = count > 0 ? static_cast<double>(count) : kNaN;
    const std::pair<const char*, double> values[] = {
        {"baseline", sb / denom}, {"a", sa / denom}, {"b", sbb / denom}};
    for (const auto& [arm, value] : values) {
      report.series.push_back({v, arm, value, count});
      table.rows.push_back({std::to_string(v), arm, fmt(value), std::to_string(count)});
      means["v" + std::to_string(v)][arm] = number(value);
    }
  }
  report.tables.push_back(std::move(table));
  report.summary = {{"means", means}, {"recommendations", recs}, {"infeasible", infeasible}};
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace longic
