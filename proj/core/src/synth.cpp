#include "longic/synth.hpp"

#include "longic/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <unordered_map>

namespace longic {

namespace {

using nlohmann::json;
constexpr double kInf = std::numeric_limits<double>::infinity();

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// Standard normal upper quantile: x with P(Z > x) = tail.
double normal_upper_quantile(double tail) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(mid / std::sqrt(2.0)) > tail) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::string_view partition_tag(Partition p) {
  switch (p) {
    case Partition::Unchangeable:
      return "U";
    case Partition::Indirect:
      return "I";
    case Partition::Direct:
      return "D";
  }
  return "U";
}

Partition parse_partition_tag(std::string_view text) {
  if (text == "U") return Partition::Unchangeable;
  if (text == "I") return Partition::Indirect;
  if (text == "D") return Partition::Direct;
  throw ConfigError("partition must be U, I or D, got '" + std::string(text) + "'");
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json cost_to_json(double c) { return c == kLockedCost ? json("locked") : json(c); }

double cost_from_json(const json& j) {
  if (j.is_null()) return kLockedCost;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "locked" || s == "inf") return kLockedCost;
    throw ConfigError("cost must be a number or \"locked\", got '" + s + "'");
  }
  return j.get<double>();
}

double bound_from_json(const json& j, double fallback) {
  return j.is_null() ? fallback : j.get<double>();
}

SynthFeature make(std::string name, FeatureKind kind, Partition part, SynthRole role,
                  std::string unit, double mean, double sd) {
  SynthFeature f;
  f.name = std::move(name);
  f.kind = kind;
  f.partition = part;
  f.role = role;
  f.unit = std::move(unit);
  f.mean = mean;
  f.sd = sd;
  return f;
}

/// Raw values of every feature, every visit, every patient, plus the draws
/// that decide outcomes and dropout. Independent of the intercept.
struct Simulation {
  std::size_t p = 0;
  std::vector<std::vector<double>> raw;  ///< raw[v][i * p + f]
  std::vector<std::vector<double>> outcome_draw;
  std::vector<std::vector<double>> dropout_draw;
  std::vector<std::vector<double>> score;  ///< risk score s per visit and patient
};

std::vector<std::size_t> compute_order(const GeneratorSpec& spec) {
  std::vector<std::size_t> order;
  for (std::size_t f = 0; f < spec.features.size(); ++f) {
    const auto r = spec.features[f].role;
    if (r == SynthRole::Static || r == SynthRole::Lifestyle) order.push_back(f);
  }
  for (std::size_t f = 0; f < spec.features.size(); ++f) {
    const auto r = spec.features[f].role;
    if (r == SynthRole::Physiological || r == SynthRole::Indicator) order.push_back(f);
  }
  return order;
}

double nominal(const SynthFeature& f, double raw) {
  return f.kind == FeatureKind::Binary ? raw - f.prevalence : (raw - f.mean) / f.sd;
}

double risk_score(const GeneratorSpec& spec, const double* raw) {
  double s = 0.0;
  for (std::size_t f = 0; f < spec.features.size(); ++f) {
    const auto& feat = spec.features[f];
    if (feat.risk_coef != 0.0) s += feat.risk_coef * nominal(feat, raw[f]);
  }
  return s;
}

Simulation simulate(const GeneratorSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n;
  const std::size_t p = spec.features.size();
  const auto V = static_cast<std::size_t>(spec.visits);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t f = 0; f < p; ++f) index[spec.features[f].name] = f;
  const auto order = compute_order(spec);
  std::vector<double> threshold(p, 0.0);
  std::vector<double> norm(p, 1.0);
  std::vector<std::vector<std::pair<std::size_t, double>>> parents(p);
  for (std::size_t f = 0; f < p; ++f) {
    const auto& feat = spec.features[f];
    if (feat.kind == FeatureKind::Binary) threshold[f] = normal_upper_quantile(feat.prevalence);
    double sq = feat.static_weight * feat.static_weight + spec.noise * spec.noise;
    if (feat.role == SynthRole::Lifestyle) {
      sq += feat.diet_loading * feat.diet_loading + feat.activity_loading * feat.activity_loading;
    }
    for (const auto& [name, coef] : feat.parents) {
      parents[f].emplace_back(index.at(name), coef);
      sq += coef * coef;
    }
    norm[f] = sq > 0.0 ? std::sqrt(sq) : 1.0;
  }

  // Persistent patient state.
  std::vector<double> statics(n * p), diet(n), activity(n);
  for (std::size_t i = 0; i < n; ++i) {
    diet[i] = normal(rng);
    activity[i] = normal(rng);
    for (std::size_t f = 0; f < p; ++f) statics[i * p + f] = normal(rng);
  }

  Simulation sim;
  sim.p = p;
  sim.raw.assign(V, std::vector<double>(n * p, 0.0));
  sim.outcome_draw.assign(V, std::vector<double>(n, 0.0));
  sim.dropout_draw.assign(V, std::vector<double>(n, 0.0));
  sim.score.assign(V, std::vector<double>(n, 0.0));
  const double persist = std::sqrt(std::max(0.0, 1.0 - spec.drift * spec.drift));

  for (std::size_t v = 0; v < V; ++v) {
    if (v > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        diet[i] = persist * diet[i] + spec.drift * normal(rng);
        activity[i] = persist * activity[i] + spec.drift * normal(rng);
      }
    }
    auto& raw = sim.raw[v];
    for (std::size_t i = 0; i < n; ++i) {
      double* row = raw.data() + i * p;
      for (auto f : order) {
        const auto& feat = spec.features[f];
        const double eps = normal(rng);  // drawn unconditionally to keep streams aligned
        if (v > 0 && feat.partition == Partition::Unchangeable) {
          row[f] = sim.raw[0][i * p + f];
          continue;
        }
        const double s = statics[i * p + f];
        double z = 0.0;
        switch (feat.role) {
          case SynthRole::Static:
            z = s;
            break;
          case SynthRole::Lifestyle:
            z = (feat.diet_loading * diet[i] + feat.activity_loading * activity[i] +
                 feat.static_weight * s + spec.noise * eps) / norm[f];
            break;
          case SynthRole::Physiological:
          case SynthRole::Indicator: {
            double acc = feat.static_weight * s + spec.noise * eps;
            for (const auto& [parent, coef] : parents[f]) {
              acc += coef * nominal(spec.features[parent], row[parent]);
            }
            z = acc / norm[f];
            break;
          }
        }
        if (feat.kind == FeatureKind::Binary) {
          row[f] = z > threshold[f] ? 1.0 : 0.0;
        } else {
          row[f] = std::clamp(feat.mean + feat.sd * z, feat.lower, feat.upper);
        }
      }
      sim.score[v][i] = risk_score(spec, row);
    }
    for (std::size_t i = 0; i < n; ++i) sim.outcome_draw[v][i] = uniform(rng);
    for (std::size_t i = 0; i < n; ++i) sim.dropout_draw[v][i] = uniform(rng);
  }
  return sim;
}

double logit_of(const GeneratorSpec& spec, double intercept, double score, const double* previous) {
  if (previous == nullptr) return intercept + score;
  return intercept + (score + spec.history_weight * *previous) / (1.0 + spec.history_weight);
}

// Intercept making the mean risk over `rows` equal the event rate.
double calibrate_rows(const GeneratorSpec& spec, const Simulation& sim, std::size_t v,
                      const std::vector<std::size_t>& rows) {
  auto mean_risk = [&](double b) {
    double total = 0.0;
    for (auto i : rows) {
      const double* previous = v > 0 ? &sim.score[v - 1][i] : nullptr;
      total += sigmoid(logit_of(spec, b, sim.score[v][i], previous));
    }
    return total / static_cast<double>(rows.size());
  };
  double lo = -50.0, hi = 50.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_risk(mid) < spec.event_rate) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct Followup {
  std::vector<std::vector<std::size_t>> rows;  // alive ids per visit
  std::vector<std::vector<int>> outcome;       // aligned with rows
  std::vector<double> intercepts;
};

// Dropout, then outcomes, visit by visit; the intercept is recalibrated on
// each visit's survivors unless the spec fixes it.
Followup follow(const GeneratorSpec& spec, const Simulation& sim) {
  const std::size_t n = spec.n;
  const auto V = static_cast<std::size_t>(spec.visits);
  Followup out;
  std::vector<char> alive(n, 1);
  for (std::size_t v = 0; v < V; ++v) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (v > 0 && alive[i] && sim.dropout_draw[v][i] < spec.dropout) alive[i] = 0;
      if (alive[i]) rows.push_back(i);
    }
    const double b = spec.intercept ? *spec.intercept
                     : rows.empty() ? 0.0
                                    : calibrate_rows(spec, sim, v, rows);
    std::vector<int> y(rows.size(), 0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto i = rows[r];
      const double* previous = v > 0 ? &sim.score[v - 1][i] : nullptr;
      const double risk = sigmoid(logit_of(spec, b, sim.score[v][i], previous));
      y[r] = sim.outcome_draw[v][i] < risk ? 1 : 0;
      if (y[r] == 1) alive[i] = 0;  // an event ends follow-up
    }
    out.rows.push_back(std::move(rows));
    out.outcome.push_back(std::move(y));
    out.intercepts.push_back(b);
  }
  return out;
}

std::vector<std::set<std::string>> missing_by_visit(const GeneratorSpec& spec) {
  std::vector<std::set<std::string>> out(static_cast<std::size_t>(spec.visits));
  for (int v = 2; v <= spec.visits; ++v) {
    const auto k = static_cast<std::size_t>(v - 2);
    if (k < spec.missing.size()) {
      out[static_cast<std::size_t>(v - 1)].insert(spec.missing[k].begin(), spec.missing[k].end());
    } else {
      out[static_cast<std::size_t>(v - 1)] = out[static_cast<std::size_t>(v - 2)];
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(SynthRole role) {
  switch (role) {
    case SynthRole::Static:
      return "static";
    case SynthRole::Lifestyle:
      return "lifestyle";
    case SynthRole::Physiological:
      return "physiological";
    case SynthRole::Indicator:
      return "indicator";
  }
  return "static";
}

SynthRole parse_synth_role(std::string_view text) {
  for (auto r : {SynthRole::Static, SynthRole::Lifestyle, SynthRole::Physiological,
                 SynthRole::Indicator}) {
    if (to_string(r) == text) return r;
  }
  throw ConfigError("unknown generator role '" + std::string(text) + "'");
}

void GeneratorSpec::validate() const {
  if (n < 2) throw ConfigError("generator: n must be at least 2");
  if (visits < 1) throw ConfigError("generator: visits must be at least 1");
  if (!(event_rate > 0.0 && event_rate < 1.0)) {
    throw ConfigError("generator: event_rate must lie strictly between 0 and 1");
  }
  if (!(drift >= 0.0 && drift <= 1.0)) throw ConfigError("generator: drift must lie in [0, 1]");
  if (!(noise >= 0.0)) throw ConfigError("generator: noise must be non-negative");
  if (!(history_weight >= 0.0)) throw ConfigError("generator: history_weight must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("generator: dropout must lie in [0, 1)");
  if (features.empty()) throw ConfigError("generator: no features");
  if (intercept && !std::isfinite(*intercept)) throw ConfigError("generator: intercept not finite");

  std::unordered_map<std::string, std::size_t> seen;
  bool any_direct = false;
  for (std::size_t f = 0; f < features.size(); ++f) {
    const auto& feat = features[f];
    const std::string where = "generator feature '" + feat.name + "'";
    if (feat.name.empty()) throw ConfigError("generator: feature with an empty name");
    if (feat.name == "id" || feat.name == "y_next") throw ConfigError(where + ": reserved name");
    if (!seen.emplace(feat.name, f).second) throw ConfigError(where + ": duplicate name");
    if (feat.kind == FeatureKind::Continuous) {
      if (!(feat.sd > 0.0) || !std::isfinite(feat.mean)) {
        throw ConfigError(where + ": needs a finite mean and positive sd");
      }
      if (!(feat.lower <= feat.upper)) throw ConfigError(where + ": lower exceeds upper");
    } else if (!(feat.prevalence > 0.0 && feat.prevalence < 1.0)) {
      throw ConfigError(where + ": prevalence must lie strictly between 0 and 1");
    }
    if (!std::isfinite(feat.risk_coef)) throw ConfigError(where + ": risk_coef not finite");
    if (feat.partition == Partition::Direct) {
      any_direct = true;
      if (std::isnan(feat.cost_up) || std::isnan(feat.cost_down) || feat.cost_up < 0.0 ||
          feat.cost_down < 0.0) {
        throw ConfigError(where + ": costs must be non-negative");
      }
      if (feat.cost_up == kLockedCost && feat.cost_down == kLockedCost) {
        throw ConfigError(where + ": both directions locked");
      }
    }
    if (feat.role == SynthRole::Static || feat.role == SynthRole::Lifestyle) {
      if (!feat.parents.empty()) throw ConfigError(where + ": only derived roles take parents");
    }
  }
  if (!any_direct) throw ConfigError("generator: at least one directly changeable feature needed");
  // Parents must be computed first: static/lifestyle, or an earlier derived feature.
  for (std::size_t f = 0; f < features.size(); ++f) {
    for (const auto& [name, coef] : features[f].parents) {
      const auto it = seen.find(name);
      if (it == seen.end()) {
        throw ConfigError("generator feature '" + features[f].name + "': unknown parent '" + name +
                          "'");
      }
      const auto role = features[it->second].role;
      const bool derived = role == SynthRole::Physiological || role == SynthRole::Indicator;
      if (derived && it->second >= f) {
        throw ConfigError("generator feature '" + features[f].name + "': parent '" + name +
                          "' must be listed earlier");
      }
      if (!std::isfinite(coef)) throw ConfigError("generator feature '" + features[f].name +
                                                  "': parent weight not finite");
    }
  }
  if (missing.size() > static_cast<std::size_t>(std::max(0, visits - 1))) {
    throw ConfigError("generator: missingness listed for more visits than exist");
  }
  for (std::size_t k = 0; k < missing.size(); ++k) {
    std::set<std::string> names;
    for (const auto& name : missing[k]) {
      if (!seen.count(name)) {
        throw ConfigError("generator: missing feature '" + name + "' is not defined");
      }
      if (!names.insert(name).second) {
        throw ConfigError("generator: feature '" + name + "' listed twice as missing at visit " +
                          std::to_string(k + 2));
      }
    }
    if (names.size() >= features.size()) {
      throw ConfigError("generator: every feature missing at visit " + std::to_string(k + 2));
    }
    if (k > 0) {
      for (const auto& name : missing[k - 1]) {
        if (!names.count(name)) {
          throw ConfigError("generator: nested missingness violated: feature '" + name +
                            "' is missing at visit " + std::to_string(k + 1) +
                            " but measured at visit " + std::to_string(k + 2));
        }
      }
    }
  }
}

GeneratorSpec default_generator_spec() {
  using FK = FeatureKind;
  using P = Partition;
  using R = SynthRole;
  GeneratorSpec spec;
  auto& fs = spec.features;

  // Unchangeable.
  auto age = make("age", FK::Continuous, P::Unchangeable, R::Static, "years", 54.0, 6.0);
  age.risk_coef = 0.6;
  fs.push_back(age);
  fs.push_back(make("height", FK::Continuous, P::Unchangeable, R::Static, "cm", 169.0, 9.0));
  auto education = make("education", FK::Continuous, P::Unchangeable, R::Static, "years", 13.0, 3.0);
  education.risk_coef = -0.1;
  fs.push_back(education);
  auto gender = make("gender", FK::Binary, P::Unchangeable, R::Static, "male", 0.0, 1.0);
  gender.prevalence = 0.45;
  gender.risk_coef = 0.4;
  fs.push_back(gender);
  auto race = make("race", FK::Binary, P::Unchangeable, R::Static, "indicator", 0.0, 1.0);
  race.prevalence = 0.25;
  race.risk_coef = 0.3;
  fs.push_back(race);
  auto diabetes = make("diabetes", FK::Binary, P::Unchangeable, R::Static, "indicator", 0.0, 1.0);
  diabetes.prevalence = 0.12;
  diabetes.risk_coef = 1.0;
  fs.push_back(diabetes);
  auto smoked = make("smoked_ever", FK::Binary, P::Unchangeable, R::Static, "indicator", 0.0, 1.0);
  smoked.prevalence = 0.45;
  smoked.risk_coef = 0.2;
  fs.push_back(smoked);

  // Directly changeable lifestyle features.
  auto lifestyle = [&](std::string name, std::string unit, double mean, double sd, double upper,
                       double up, double down, double diet_w, double act_w, double risk) {
    auto f = make(std::move(name), FK::Continuous, P::Direct, R::Lifestyle, std::move(unit), mean, sd);
    f.lower = 0.0;
    f.upper = upper;
    f.cost_up = up;
    f.cost_down = down;
    f.diet_loading = diet_w;
    f.activity_loading = act_w;
    f.static_weight = 0.3;
    f.risk_coef = risk;
    fs.push_back(f);
  };
  lifestyle("exercise_hours", "hours/week", 4.0, 2.5, 20.0, 10.0, 10.0, 0.2, 1.0, -1.0);
  lifestyle("alcohol", "drinks/week", 4.0, 3.0, 40.0, 9.0, 9.0, -0.4, 0.3, 0.4);
  lifestyle("vegetables", "servings/day", 2.5, 1.2, 12.0, 6.0, kLockedCost, 1.0, 0.2, -0.6);
  lifestyle("fruit", "servings/day", 2.0, 1.1, 12.0, 6.0, kLockedCost, 0.9, 0.2, -0.4);
  lifestyle("fiber", "g/day", 18.0, 6.0, 80.0, 7.0, kLockedCost, 0.9, 0.1, -0.4);
  lifestyle("saturated_fat", "g/day", 25.0, 8.0, 120.0, kLockedCost, 6.0, -0.9, -0.1, 0.8);
  lifestyle("sodium", "g/day", 3.4, 1.0, 10.0, kLockedCost, 7.0, -0.7, 0.0, 0.6);
  lifestyle("cigarettes", "per day", 6.0, 6.0, 60.0, kLockedCost, 9.0, -0.2, -0.6, 1.0);

  // Indirectly changeable physiology.
  auto physio = [&](std::string name, std::string unit, double mean, double sd, double risk,
                    std::vector<std::pair<std::string, double>> parents) {
    auto f = make(std::move(name), FK::Continuous, P::Indirect, R::Physiological, std::move(unit),
                  mean, sd);
    f.lower = 0.0;
    f.static_weight = 0.3;
    f.risk_coef = risk;
    f.parents = std::move(parents);
    fs.push_back(f);
  };
  physio("bmi", "kg/m2", 27.0, 4.5, 0.2,
         {{"exercise_hours", -0.6}, {"saturated_fat", 0.4}, {"vegetables", -0.3}, {"age", 0.2}});
  physio("sbp", "mmHg", 121.0, 17.0, 0.5,
         {{"age", 0.4}, {"bmi", 0.4}, {"sodium", 0.5}, {"alcohol", 0.3}});
  physio("ldl", "mg/dL", 137.0, 38.0, 0.4,
         {{"saturated_fat", 0.6}, {"fiber", -0.4}, {"age", 0.2}, {"exercise_hours", -0.2}});
  physio("hdl", "mg/dL", 50.0, 16.0, -0.3,
         {{"exercise_hours", 0.5}, {"alcohol", 0.3}, {"gender", -0.6}, {"bmi", -0.3}});
  physio("triglycerides", "mg/dL", 130.0, 60.0, 0.1,
         {{"bmi", 0.4}, {"alcohol", 0.4}, {"exercise_hours", -0.3}, {"fruit", -0.2}});
  physio("glucose", "mg/dL", 100.0, 25.0, 0.2, {{"diabetes", 2.0}, {"bmi", 0.4}, {"fiber", -0.3}});
  physio("hematocrit", "%", 42.0, 3.5, 0.1,
         {{"gender", 1.2}, {"cigarettes", 0.5}, {"alcohol", 0.3}});
  physio("heart_rate", "bpm", 68.0, 10.0, 0.1,
         {{"exercise_hours", -0.6}, {"cigarettes", 0.4}, {"bmi", 0.2}});

  // A medication indicator with learnable structure.
  auto statin = make("statin_use", FK::Binary, P::Unchangeable, R::Indicator, "indicator", 0.0, 1.0);
  statin.prevalence = 0.2;
  statin.parents = {{"age", 0.8}, {"diabetes", 2.0}, {"ldl", 0.8}};
  fs.push_back(statin);

  spec.missing = {{"education", "race", "triglycerides", "fiber", "heart_rate"},
                  {"education", "race", "triglycerides", "fiber", "heart_rate", "height", "hdl",
                   "glucose", "fruit", "smoked_ever"}};
  return spec;
}

json to_json(const GeneratorSpec& spec) {
  json features = json::array();
  for (const auto& f : spec.features) {
    json parents = json::array();
    for (const auto& [name, coef] : f.parents) parents.push_back({{"name", name}, {"weight", coef}});
    features.push_back({{"name", f.name},
                        {"kind", std::string(to_string(f.kind))},
                        {"partition", std::string(partition_tag(f.partition))},
                        {"role", std::string(to_string(f.role))},
                        {"unit", f.unit},
                        {"mean", f.mean},
                        {"sd", f.sd},
                        {"prevalence", f.prevalence},
                        {"lower", number_or_null(f.lower)},
                        {"upper", number_or_null(f.upper)},
                        {"cost_up", cost_to_json(f.cost_up)},
                        {"cost_down", cost_to_json(f.cost_down)},
                        {"risk_coef", f.risk_coef},
                        {"diet_loading", f.diet_loading},
                        {"activity_loading", f.activity_loading},
                        {"static_weight", f.static_weight},
                        {"parents", parents}});
  }
  return {{"n", spec.n},
          {"visits", spec.visits},
          {"event_rate", spec.event_rate},
          {"drift", spec.drift},
          {"noise", spec.noise},
          {"history_weight", spec.history_weight},
          {"dropout", spec.dropout},
          {"seed", spec.seed},
          {"version", spec.version},
          {"intercept", spec.intercept ? json(*spec.intercept) : json(nullptr)},
          {"missing", spec.missing},
          {"features", features}};
}

GeneratorSpec generator_spec_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("generator spec must be a JSON object");
  GeneratorSpec spec = default_generator_spec();
  try {
    if (j.contains("n")) {
      const auto n = j.at("n").get<long long>();
      if (n < 2) throw ConfigError("generator: n must be at least 2");
      spec.n = static_cast<std::size_t>(n);
    }
    if (j.contains("visits")) spec.visits = j.at("visits").get<int>();
    if (j.contains("event_rate")) spec.event_rate = j.at("event_rate").get<double>();
    if (j.contains("drift")) spec.drift = j.at("drift").get<double>();
    if (j.contains("noise")) spec.noise = j.at("noise").get<double>();
    if (j.contains("history_weight")) spec.history_weight = j.at("history_weight").get<double>();
    if (j.contains("dropout")) spec.dropout = j.at("dropout").get<double>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("version")) spec.version = j.at("version").get<std::string>();
    if (j.contains("intercept")) {
      spec.intercept = j.at("intercept").is_null() ? std::nullopt
                                                   : std::optional<double>(j.at("intercept").get<double>());
    }
    if (j.contains("missing")) {
      spec.missing = j.at("missing").get<std::vector<std::vector<std::string>>>();
    } else if (j.contains("visits")) {
      spec.missing.resize(static_cast<std::size_t>(std::max(0, spec.visits - 1)));
    }
    if (j.contains("features")) {
      spec.features.clear();
      for (const auto& f : j.at("features")) {
        SynthFeature feat;
        feat.name = f.at("name").get<std::string>();
        feat.kind = parse_feature_kind(f.value("kind", std::string("continuous")));
        feat.partition = parse_partition_tag(f.value("partition", std::string("U")));
        feat.role = parse_synth_role(f.value("role", std::string("static")));
        feat.unit = f.value("unit", std::string{});
        feat.mean = f.value("mean", 0.0);
        feat.sd = f.value("sd", 1.0);
        feat.prevalence = f.value("prevalence", 0.5);
        feat.lower = f.contains("lower") ? bound_from_json(f.at("lower"), -kInf) : -kInf;
        feat.upper = f.contains("upper") ? bound_from_json(f.at("upper"), kInf) : kInf;
        feat.cost_up = f.contains("cost_up") ? cost_from_json(f.at("cost_up")) : 1.0;
        feat.cost_down = f.contains("cost_down") ? cost_from_json(f.at("cost_down")) : 1.0;
        feat.risk_coef = f.value("risk_coef", 0.0);
        feat.diet_loading = f.value("diet_loading", 0.0);
        feat.activity_loading = f.value("activity_loading", 0.0);
        feat.static_weight = f.value("static_weight", 0.0);
        if (f.contains("parents")) {
          for (const auto& p : f.at("parents")) {
            feat.parents.emplace_back(p.at("name").get<std::string>(), p.at("weight").get<double>());
          }
        }
        spec.features.push_back(std::move(feat));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("generator spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

double calibrate_intercept(const GeneratorSpec& spec) {
  const Simulation sim = simulate(spec);
  std::vector<std::size_t> rows(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) rows[i] = i;
  return calibrate_rows(spec, sim, 0, rows);
}

SyntheticCohort generate(const GeneratorSpec& spec) {
  const Simulation sim = simulate(spec);
  const Followup fu = follow(spec, sim);
  const std::size_t n = spec.n;
  const std::size_t p = sim.p;
  const auto V = static_cast<std::size_t>(spec.visits);

  SyntheticCohort out;
  out.intercept = fu.intercepts.front();
  out.intercepts = fu.intercepts;
  Cohort& cohort = out.cohort;
  cohort.schema.version = spec.version;
  std::vector<DirectionalCost> costs;
  std::vector<double> lower, upper;
  for (std::size_t f = 0; f < p; ++f) {
    const auto& feat = spec.features[f];
    cohort.schema.features.push_back({feat.name, feat.kind, feat.unit});
    switch (feat.partition) {
      case Partition::Unchangeable:
        cohort.partition.unchangeable.push_back(f);
        break;
      case Partition::Indirect:
        cohort.partition.indirect.push_back(f);
        break;
      case Partition::Direct:
        cohort.partition.direct.push_back(f);
        costs.push_back({feat.cost_up, feat.cost_down});
        lower.push_back(feat.kind == FeatureKind::Binary ? std::max(0.0, feat.lower) : feat.lower);
        upper.push_back(feat.kind == FeatureKind::Binary ? std::min(1.0, feat.upper) : feat.upper);
        break;
    }
  }
  cohort.cost_model = CostModel(std::move(costs));
  cohort.raw_bounds.lower = Eigen::Map<Eigen::VectorXd>(lower.data(), static_cast<Eigen::Index>(lower.size()));
  cohort.raw_bounds.upper = Eigen::Map<Eigen::VectorXd>(upper.data(), static_cast<Eigen::Index>(upper.size()));

  const auto missing = missing_by_visit(spec);
  const int width = static_cast<int>(std::to_string(n).size());
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "P%0*zu", width, i + 1);
    ids[i] = buf;
  }

  for (std::size_t v = 0; v < V; ++v) {
    VisitDataset data;
    data.visit = static_cast<int>(v + 1);
    for (std::size_t f = 0; f < p; ++f) {
      if (!missing[v].count(spec.features[f].name)) data.present.push_back(f);
    }
    const auto& rows = fu.rows[v];
    data.X.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(data.present.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto i = rows[r];
      data.ids.push_back(ids[i]);
      for (std::size_t c = 0; c < data.present.size(); ++c) {
        data.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            sim.raw[v][i * p + data.present[c]];
      }
      data.y_next.push_back(fu.outcome[v][r]);
    }
    cohort.visits.push_back(std::move(data));
  }
  validate_cohort(cohort);
  return out;
}

std::vector<double> nominal_standardize(const GeneratorSpec& spec, std::span<const double> raw) {
  if (raw.size() != spec.features.size()) {
    throw DimensionError("instance has " + std::to_string(raw.size()) + " values, spec has " +
                         std::to_string(spec.features.size()) + " features");
  }
  std::vector<double> out(raw.size());
  for (std::size_t f = 0; f < raw.size(); ++f) out[f] = nominal(spec.features[f], raw[f]);
  return out;
}

double ground_truth_risk(const GeneratorSpec& spec, std::span<const double> raw, double intercept,
                         std::span<const double> previous) {
  if (raw.size() != spec.features.size()) {
    throw DimensionError("instance has " + std::to_string(raw.size()) + " values, spec has " +
                         std::to_string(spec.features.size()) + " features");
  }
  const double s = risk_score(spec, raw.data());
  if (previous.empty()) return sigmoid(logit_of(spec, intercept, s, nullptr));
  if (previous.size() != raw.size()) throw DimensionError("previous instance size mismatch");
  const double prev = risk_score(spec, previous.data());
  return sigmoid(logit_of(spec, intercept, s, &prev));
}

double ground_truth_risk(const GeneratorSpec& spec, std::span<const double> raw) {
  return ground_truth_risk(spec, raw, spec.intercept ? *spec.intercept : calibrate_intercept(spec));
}

}  // namespace longic
