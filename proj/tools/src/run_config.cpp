#include "longic_app/app.hpp"

#include "longic/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace longic::app {

using nlohmann::json;

namespace {

const std::set<std::string> kRunKeys = {"cohort",      "generator",   "models",      "costs",
                                        "bounds",      "budget",      "budgets",     "experiments",
                                        "seed",        "out",         "experiment1", "experiment2",
                                        "experiment3", "solver"};

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

SolverOptions solver_from_json(const json& j) {
  reject_unknown(j,
                 {"max_iterations", "min_decrease", "initial_step", "shrink", "armijo", "min_step",
                  "round_binary"},
                 "solver");
  SolverOptions o;
  o.max_iterations = j.value("max_iterations", o.max_iterations);
  o.min_decrease = j.value("min_decrease", o.min_decrease);
  o.initial_step = j.value("initial_step", o.initial_step);
  o.shrink = j.value("shrink", o.shrink);
  o.armijo = j.value("armijo", o.armijo);
  o.min_step = j.value("min_step", o.min_step);
  o.round_binary = j.value("round_binary", o.round_binary);
  if (o.max_iterations < 0 || !(o.shrink > 0.0 && o.shrink < 1.0) || !(o.initial_step > 0.0) ||
      !(o.armijo > 0.0 && o.armijo < 1.0) || !(o.min_step > 0.0) || !(o.min_decrease >= 0.0)) {
    throw ConfigError("solver: option out of range");
  }
  return o;
}

json solver_to_json(const SolverOptions& o) {
  return {{"max_iterations", o.max_iterations}, {"min_decrease", o.min_decrease},
          {"initial_step", o.initial_step},     {"shrink", o.shrink},
          {"armijo", o.armijo},                 {"min_step", o.min_step},
          {"round_binary", o.round_binary}};
}

double cost_value(const json& v, const std::string& feature) {
  if (v.is_string()) {
    if (v.get<std::string>() == "locked") return kLockedCost;
    throw ConfigError("cost for '" + feature + "': expected a number or \"locked\"");
  }
  if (!v.is_number()) throw ConfigError("cost for '" + feature + "': expected a number");
  return v.get<double>();
}

std::size_t direct_slot(const Cohort& cohort, const std::string& name) {
  const auto found = cohort.schema.find(name);
  if (!found) throw ConfigError("unknown feature '" + name + "'");
  const auto idx = *found;
  const auto& direct = cohort.partition.direct;
  const auto it = std::find(direct.begin(), direct.end(), idx);
  if (it == direct.end()) {
    throw ConfigError("feature '" + name + "' is not directly changeable");
  }
  return static_cast<std::size_t>(it - direct.begin());
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(what + ": '" + text + "' is not a number");
  }
}

}  // namespace

std::vector<int> parse_experiments(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const double v = parse_number(item, "experiments");
    if (v != 1.0 && v != 2.0 && v != 3.0) {
      throw ConfigError("unknown experiment id '" + item + "' (expected 1, 2 or 3)");
    }
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw ConfigError("no experiments selected");
  return out;
}

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  reject_unknown(j, kRunKeys, "run config");
  RunConfig c;
  try {
    const bool has_cohort = j.contains("cohort");
    const bool has_generator = j.contains("generator");
    if (has_cohort == has_generator) {
      throw ConfigError("run config needs exactly one of 'cohort' or 'generator'");
    }
    c.seed = j.value("seed", c.seed);
    if (has_cohort) {
      std::filesystem::path p = j.at("cohort").get<std::string>();
      c.cohort_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    } else {
      json spec = j.at("generator");
      if (!spec.is_object()) throw ConfigError("'generator' must be an object");
      if (!spec.contains("seed")) spec["seed"] = c.seed;
      c.generator = generator_spec_from_json(spec);
    }
    if (j.contains("models")) c.models = model_config_from_json(j.at("models"));
    if (j.contains("costs")) {
      c.costs = j.at("costs");
      if (!c.costs.is_object()) throw ConfigError("'costs' must be an object");
    }
    if (j.contains("bounds")) {
      c.bounds = j.at("bounds");
      if (!c.bounds.is_object()) throw ConfigError("'bounds' must be an object");
    }
    c.budget = j.value("budget", c.budget);
    if (!(c.budget >= 0.0) || !std::isfinite(c.budget)) {
      throw ConfigError("budget must be finite and non-negative");
    }
    if (j.contains("budgets")) c.budgets = j.at("budgets").get<std::vector<double>>();
    for (std::size_t k = 0; k < c.budgets.size(); ++k) {
      if (!(c.budgets[k] >= 0.0) || (k > 0 && c.budgets[k] < c.budgets[k - 1])) {
        throw ConfigError("budgets must be non-negative and ascending");
      }
    }
    if (j.contains("experiments")) {
      c.experiments.clear();
      for (const auto& e : j.at("experiments")) {
        const int id = e.get<int>();
        if (id < 1 || id > 3) {
          throw ConfigError("unknown experiment id " + std::to_string(id) + " (expected 1, 2 or 3)");
        }
        c.experiments.push_back(id);
      }
    }
    c.out = j.value("out", c.out.string());
    SolverOptions solver;
    if (j.contains("solver")) solver = solver_from_json(j.at("solver"));
    c.experiment3.solver = solver;
    c.experiment3.budget = c.budget;
    if (j.contains("experiment1")) {
      const auto& e = j.at("experiment1");
      reject_unknown(e, {"visit", "holdout", "binary_holdout", "estimators"}, "experiment1");
      c.experiment1.visit = e.value("visit", c.experiment1.visit);
      if (e.contains("holdout")) {
        c.experiment1.holdout = e.at("holdout").get<std::vector<std::string>>();
      }
      c.experiment1.binary_holdout = e.value("binary_holdout", c.experiment1.binary_holdout);
      if (e.contains("estimators")) {
        c.experiment1.estimators = e.at("estimators").get<std::vector<std::string>>();
      }
    }
    if (j.contains("experiment2")) {
      const auto& e = j.at("experiment2");
      reject_unknown(e, {"repeats", "identical_arms"}, "experiment2");
      c.experiment2.repeats = e.value("repeats", c.experiment2.repeats);
      c.experiment2.identical_arms = e.value("identical_arms", c.experiment2.identical_arms);
      if (c.experiment2.repeats < 1) throw ConfigError("experiment2: repeats must be >= 1");
    }
    if (j.contains("experiment3")) {
      const auto& e = j.at("experiment3");
      reject_unknown(e, {"injection"}, "experiment3");
      const auto inj = e.value("injection", std::string("delta"));
      if (inj == "delta") {
        c.experiment3.injection = Injection::Delta;
      } else if (inj == "overwrite") {
        c.experiment3.injection = Injection::Overwrite;
      } else {
        throw ConfigError("experiment3: injection must be 'delta' or 'overwrite'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file '" + file.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + file.string() + "': " + e.what());
  }
  return parse_run_config(j, file.parent_path());
}

json to_json(const RunConfig& c) {
  json j;
  if (c.cohort_dir) j["cohort"] = c.cohort_dir->string();
  if (c.generator) j["generator"] = longic::to_json(*c.generator);
  j["models"] = longic::to_json(c.models);
  j["costs"] = c.costs;
  j["bounds"] = c.bounds;
  j["budget"] = c.budget;
  j["budgets"] = c.budgets;
  j["experiments"] = c.experiments;
  j["seed"] = c.seed;
  j["solver"] = solver_to_json(c.experiment3.solver);
  j["experiment1"] = {{"visit", c.experiment1.visit},
                      {"holdout", c.experiment1.holdout},
                      {"binary_holdout", c.experiment1.binary_holdout},
                      {"estimators", c.experiment1.estimators}};
  j["experiment2"] = {{"repeats", c.experiment2.repeats},
                      {"identical_arms", c.experiment2.identical_arms}};
  j["experiment3"] = {
      {"injection", c.experiment3.injection == Injection::Delta ? "delta" : "overwrite"}};
  return j;
}

Cohort materialize(const RunConfig& config) {
  if (config.cohort_dir) return load_cohort(*config.cohort_dir);
  if (config.generator) return generate(*config.generator).cohort;
  throw ConfigError("run config names neither a cohort nor a generator");
}

CostModel apply_cost_overrides(const Cohort& cohort, const CostModel& base, const json& overrides) {
  if (overrides.is_null()) return base;
  if (!overrides.is_object()) throw ConfigError("cost overrides must be an object");
  CostModel out = base;
  for (const auto& [name, v] : overrides.items()) {
    const auto slot = direct_slot(cohort, name);
    if (v.is_object()) {
      reject_unknown(v, {"up", "down"}, "cost for '" + name + "'");
      if (v.contains("up")) out[slot].up = cost_value(v.at("up"), name);
      if (v.contains("down")) out[slot].down = cost_value(v.at("down"), name);
    } else {
      const double c = cost_value(v, name);
      out[slot].up = c;
      out[slot].down = c;
    }
  }
  out.validate();
  return out;
}

Bounds apply_bound_overrides(const Cohort& cohort, const Bounds& base, const json& overrides) {
  if (overrides.is_null()) return base;
  if (!overrides.is_object()) throw ConfigError("bound overrides must be an object");
  Bounds out = base;
  for (const auto& [name, v] : overrides.items()) {
    const auto slot = static_cast<Eigen::Index>(direct_slot(cohort, name));
    if (!v.is_array() || v.size() != 2) {
      throw ConfigError("bounds for '" + name + "' must be [lower, upper]");
    }
    if (!v[0].is_null()) out.lower[slot] = v[0].get<double>();
    if (!v[1].is_null()) out.upper[slot] = v[1].get<double>();
    if (!(out.lower[slot] <= out.upper[slot])) {
      throw ConfigError("bounds for '" + name + "': lower exceeds upper");
    }
  }
  return out;
}

std::pair<std::string, json> parse_cost_flag(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--cost expects name=up:down");
  const std::string name = text.substr(0, eq);
  const std::string rest = text.substr(eq + 1);
  auto one = [&](const std::string& s) -> json {
    if (s == "locked") return "locked";
    return parse_number(s, "--cost " + name);
  };
  const auto colon = rest.find(':');
  if (colon == std::string::npos) return {name, one(rest)};
  return {name, {{"up", one(rest.substr(0, colon))}, {"down", one(rest.substr(colon + 1))}}};
}

std::pair<std::string, json> parse_bound_flag(const std::string& text) {
  const auto eq = text.find('=');
  const auto colon = text.find(':', eq == std::string::npos ? 0 : eq);
  if (eq == std::string::npos || eq == 0 || colon == std::string::npos) {
    throw ConfigError("--bound expects name=lower:upper");
  }
  const std::string name = text.substr(0, eq);
  return {name,
          json::array({parse_number(text.substr(eq + 1, colon - eq - 1), "--bound " + name),
                       parse_number(text.substr(colon + 1), "--bound " + name)})};
}

int report_failure(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  if (dynamic_cast<const UnknownIdError*>(&e)) return kUnknownId;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DataError*>(&e) ||
      dynamic_cast<const DimensionError*>(&e)) {
    return kConfigError;
  }
  return kTrainingFailure;
}

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const std::exception& e) {
    return report_failure(e, err);
  }
}

std::filesystem::path resolve_out(const RunConfig& config,
                                  const std::optional<std::filesystem::path>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv(kOutEnv); env != nullptr && *env != '\0') return env;
  return config.out;
}

std::string run_directory_name(std::uint64_t seed) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return std::string(buf) + "_seed" + std::to_string(seed);
}

}  // namespace longic::app
