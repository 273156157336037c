#pragma once

#include "longic/cohort.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace longic {

/// How a synthetic feature is generated at each visit. All values are
/// produced on a standardized scale z and mapped to raw = mean + sd * z.
enum class SynthRole {
  Static,         ///< drawn once per patient (U)
  Lifestyle,      ///< loads on the drifting diet/activity factors (D)
  Physiological,  ///< linear in its parents plus noise (I)
  Indicator,      ///< binary threshold of a linear score of its parents
};

std::string_view to_string(SynthRole role);
SynthRole parse_synth_role(std::string_view text);

struct SynthFeature {
  std::string name;
  FeatureKind kind = FeatureKind::Continuous;
  Partition partition = Partition::Unchangeable;
  SynthRole role = SynthRole::Static;
  std::string unit;
  double mean = 0.0;
  double sd = 1.0;
  double prevalence = 0.5;  ///< binary features
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  double cost_up = 1.0;
  double cost_down = 1.0;
  double risk_coef = 0.0;  ///< weight in the ground-truth logit
  double diet_loading = 0.0;
  double activity_loading = 0.0;
  double static_weight = 0.0;  ///< patient-specific persistent component
  std::vector<std::pair<std::string, double>> parents;
};

struct GeneratorSpec {
  std::size_t n = 2000;
  int visits = 3;
  double event_rate = 0.02;
  double drift = 0.7;           ///< AR(1) innovation scale of the latent factors, in [0, 1]
  double noise = 0.1;           ///< per-visit measurement noise
  double history_weight = 0.3;  ///< weight of the previous visit's risk score in the logit
  double dropout = 0.05;        ///< random loss to follow-up per visit
  std::uint64_t seed = 1;
  std::string version = "synthetic-v1";
  std::vector<SynthFeature> features;
  /// missing[k] lists the features not measured at visit k + 2.
  std::vector<std::vector<std::string>> missing;
  std::optional<double> intercept;  ///< unset: calibrated to event_rate on each visit's survivors

  /// Throws ConfigError; messages name the offending feature.
  void validate() const;
};

/// 24 features (8 U, 8 I, 8 D) with 5 more dropped at each later visit;
/// direct-feature costs follow the lifestyle cost table (e.g. exercise 10,
/// alcohol 9, increase-only produce, decrease-only fats and cigarettes).
GeneratorSpec default_generator_spec();

/// Overlays the keys present in `j` on the default spec.
GeneratorSpec generator_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GeneratorSpec& spec);

struct SyntheticCohort {
  Cohort cohort;
  double intercept = 0.0;           ///< visit 1
  std::vector<double> intercepts;  ///< one per visit
};

/// Deterministic in the spec (including seed). Output satisfies continuity
/// and event exclusion by construction.
SyntheticCohort generate(const GeneratorSpec& spec);

/// Logit intercept that makes the mean visit-1 risk equal event_rate.
double calibrate_intercept(const GeneratorSpec& spec);

/// Standardized view used by the ground truth: (raw - mean) / sd for
/// continuous features, raw - prevalence for binary ones.
std::vector<double> nominal_standardize(const GeneratorSpec& spec, std::span<const double> raw);

/// The generating probability for a raw instance in schema order.
/// `previous` (raw, same layout) adds the history term when non-empty.
double ground_truth_risk(const GeneratorSpec& spec, std::span<const double> raw,
                         double intercept, std::span<const double> previous = {});
/// Uses spec.intercept or calibrates it.
double ground_truth_risk(const GeneratorSpec& spec, std::span<const double> raw);

}  // namespace longic
