#pragma once

#include "longic/pipeline.hpp"
#include "longic/synth.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace longic::app {

/// Process exit statuses of the `longic` tool.
enum ExitCode : int {
  kOk = 0,
  kTrainingFailure = 1,
  kConfigError = 2,
  kUnknownId = 3,
  kBindFailure = 4,
};

/// Environment variable that overrides the configured output directory.
inline constexpr const char* kOutEnv = "LONGIC_OUT";

struct RunConfig {
  std::optional<std::filesystem::path> cohort_dir;  ///< exactly one of these two
  std::optional<GeneratorSpec> generator;
  ModelConfig models;
  nlohmann::json costs = nlohmann::json::object();   ///< per-feature overrides
  nlohmann::json bounds = nlohmann::json::object();  ///< per-feature overrides
  double budget = 2.0;
  std::vector<double> budgets = {0.0, 1.0, 2.0, 4.0};
  std::vector<int> experiments = {1, 2, 3};
  std::uint64_t seed = 1;
  std::filesystem::path out = "runs";
  Experiment1Options experiment1;
  Experiment2Options experiment2;
  Experiment3Options experiment3;
};

/// Relative cohort paths resolve against `base_dir`. Throws ConfigError.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& file);
nlohmann::json to_json(const RunConfig& config);

std::vector<int> parse_experiments(const std::string& text);

/// Loads or generates the cohort named by the config.
Cohort materialize(const RunConfig& config);

/// Overrides on top of the cohort's own costs. Each entry is a number (both
/// directions), "locked", or {"up": x, "down": y} where x, y are numbers or
/// "locked". Throws ConfigError for unknown or non-direct features.
CostModel apply_cost_overrides(const Cohort& cohort, const CostModel& base,
                               const nlohmann::json& overrides);
/// Entries are [lower, upper]; null keeps the cohort bound.
Bounds apply_bound_overrides(const Cohort& cohort, const Bounds& base,
                             const nlohmann::json& overrides);

/// "name=up:down" (either side may be "locked"; a single value sets both).
std::pair<std::string, nlohmann::json> parse_cost_flag(const std::string& text);
/// "name=lower:upper".
std::pair<std::string, nlohmann::json> parse_bound_flag(const std::string& text);

/// Maps a caught exception to an exit code and writes the diagnostic.
int report_failure(const std::exception& e, std::ostream& err);
/// Runs `body`, translating library exceptions into exit codes.
int guarded(const std::function<int()>& body, std::ostream& err);

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::vector<int>> experiments;
};

/// Output directory after applying the flag, then the environment, then the config.
std::filesystem::path resolve_out(const RunConfig& config,
                                  const std::optional<std::filesystem::path>& flag);

/// Writes visit files and cohort.json (plus generator.json) into `out`.
int cmd_generate(const std::filesystem::path& spec_file, const std::filesystem::path& out,
                 std::optional<std::uint64_t> seed, std::ostream& stdout_, std::ostream& stderr_);

/// Trains, runs the selected experiments and writes one report directory
/// per experiment under <out>/<timestamp>_seed<N>/. Prints the run directory.
int cmd_run(const std::filesystem::path& config_file, const RunOverrides& overrides,
            std::ostream& stdout_, std::ostream& stderr_);

struct RecommendRequest {
  std::string patient;
  std::optional<double> budget;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> cost_flags;
  std::vector<std::string> bound_flags;
};

/// Prints the recommendation JSON for one patient.
int cmd_recommend(const std::filesystem::path& config_file, const RecommendRequest& request,
                  std::ostream& stdout_, std::ostream& stderr_);

/// Blocks serving the HTTP API until SIGINT/SIGTERM.
int cmd_serve(const std::filesystem::path& config_file, const std::string& bind,
              std::optional<std::uint64_t> seed, std::ostream& stdout_, std::ostream& stderr_);

/// Name of a fresh run directory: UTC timestamp plus seed.
std::string run_directory_name(std::uint64_t seed);

}  // namespace longic::app
