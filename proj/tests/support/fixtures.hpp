#pragma once

#include "longic/pipeline.hpp"
#include "longic/synth.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace fixture {

/// Default generator shape at a reduced size.
inline longic::GeneratorSpec small_spec(std::size_t n = 600, std::uint64_t seed = 11) {
  auto spec = longic::default_generator_spec();
  spec.n = n;
  spec.seed = seed;
  return spec;
}

inline const longic::Cohort& small_cohort() {
  static const longic::Cohort cohort = longic::generate(small_spec()).cohort;
  return cohort;
}

inline const longic::TrainedModels& small_models() {
  static const longic::TrainedModels models =
      longic::train_all(small_cohort(), longic::ModelConfig{}, 5);
  return models;
}

/// Full-size default cohort (n = 2000), generated once per process.
inline const longic::SyntheticCohort& default_synthetic() {
  static const longic::SyntheticCohort s = [] {
    auto spec = longic::default_generator_spec();
    spec.seed = 1;
    return longic::generate(spec);
  }();
  return s;
}

inline const longic::TrainedModels& default_models() {
  static const longic::TrainedModels models =
      longic::train_all(default_synthetic().cohort, longic::ModelConfig{}, 1);
  return models;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() /
             ("longic_" + tag + "_" + std::to_string(rng() % 1000000007ULL));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture
