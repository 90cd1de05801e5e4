#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "nudgelab/core_model.hpp"
#include "nudgelab/eval.hpp"
#include "nudgelab/fitting.hpp"
#include "nudgelab/simulate.hpp"

namespace nudgelab {

/// Everything a pipeline command needs besides its input paths.
struct RunConfig {
  std::size_t n_features = 6;
  std::uint64_t seed = 0;
  PopulationFitConfig population;
  FitConfig nudge;
  SplitPlan split;
  std::vector<std::size_t> train_sizes = {5, 10, 15, 20, 25};
  double baseline_l2 = 1.0;
  int permutations = 10000;
  StudyConfig simulation;

  /// Propagates `seed` and `n_features` into the nested sections.
  void synchronize();
  /// Throws a config error naming the first invalid field.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// 16 hex digits of FNV-1a over the canonical JSON form.
std::string config_fingerprint(const RunConfig& config);

nlohmann::json to_json(const WeightVector& w);
WeightVector weight_vector_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NudgeParams& p);
NudgeParams nudge_params_from_json(const nlohmann::json& j);

}  // namespace nudgelab
