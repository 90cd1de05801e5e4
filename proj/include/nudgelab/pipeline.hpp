#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "nudgelab/config.hpp"
#include "nudgelab/types.hpp"

namespace nudgelab {

enum class Command { fit_population, fit_nudge, evaluate, learning_curve, analyze, simulate };

Command parse_command(std::string_view name);
std::string_view to_string(Command c);

struct PipelineOptions {
  RunConfig config;
  /// Behavior CSV; defaults to <out_dir>/behavior.csv.
  std::optional<std::filesystem::path> data_path;
  std::filesystem::path out_dir = "out";
  std::optional<Treatment> treatment;
  std::optional<std::size_t> train_size;
  bool skip_invalid = false;
  bool deterministic_ablation = false;
};

/// Runs one command; throws nudgelab::Error on failure.
void execute(Command command, const PipelineOptions& options, std::ostream& log);

/// Runs one command and maps failures to exit codes: 0 success, 1
/// validation/usage/config error, 2 numeric failure.
int run_pipeline(Command command, const PipelineOptions& options, std::ostream& log,
                 std::ostream& err);

/// Loads a population posterior written by fit-population.
PopulationPosterior load_population(const std::filesystem::path& path);

}  // namespace nudgelab
