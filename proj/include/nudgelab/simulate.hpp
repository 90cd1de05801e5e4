#pragma once

// Synthetic ground truth: a logistic surrogate AI and decision makers with
// known weights and nudge parameters, forward-sampled through the same
// predictors used for fitting.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nudgelab/random.hpp"
#include "nudgelab/types.hpp"

namespace nudgelab {

struct SurrogateAI {
  WeightVector weights;
  std::size_t top_k = 2;
};

/// (recommendation, confidence) with confidence = max(p, 1 - p).
std::pair<int, double> ai_recommend(const SurrogateAI& ai, const TaskInstance& task);

/// top_k largest |w_i (x_i - 0.5)|, ties broken toward the lower index.
std::vector<int> ai_explain(const SurrogateAI& ai, const TaskInstance& task);

struct SyntheticSubject {
  std::string id;
  WeightVector true_weights;
  NudgeParams true_params;
  Treatment treatment = Treatment::independent;
  /// 0 thresholds decisions; otherwise Bernoulli(sigmoid(logit(p) / T)).
  double noise_temperature = 1.0;
  std::optional<int> crt_score;
};

std::vector<BehaviorRecord> generate_behavior(const SyntheticSubject& subject,
                                              std::span<const TaskInstance> tasks,
                                              const SurrogateAI& ai, std::uint64_t seed);

/// Uniform tasks on [0,1]^n.
std::vector<TaskInstance> uniform_tasks(std::size_t count, std::size_t n, std::uint64_t seed);

struct NudgeDistribution {
  /// Realized ||delta|| is drawn uniformly from [norm_min, norm_max].
  double norm_min = 0.5;
  double norm_max = 4.0;
  /// P(tau > 0).
  double trust_probability = 0.5;
  double delta_exp_min = 0.0;
  double delta_exp_max = 1.0;
  /// Multipliers on ||delta|| by CRT group (intuitive, moderate, reflective).
  std::vector<double> group_scale = {1.0, 1.0, 1.0};
};

struct StudyConfig {
  std::size_t n_features = 6;
  std::size_t pool_size = 500;
  std::size_t trials_per_subject = 30;
  std::size_t independent_subjects = 53;
  std::size_t immediate_subjects = 50;
  std::size_t delayed_subjects = 53;
  std::size_t explanation_subjects = 46;
  WeightVector population_mean;  // empty weights: default profile for n features
  double population_sd = 0.5;
  SurrogateAI ai;                // empty weights: default profile for n features
  double noise_temperature = 1.0;
  NudgeDistribution nudges;
  std::uint64_t seed = 0;
};

struct SimulatedStudy {
  std::vector<TaskInstance> pool;
  SurrogateAI ai;
  std::vector<SyntheticSubject> subjects;
  std::vector<BehaviorRecord> records;
};

WeightVector default_population_mean(std::size_t n);
WeightVector default_ai_weights(std::size_t n);

/// Draws subjects for every treatment and generates their behavior.
SimulatedStudy simulate_study(const StudyConfig& config);

/// Draws a nudge of the given realized norm and sign with random direction.
SharedSignVector draw_shared_sign_vector(std::size_t n, double norm, double sign, Engine& engine);

}  // namespace nudgelab
