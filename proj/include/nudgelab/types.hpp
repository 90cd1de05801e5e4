#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace nudgelab {

/// A decision task: normalized features in [0,1] and an optional correct label.
struct TaskInstance {
  std::vector<double> features;
  std::optional<int> label;

  std::size_t size() const noexcept { return features.size(); }
};

/// Logistic decision weights plus an intercept.
struct WeightVector {
  std::vector<double> weights;
  double bias = 0.0;

  std::size_t size() const noexcept { return weights.size(); }
  bool operator==(const WeightVector&) const = default;
};

using Ensemble = std::vector<WeightVector>;

enum class Treatment { independent, immediate, delayed, explanation };

std::string_view to_string(Treatment t);
Treatment parse_treatment(std::string_view name);

struct Prediction {
  double probability = 0.5;
  int decision = 1;
};

/// Decision rule shared by every predictor: probability >= 0.5 means 1.
inline int threshold_decision(double probability) noexcept {
  return probability >= 0.5 ? 1 : 0;
}

struct ImmediateAssist {
  int recommendation = 0;
  double confidence = 0.5;
};

struct DelayedAssist {
  int recommendation = 0;
  int initial_decision = 0;
};

struct ExplanationAssist {
  std::vector<int> mask;
};

using Assistance = std::variant<ImmediateAssist, DelayedAssist, ExplanationAssist>;

/// delta = scale * magnitudes; all components share the sign of `scale`.
struct SharedSignVector {
  double scale = 0.0;
  std::vector<double> magnitudes;

  std::vector<double> realized() const;
  static SharedSignVector zero(std::size_t n) { return {0.0, std::vector<double>(n, 0.0)}; }
};

struct NudgeParams {
  std::optional<SharedSignVector> delta_direct;
  std::optional<SharedSignVector> delta_affirm;
  std::optional<SharedSignVector> delta_contra;
  std::optional<double> delta_exp;

  /// Zero nudge carrying exactly the fields used by `treatment`.
  static NudgeParams zero(Treatment treatment, std::size_t n);
  bool matches(Treatment treatment) const;
};

/// One behavioral trial as stored in the behavior CSV.
struct BehaviorRecord {
  std::string subject_id;
  Treatment treatment = Treatment::independent;
  int trial_index = 0;
  std::vector<double> features;
  std::optional<int> ai_recommendation;
  std::optional<double> ai_confidence;
  std::optional<std::vector<int>> explanation_mask;
  std::optional<int> initial_decision;
  int final_decision = 0;
  std::optional<int> crt_score;

  TaskInstance task() const { return {features, std::nullopt}; }
  /// Assistance payload; throws a usage error for independent records or missing fields.
  Assistance assistance() const;

  bool operator==(const BehaviorRecord&) const = default;
};

}  // namespace nudgelab
