#pragma once

// Predictors for the final decision under each assistance form. Each
// predictor averages the logistic response over an ensemble whose weights
// have been shifted (immediate, delayed) or whose inputs have been masked
// (explanation). The bias coordinate is never shifted.

#include <span>

#include "nudgelab/core_model.hpp"
#include "nudgelab/types.hpp"

namespace nudgelab {

inline constexpr double kDefaultClipEps = 1e-6;

Prediction predict_immediate(std::span<const WeightVector> ensemble, const TaskInstance& task,
                             const ImmediateAssist& assist, const SharedSignVector& delta);
Prediction predict_immediate(const PopulationPosterior& posterior, const TaskInstance& task,
                             const ImmediateAssist& assist, const SharedSignVector& delta);

/// Filters on the initial decision, then applies affirm or contra depending
/// on whether the recommendation agrees with it.
Prediction predict_delayed(std::span<const WeightVector> ensemble, const TaskInstance& task,
                           const DelayedAssist& assist, const SharedSignVector& affirm,
                           const SharedSignVector& contra);
Prediction predict_delayed(const PopulationPosterior& posterior, const TaskInstance& task,
                           const DelayedAssist& assist, const SharedSignVector& affirm,
                           const SharedSignVector& contra);

Prediction predict_explanation(std::span<const WeightVector> ensemble, const TaskInstance& task,
                               const ExplanationAssist& assist, double delta_exp);
Prediction predict_explanation(const PopulationPosterior& posterior, const TaskInstance& task,
                               const ExplanationAssist& assist, double delta_exp);

/// Probability that the record's final decision is 1, clipped to [eps, 1-eps].
double decision_probability(const BehaviorRecord& record, std::span<const WeightVector> ensemble,
                            const NudgeParams& params, double clip_eps = kDefaultClipEps);
double decision_probability(const BehaviorRecord& record, const PopulationPosterior& posterior,
                            const NudgeParams& params, double clip_eps = kDefaultClipEps);

/// Unclipped prediction for a record; dispatches on its treatment.
Prediction predict_record(const BehaviorRecord& record, std::span<const WeightVector> ensemble,
                          const NudgeParams& params);

}  // namespace nudgelab
