#include "nudgelab/nudge.hpp"

#include <algorithm>
#include <string>

#include "nudgelab/error.hpp"
#include "nudgelab/optim.hpp"

namespace nudgelab {
namespace {

void check_delta(const TaskInstance& task, const SharedSignVector& delta) {
  require(delta.magnitudes.size() == task.size(), ErrorKind::config,
          "nudge vector has " + std::to_string(delta.magnitudes.size()) + " entries, task has " +
              std::to_string(task.size()));
}

// Mean of sigmoid(bias + sum_i (w_i + shift_i) x_i) over the ensemble.
double mean_shifted_response(std::span<const WeightVector> ensemble, const TaskInstance& task,
                             std::span<const double> shift) {
  require(!ensemble.empty(), ErrorKind::config, "ensemble must be nonempty");
  double sum = 0.0;
  for (const auto& w : ensemble) {
    require(w.size() == task.size(), ErrorKind::config, "dimension mismatch between task and weights");
    double z = w.bias;
    for (std::size_t i = 0; i < w.size(); ++i) z += (w.weights[i] + shift[i]) * task.features[i];
    sum += sigmoid(z);
  }
  return sum / static_cast<double>(ensemble.size());
}

std::vector<double> scaled(const SharedSignVector& delta, double factor) {
  std::vector<double> out = delta.realized();
  for (double& v : out) v *= factor;
  return out;
}

}  // namespace

Prediction predict_immediate(std::span<const WeightVector> ensemble, const TaskInstance& task,
                             const ImmediateAssist& assist, const SharedSignVector& delta) {
  require(assist.confidence >= 0.5 && assist.confidence <= 1.0, ErrorKind::input,
          "AI confidence must lie in [0.5, 1]");
  require(assist.recommendation == 0 || assist.recommendation == 1, ErrorKind::input,
          "AI recommendation must be 0 or 1");
  check_delta(task, delta);
  const double direction = 2.0 * assist.recommendation - 1.0;
  const auto shift = scaled(delta, direction * assist.confidence);
  const double p = mean_shifted_response(ensemble, task, shift);
  return {p, threshold_decision(p)};
}

Prediction predict_immediate(const PopulationPosterior& posterior, const TaskInstance& task,
                             const ImmediateAssist& assist, const SharedSignVector& delta) {
  return predict_immediate(posterior.ensemble(), task, assist, delta);
}

Prediction predict_delayed(std::span<const WeightVector> ensemble, const TaskInstance& task,
                           const DelayedAssist& assist, const SharedSignVector& affirm,
                           const SharedSignVector& contra) {
  check_delta(task, affirm);
  check_delta(task, contra);
  const FilteredEnsemble filtered = condition_on_decision(ensemble, task, assist.initial_decision);
  const SharedSignVector& branch =
      assist.recommendation == assist.initial_decision ? affirm : contra;
  const auto shift = scaled(branch, 2.0 * assist.recommendation - 1.0);
  const double p = mean_shifted_response(filtered.members, task, shift);
  return {p, threshold_decision(p)};
}

Prediction predict_delayed(const PopulationPosterior& posterior, const TaskInstance& task,
                           const DelayedAssist& assist, const SharedSignVector& affirm,
                           const SharedSignVector& contra) {
  return predict_delayed(posterior.ensemble(), task, assist, affirm, contra);
}

Prediction predict_explanation(std::span<const WeightVector> ensemble, const TaskInstance& task,
                               const ExplanationAssist& assist, double delta_exp) {
  require(delta_exp >= 0.0 && delta_exp <= 1.0, ErrorKind::input, "delta_exp must lie in [0, 1]");
  require(assist.mask.size() == task.size(), ErrorKind::config, "mask length must equal n");
  require(!ensemble.empty(), ErrorKind::config, "ensemble must be nonempty");
  TaskInstance highlighted = task;
  TaskInstance rest = task;
  for (std::size_t i = 0; i < task.size(); ++i) {
    const int e = assist.mask[i];
    require(e == 0 || e == 1, ErrorKind::input, "mask entries must be 0 or 1");
    highlighted.features[i] = e * task.features[i];
    rest.features[i] = (1 - e) * task.features[i];
  }
  double sum = 0.0;
  for (const auto& w : ensemble) {
    sum += delta_exp * logistic_response(highlighted, w) +
           (1.0 - delta_exp) * logistic_response(rest, w);
  }
  const double p = sum / static_cast<double>(ensemble.size());
  return {p, threshold_decision(p)};
}

Prediction predict_explanation(const PopulationPosterior& posterior, const TaskInstance& task,
                               const ExplanationAssist& assist, double delta_exp) {
  return predict_explanation(posterior.ensemble(), task, assist, delta_exp);
}

Prediction predict_record(const BehaviorRecord& record, std::span<const WeightVector> ensemble,
                          const NudgeParams& params) {
  require(params.matches(record.treatment), ErrorKind::usage,
          "nudge parameters do not match treatment '" + std::string(to_string(record.treatment)) + "'");
  const TaskInstance task = record.task();
  switch (record.treatment) {
    case Treatment::independent: return predict_independent(ensemble, task);
    case Treatment::immediate:
      return predict_immediate(ensemble, task, std::get<ImmediateAssist>(record.assistance()),
                               *params.delta_direct);
    case Treatment::delayed:
      return predict_delayed(ensemble, task, std::get<DelayedAssist>(record.assistance()),
                             *params.delta_affirm, *params.delta_contra);
    case Treatment::explanation:
      return predict_explanation(ensemble, task, std::get<ExplanationAssist>(record.assistance()),
                                 *params.delta_exp);
  }
  fail(ErrorKind::usage, "unknown treatment");
}

double decision_probability(const BehaviorRecord& record, std::span<const WeightVector> ensemble,
                            const NudgeParams& params, double clip_eps) {
  const double p = predict_record(record, ensemble, params).probability;
  return std::clamp(p, clip_eps, 1.0 - clip_eps);
}

double decision_probability(const BehaviorRecord& record, const PopulationPosterior& posterior,
                            const NudgeParams& params, double clip_eps) {
  return decision_probability(record, posterior.ensemble(), params, clip_eps);
}

}  // namespace nudgelab
