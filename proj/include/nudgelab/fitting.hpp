#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nudgelab/core_model.hpp"
#include "nudgelab/nudge.hpp"
#include "nudgelab/types.hpp"

namespace nudgelab {

struct FitConfig {
  double learning_rate = 0.05;
  int iterations = 500;
  std::uint64_t seed = 0;
  std::size_t ensemble_size = 1000;
  int restarts = 4;
  double clip_eps = kDefaultClipEps;
  /// Optional L2 penalty on the realized delta vectors; 0 disables it.
  double l2_penalty = 0.0;
};

struct NudgeFitResult {
  NudgeParams params;
  double train_nll = 0.0;
  bool converged = false;
  int restart_index = 0;
  std::vector<double> unconstrained;
};

/// Mean negative log-likelihood of a subject's final decisions as a function
/// of the unconstrained nudge parameters, over a frozen ensemble.
///
/// Layouts: immediate [tau, u_1..u_n]; delayed [tau_a, u_a.., tau_c, u_c..];
/// explanation [v]. Magnitudes are softplus(u), delta_exp is sigmoid(v).
class NudgeObjective {
 public:
  NudgeObjective(std::span<const BehaviorRecord> trials, std::span<const WeightVector> ensemble,
                 Treatment treatment, double clip_eps = kDefaultClipEps, double l2_penalty = 0.0);

  std::size_t parameter_count() const noexcept;
  Treatment treatment() const noexcept { return treatment_; }

  double value(std::span<const double> theta) const;
  double value_and_gradient(std::span<const double> theta, std::span<double> grad) const;
  /// Mean NLL without the penalty term.
  double nll(std::span<const double> theta) const;

  NudgeParams to_params(std::span<const double> theta) const;

 private:
  struct Trial {
    std::vector<double> scores;  // unshifted linear scores of the members used
    std::vector<double> coef;    // d(shift)/d(delta): signed, confidence-scaled features
    int branch = 0;
    int y = 0;
    double highlighted = 0.0;  // explanation: mean response on e*x
    double rest = 0.0;         // explanation: mean response on (1-e)*x
  };

  double evaluate(std::span<const double> theta, std::span<double> grad, bool want_grad,
                  bool with_penalty) const;

  Treatment treatment_;
  std::size_t n_ = 0;
  double clip_eps_;
  double l2_penalty_;
  std::vector<Trial> trials_;
};

/// Per-subject maximum-likelihood nudge parameters over the posterior ensemble.
NudgeFitResult fit_nudge(std::span<const BehaviorRecord> subject_trials,
                         const PopulationPosterior& posterior, Treatment treatment,
                         const FitConfig& config);

/// Same estimator with the ensemble replaced by a single point model.
/// Restricted to the delayed treatment.
NudgeFitResult fit_nudge_deterministic_ablation(std::span<const BehaviorRecord> subject_trials,
                                                const WeightVector& point_model,
                                                Treatment treatment, const FitConfig& config);

/// Generic form used by both of the above.
NudgeFitResult fit_nudge_on_ensemble(std::span<const BehaviorRecord> subject_trials,
                                     std::span<const WeightVector> ensemble, Treatment treatment,
                                     const FitConfig& config);

}  // namespace nudgelab
