#pragma once

// Metrics, the per-subject train/test protocol, the logistic-regression
// baseline, and data-efficiency curves.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nudgelab/core_model.hpp"
#include "nudgelab/fitting.hpp"
#include "nudgelab/types.hpp"

namespace nudgelab {

struct Metrics {
  double nll = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
};

/// Mean clipped NLL, accuracy, and F1 with positive class 1. F1 is 1 when
/// there are neither positive predictions nor positive truths.
Metrics metrics(std::span<const Prediction> predictions, std::span<const int> truths,
                double clip_eps = kDefaultClipEps);

struct SplitPlan {
  double train_fraction = 0.5;
  std::vector<std::uint64_t> run_seeds = {0, 1, 2, 3, 4};
  /// Absolute training-set size per subject; overrides train_fraction when set.
  std::optional<std::size_t> train_size;
};

struct TrialSplit {
  std::vector<BehaviorRecord> train;
  std::vector<BehaviorRecord> test;
};

/// Trials of `treatment` grouped by subject id (sorted by id).
std::map<std::string, std::vector<BehaviorRecord>> group_by_subject(
    std::span<const BehaviorRecord> dataset, Treatment treatment);

/// Deterministic shuffle of one subject's trials keyed by (run_seed, subject id).
std::vector<BehaviorRecord> shuffled_trials(std::span<const BehaviorRecord> trials,
                                            std::uint64_t run_seed);

/// round(train_fraction * T) trials for training, clamped to [1, T-1].
TrialSplit split_trials(std::span<const BehaviorRecord> trials, double train_fraction,
                        std::uint64_t run_seed);
/// Uses plan.train_size when set (must be < T), else plan.train_fraction.
TrialSplit split_trials(std::span<const BehaviorRecord> trials, const SplitPlan& plan,
                        std::uint64_t run_seed);

struct SubjectMetrics {
  std::string subject_id;
  std::uint64_t run_seed = 0;
  Metrics metrics;
};

struct EvalReport {
  Treatment treatment = Treatment::immediate;
  std::string method;
  double nll = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
  std::size_t n_subjects = 0;
  std::size_t n_runs = 0;
  std::vector<SubjectMetrics> per_subject;
  std::vector<std::string> warnings;
};

EvalReport evaluate_framework(std::span<const BehaviorRecord> dataset,
                              const PopulationPosterior& posterior, Treatment treatment,
                              const SplitPlan& plan, const FitConfig& config);

/// Population model without any nudge, scored on the same test splits.
EvalReport evaluate_unnudged(std::span<const BehaviorRecord> dataset,
                             const PopulationPosterior& posterior, Treatment treatment,
                             const SplitPlan& plan);

struct LogisticModel {
  std::vector<double> coef;
  double intercept = 0.0;
  /// Set when training labels were single-class.
  std::optional<int> constant_class;
  double clip_eps = kDefaultClipEps;

  double predict(std::span<const double> features) const;
};

/// L2-penalized (intercept unpenalized) logistic regression via Newton steps.
LogisticModel fit_logistic_regression(std::span<const std::vector<double>> rows,
                                      std::span<const int> labels, double l2,
                                      double clip_eps = kDefaultClipEps);

/// Treatment-specific baseline inputs: immediate (x, y^m, c^m); delayed
/// (x, y^h, y^m); explanation (x, e); independent x.
std::vector<double> baseline_features(const BehaviorRecord& record);

EvalReport baseline_logistic(std::span<const BehaviorRecord> dataset, Treatment treatment,
                             const SplitPlan& plan, double l2 = 1.0);

/// Point model for the deterministic ablation: logistic regression on the
/// subject's observed initial decisions.
WeightVector fit_point_model(std::span<const BehaviorRecord> trials, double l2 = 1.0);

/// Deterministic ablation under the same protocol: per-subject point model
/// fitted to the training initial decisions, then the nudge MLE on it.
EvalReport evaluate_deterministic_ablation(std::span<const BehaviorRecord> dataset,
                                           Treatment treatment, const SplitPlan& plan,
                                           const FitConfig& config, double l2 = 1.0);

struct CurveRow {
  std::size_t size = 0;
  std::string method;
  std::uint64_t run_seed = 0;
  double nll = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
  std::size_t n_subjects = 0;
};

struct LearningCurveOptions {
  std::vector<std::size_t> train_sizes = {5, 10, 15, 20, 25};
  bool include_deterministic = false;
  double baseline_l2 = 1.0;
};

struct LearningCurve {
  std::vector<CurveRow> rows;
  std::vector<std::string> warnings;

  /// Mean over runs for (size, method); nullopt when absent.
  std::optional<CurveRow> mean(std::size_t size, const std::string& method) const;
};

/// For every run seed, subject and size k: train on the first k shuffled
/// trials, test on the remainder. Methods: "framework", "logistic", and
/// "deterministic" (delayed only, when requested).
LearningCurve learning_curve(std::span<const BehaviorRecord> dataset,
                             const PopulationPosterior& posterior, Treatment treatment,
                             const LearningCurveOptions& options, const SplitPlan& plan,
                             const FitConfig& config);

}  // namespace nudgelab
