#pragma once

// Independent human decision model: logistic response, a mean-field Gaussian
// population posterior fitted by variational inference, ensemble prediction,
// and filtering of the ensemble on an observed decision.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "nudgelab/types.hpp"

namespace nudgelab {

/// w.x + bias. Throws a config error on dimension mismatch.
double linear_score(const TaskInstance& task, const WeightVector& w);

/// sigmoid(w.x + bias).
double logistic_response(const TaskInstance& task, const WeightVector& w);

/// Diagonal Gaussian over [w_1..w_n, bias] with a frozen Monte-Carlo ensemble.
///
/// When `use_bias` is false the bias coordinate is carried at the prior and
/// every ensemble member has bias 0.
class PopulationPosterior {
 public:
  PopulationPosterior(std::vector<double> mean, std::vector<double> variance,
                      std::size_t ensemble_size, std::uint64_t seed, bool use_bias = true);

  /// Wraps an explicit ensemble; mean and variance are its moments (variance floored).
  static PopulationPosterior from_ensemble(Ensemble members);

  std::size_t dimension() const noexcept { return mean_.size() - 1; }
  const std::vector<double>& mean() const noexcept { return mean_; }
  const std::vector<double>& variance() const noexcept { return variance_; }
  const Ensemble& ensemble() const noexcept { return ensemble_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool use_bias() const noexcept { return use_bias_; }
  WeightVector mean_weights() const;

 private:
  PopulationPosterior() = default;

  std::vector<double> mean_;
  std::vector<double> variance_;
  Ensemble ensemble_;
  std::uint64_t seed_ = 0;
  bool use_bias_ = true;
};

/// KL(N(mean, diag(variance)) || N(0, prior_variance * I)).
double gaussian_kl(std::span<const double> mean, std::span<const double> variance,
                   double prior_variance);
double gaussian_kl(const PopulationPosterior& posterior, double prior_variance);

struct PopulationFitConfig {
  double prior_variance = 1.0;
  std::size_t mc_samples = 64;
  std::size_t ensemble_size = 1000;
  double learning_rate = 0.01;
  int iterations = 2000;
  std::uint64_t seed = 0;
  bool use_bias = true;
  double init_std = 0.1;
};

/// Reparameterized Monte-Carlo ELBO with common random numbers frozen at
/// construction. Parameters are [mu (d), rho (d)] with variance = exp(2 rho),
/// d = n + 1 with bias, n without.
class ElboObjective {
 public:
  ElboObjective(std::span<const TaskInstance> tasks, std::span<const int> decisions,
                const PopulationFitConfig& config);

  std::size_t parameter_count() const noexcept { return 2 * dim_; }
  std::size_t coordinate_count() const noexcept { return dim_; }

  double value(std::span<const double> params) const;
  /// Returns the ELBO and writes its gradient with respect to params.
  double value_and_gradient(std::span<const double> params, std::span<double> grad) const;

 private:
  double evaluate(std::span<const double> params, std::span<double> grad, bool want_grad) const;

  std::size_t dim_ = 0;
  std::size_t rows_ = 0;
  std::vector<double> design_;  // rows_ x dim_, constant 1 column when biased
  std::vector<int> y_;
  std::vector<double> noise_;  // mc_samples x dim_
  std::size_t samples_ = 0;
  double prior_variance_ = 1.0;
};

struct PopulationFitReport {
  PopulationPosterior posterior;
  double initial_elbo = 0.0;
  double final_elbo = 0.0;
  int best_iteration = 0;
};

/// Maximizes the ELBO with Adam and returns the best iterate.
PopulationFitReport fit_population_report(std::span<const std::pair<TaskInstance, int>> data,
                                          const PopulationFitConfig& config);
PopulationPosterior fit_population(std::span<const std::pair<TaskInstance, int>> data,
                                   const PopulationFitConfig& config);

Prediction predict_independent(std::span<const WeightVector> ensemble, const TaskInstance& task);
Prediction predict_independent(const PopulationPosterior& posterior, const TaskInstance& task);

struct FilteredEnsemble {
  Ensemble members;
  std::size_t source_size = 0;
  bool fallback_used = false;
};

/// Members whose thresholded response reproduces `observed`, or the whole
/// ensemble (flagged) when none does.
FilteredEnsemble condition_on_decision(std::span<const WeightVector> ensemble,
                                       const TaskInstance& task, int observed);
FilteredEnsemble condition_on_decision(const PopulationPosterior& posterior,
                                       const TaskInstance& task, int observed);

}  // namespace nudgelab
