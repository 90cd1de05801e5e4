#include "nudgelab/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nudgelab/error.hpp"
#include "nudgelab/optim.hpp"
#include "nudgelab/random.hpp"

namespace nudgelab {

double linear_score(const TaskInstance& task, const WeightVector& w) {
  require(task.size() == w.size(), ErrorKind::config,
          "dimension mismatch: task has " + std::to_string(task.size()) + " features, weights have " +
              std::to_string(w.size()));
  double z = w.bias;
  for (std::size_t i = 0; i < w.size(); ++i) z += w.weights[i] * task.features[i];
  return z;
}

double logistic_response(const TaskInstance& task, const WeightVector& w) {
  return sigmoid(linear_score(task, w));
}

PopulationPosterior::PopulationPosterior(std::vector<double> mean, std::vector<double> variance,
                                         std::size_t ensemble_size, std::uint64_t seed,
                                         bool use_bias)
    : mean_(std::move(mean)), variance_(std::move(variance)), seed_(seed), use_bias_(use_bias) {
  require(mean_.size() >= 2 && mean_.size() == variance_.size(), ErrorKind::config,
          "posterior mean and variance must both have n+1 entries");
  require(ensemble_size > 0, ErrorKind::config, "ensemble size must be positive");
  for (double v : variance_) {
    require(v > 0.0 && std::isfinite(v), ErrorKind::domain, "posterior variances must be positive");
  }
  const std::size_t n = mean_.size() - 1;
  Engine engine = make_engine(seed_, 0x656e73656d626c65ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  ensemble_.reserve(ensemble_size);
  for (std::size_t s = 0; s < ensemble_size; ++s) {
    WeightVector w;
    w.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      w.weights[i] = mean_[i] + std::sqrt(variance_[i]) * normal(engine);
    }
    const double b = normal(engine);
    w.bias = use_bias_ ? mean_[n] + std::sqrt(variance_[n]) * b : 0.0;
    ensemble_.push_back(std::move(w));
  }
}

PopulationPosterior PopulationPosterior::from_ensemble(Ensemble members) {
  require(!members.empty(), ErrorKind::config, "ensemble must be nonempty");
  const std::size_t n = members.front().size();
  for (const auto& m : members) {
    require(m.size() == n, ErrorKind::config, "ensemble members must share dimensionality");
  }
  PopulationPosterior p;
  p.mean_.assign(n + 1, 0.0);
  p.variance_.assign(n + 1, 0.0);
  const double count = static_cast<double>(members.size());
  for (const auto& m : members) {
    for (std::size_t i = 0; i < n; ++i) p.mean_[i] += m.weights[i] / count;
    p.mean_[n] += m.bias / count;
  }
  for (const auto& m : members) {
    for (std::size_t i = 0; i < n; ++i) {
      p.variance_[i] += (m.weights[i] - p.mean_[i]) * (m.weights[i] - p.mean_[i]) / count;
    }
    p.variance_[n] += (m.bias - p.mean_[n]) * (m.bias - p.mean_[n]) / count;
  }
  for (double& v : p.variance_) v = std::max(v, 1e-12);
  p.ensemble_ = std::move(members);
  p.use_bias_ = true;
  return p;
}

WeightVector PopulationPosterior::mean_weights() const {
  const std::size_t n = dimension();
  WeightVector w;
  w.weights.assign(mean_.begin(), mean_.begin() + static_cast<std::ptrdiff_t>(n));
  w.bias = use_bias_ ? mean_[n] : 0.0;
  return w;
}

double gaussian_kl(std::span<const double> mean, std::span<const double> variance,
                   double prior_variance) {
  require(mean.size() == variance.size(), ErrorKind::config, "mean/variance size mismatch");
  require(prior_variance > 0.0, ErrorKind::domain, "prior variance must be positive");
  double kl = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    require(variance[i] > 0.0, ErrorKind::domain, "variance must be positive");
    const double ratio = variance[i] / prior_variance;
    kl += 0.5 * (ratio + mean[i] * mean[i] / prior_variance - 1.0 - std::log(ratio));
  }
  return kl;
}

double gaussian_kl(const PopulationPosterior& posterior, double prior_variance) {
  std::span<const double> mean = posterior.mean();
  std::span<const double> var = posterior.variance();
  if (!posterior.use_bias()) {
    mean = mean.first(posterior.dimension());
    var = var.first(posterior.dimension());
  }
  return gaussian_kl(mean, var, prior_variance);
}

ElboObjective::ElboObjective(std::span<const TaskInstance> tasks, std::span<const int> decisions,
                             const PopulationFitConfig& config)
    : samples_(config.mc_samples), prior_variance_(config.prior_variance) {
  require(!tasks.empty(), ErrorKind::usage, "population fit requires nonempty data");
  require(tasks.size() == decisions.size(), ErrorKind::usage, "tasks/decisions length mismatch");
  require(config.mc_samples > 0, ErrorKind::config, "mc_samples must be positive");
  require(config.prior_variance > 0.0, ErrorKind::domain, "prior variance must be positive");
  const std::size_t n = tasks.front().size();
  dim_ = config.use_bias ? n + 1 : n;
  rows_ = tasks.size();
  design_.reserve(rows_ * dim_);
  for (std::size_t r = 0; r < rows_; ++r) {
    require(tasks[r].size() == n, ErrorKind::config, "all tasks must share dimensionality");
    require(decisions[r] == 0 || decisions[r] == 1, ErrorKind::input, "decisions must be 0 or 1");
    design_.insert(design_.end(), tasks[r].features.begin(), tasks[r].features.end());
    if (config.use_bias) design_.push_back(1.0);
  }
  y_.assign(decisions.begin(), decisions.end());
  Engine engine = make_engine(config.seed, 0x63726eULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  noise_.resize(samples_ * dim_);
  for (double& e : noise_) e = normal(engine);
}

double ElboObjective::value(std::span<const double> params) const {
  return evaluate(params, {}, false);
}

double ElboObjective::value_and_gradient(std::span<const double> params,
                                         std::span<double> grad) const {
  return evaluate(params, grad, true);
}

double ElboObjective::evaluate(std::span<const double> params, std::span<double> grad,
                               bool want_grad) const {
  require(params.size() == 2 * dim_, ErrorKind::config, "ELBO parameter size mismatch");
  const auto mu = params.first(dim_);
  const auto rho = params.subspan(dim_, dim_);
  std::vector<double> sigma(dim_), w(dim_), resid(dim_);
  for (std::size_t j = 0; j < dim_; ++j) sigma[j] = std::exp(rho[j]);
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

  double loglik = 0.0;
  for (std::size_t s = 0; s < samples_; ++s) {
    const double* eps = &noise_[s * dim_];
    for (std::size_t j = 0; j < dim_; ++j) w[j] = mu[j] + sigma[j] * eps[j];
    std::fill(resid.begin(), resid.end(), 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
      const double* x = &design_[r * dim_];
      double z = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) z += w[j] * x[j];
      loglik += y_[r] ? log_sigmoid(z) : log_sigmoid(-z);
      if (want_grad) {
        const double g = static_cast<double>(y_[r]) - sigmoid(z);
        for (std::size_t j = 0; j < dim_; ++j) resid[j] += g * x[j];
      }
    }
    if (want_grad) {
      for (std::size_t j = 0; j < dim_; ++j) {
        grad[j] += resid[j];
        grad[dim_ + j] += resid[j] * eps[j] * sigma[j];
      }
    }
  }
  const double inv_s = 1.0 / static_cast<double>(samples_);
  loglik *= inv_s;

  double kl = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) {
    const double var = sigma[j] * sigma[j];
    const double ratio = var / prior_variance_;
    kl += 0.5 * (ratio + mu[j] * mu[j] / prior_variance_ - 1.0 - 2.0 * rho[j] + std::log(prior_variance_));
    if (want_grad) {
      grad[j] = grad[j] * inv_s - mu[j] / prior_variance_;
      grad[dim_ + j] = grad[dim_ + j] * inv_s - (ratio - 1.0);
    }
  }
  return loglik - kl;
}

PopulationFitReport fit_population_report(std::span<const std::pair<TaskInstance, int>> data,
                                          const PopulationFitConfig& config) {
  require(!data.empty(), ErrorKind::usage, "population fit requires nonempty data");
  require(config.iterations > 0 && config.learning_rate > 0.0 && config.init_std > 0.0,
          ErrorKind::config, "population fit settings must be positive");
  std::vector<TaskInstance> tasks;
  std::vector<int> decisions;
  tasks.reserve(data.size());
  decisions.reserve(data.size());
  for (const auto& [task, y] : data) {
    tasks.push_back(task);
    decisions.push_back(y);
  }
  const ElboObjective objective(tasks, decisions, config);
  const std::size_t d = objective.coordinate_count();
  const std::size_t n = tasks.front().size();

  std::vector<double> params(2 * d, 0.0);
  std::fill(params.begin() + static_cast<std::ptrdiff_t>(d), params.end(), std::log(config.init_std));
  std::vector<double> grad(2 * d);
  std::vector<double> best = params;

  Adam adam(params.size(), {.learning_rate = config.learning_rate});
  double elbo = objective.value_and_gradient(params, grad);
  const double initial = elbo;
  double best_elbo = elbo;
  int best_iteration = 0;
  for (int it = 1; it <= config.iterations; ++it) {
    for (double& g : grad) g = -g;  // ascent
    adam.step(params, grad);
    elbo = objective.value_and_gradient(params, grad);
    if (!std::isfinite(elbo)) {
      fail(ErrorKind::numeric, "ELBO diverged at iteration " + std::to_string(it));
    }
    if (elbo > best_elbo) {
      best_elbo = elbo;
      best = params;
      best_iteration = it;
    }
  }

  std::vector<double> mean(n + 1, 0.0);
  std::vector<double> variance(n + 1, config.prior_variance);
  for (std::size_t j = 0; j < d; ++j) {
    mean[j] = best[j];
    variance[j] = std::exp(2.0 * best[d + j]);
  }
  return {PopulationPosterior(std::move(mean), std::move(variance), config.ensemble_size,
                              config.seed, config.use_bias),
          initial, best_elbo, best_iteration};
}

PopulationPosterior fit_population(std::span<const std::pair<TaskInstance, int>> data,
                                   const PopulationFitConfig& config) {
  return fit_population_report(data, config).posterior;
}

Prediction predict_independent(std::span<const WeightVector> ensemble, const TaskInstance& task) {
  require(!ensemble.empty(), ErrorKind::config, "ensemble must be nonempty");
  double sum = 0.0;
  for (const auto& w : ensemble) sum += logistic_response(task, w);
  const double p = sum / static_cast<double>(ensemble.size());
  return {p, threshold_decision(p)};
}

Prediction predict_independent(const PopulationPosterior& posterior, const TaskInstance& task) {
  return predict_independent(posterior.ensemble(), task);
}

FilteredEnsemble condition_on_decision(std::span<const WeightVector> ensemble,
                                       const TaskInstance& task, int observed) {
  FilteredEnsemble out;
  out.source_size = ensemble.size();
  for (const auto& w : ensemble) {
    if (threshold_decision(logistic_response(task, w)) == observed) out.members.push_back(w);
  }
  if (out.members.empty()) {
    out.members.assign(ensemble.begin(), ensemble.end());
    out.fallback_used = true;
  }
  return out;
}

FilteredEnsemble condition_on_decision(const PopulationPosterior& posterior,
                                       const TaskInstance& task, int observed) {
  return condition_on_decision(posterior.ensemble(), task, observed);
}

}  // namespace nudgelab
