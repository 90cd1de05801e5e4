#include "nudgelab/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nudgelab/error.hpp"
#include "nudgelab/optim.hpp"
#include "nudgelab/random.hpp"

namespace nudgelab {
namespace {

void check_trials(std::span<const BehaviorRecord> trials, Treatment treatment) {
  require(!trials.empty(), ErrorKind::usage, "nudge fit requires at least one training trial");
  require(treatment != Treatment::independent, ErrorKind::usage,
          "independent treatment has no nudge parameters");
  for (const auto& r : trials) {
    require(r.subject_id == trials.front().subject_id, ErrorKind::usage,
            "nudge fit trials must belong to one subject");
    require(r.treatment == treatment, ErrorKind::usage,
            "trial treatment '" + std::string(to_string(r.treatment)) + "' does not match '" +
                std::string(to_string(treatment)) + "'");
  }
}

}  // namespace

NudgeObjective::NudgeObjective(std::span<const BehaviorRecord> trials,
                               std::span<const WeightVector> ensemble, Treatment treatment,
                               double clip_eps, double l2_penalty)
    : treatment_(treatment), clip_eps_(clip_eps), l2_penalty_(l2_penalty) {
  check_trials(trials, treatment);
  require(!ensemble.empty(), ErrorKind::config, "ensemble must be nonempty");
  n_ = ensemble.front().size();
  trials_.reserve(trials.size());
  for (const auto& record : trials) {
    const TaskInstance task = record.task();
    require(task.size() == n_, ErrorKind::config, "trial dimensionality does not match ensemble");
    Trial t;
    t.y = record.final_decision;
    const Assistance assist = record.assistance();
    switch (treatment) {
      case Treatment::immediate: {
        const auto& a = std::get<ImmediateAssist>(assist);
        require(a.confidence >= 0.5 && a.confidence <= 1.0, ErrorKind::input,
                "AI confidence must lie in [0.5, 1]");
        const double k = (2.0 * a.recommendation - 1.0) * a.confidence;
        for (double x : task.features) t.coef.push_back(k * x);
        for (const auto& w : ensemble) t.scores.push_back(linear_score(task, w));
        break;
      }
      case Treatment::delayed: {
        const auto& a = std::get<DelayedAssist>(assist);
        const double k = 2.0 * a.recommendation - 1.0;
        for (double x : task.features) t.coef.push_back(k * x);
        t.branch = a.recommendation == a.initial_decision ? 0 : 1;
        const FilteredEnsemble filtered = condition_on_decision(ensemble, task, a.initial_decision);
        for (const auto& w : filtered.members) t.scores.push_back(linear_score(task, w));
        break;
      }
      case Treatment::explanation: {
        const auto& a = std::get<ExplanationAssist>(assist);
        t.highlighted = predict_explanation(ensemble, task, a, 1.0).probability;
        t.rest = predict_explanation(ensemble, task, a, 0.0).probability;
        break;
      }
      case Treatment::independent: break;
    }
    trials_.push_back(std::move(t));
  }
}

std::size_t NudgeObjective::parameter_count() const noexcept {
  switch (treatment_) {
    case Treatment::immediate: return n_ + 1;
    case Treatment::delayed: return 2 * (n_ + 1);
    case Treatment::explanation: return 1;
    case Treatment::independent: return 0;
  }
  return 0;
}

double NudgeObjective::value(std::span<const double> theta) const {
  return evaluate(theta, {}, false, true);
}

double NudgeObjective::value_and_gradient(std::span<const double> theta,
                                          std::span<double> grad) const {
  return evaluate(theta, grad, true, true);
}

double NudgeObjective::nll(std::span<const double> theta) const {
  return evaluate(theta, {}, false, false);
}

double NudgeObjective::evaluate(std::span<const double> theta, std::span<double> grad,
                                bool want_grad, bool with_penalty) const {
  require(theta.size() == parameter_count(), ErrorKind::config, "nudge parameter size mismatch");
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  const double inv_t = 1.0 / static_cast<double>(trials_.size());

  // -d(mean NLL)/dp for one trial, zero when the probability is clipped.
  auto nll_term = [&](double p, int y, double& dnll_dp) {
    const double pc = std::clamp(p, clip_eps_, 1.0 - clip_eps_);
    dnll_dp = (pc == p) ? -(y / pc - (1 - y) / (1.0 - pc)) * inv_t : 0.0;
    return -(y ? std::log(pc) : std::log(1.0 - pc)) * inv_t;
  };

  if (treatment_ == Treatment::explanation) {
    const double de = sigmoid(theta[0]);
    double total = 0.0;
    for (const auto& t : trials_) {
      const double p = de * t.highlighted + (1.0 - de) * t.rest;
      double d = 0.0;
      total += nll_term(p, t.y, d);
      if (want_grad) grad[0] += d * (t.highlighted - t.rest) * de * (1.0 - de);
    }
    return total;
  }

  const std::size_t branches = treatment_ == Treatment::delayed ? 2 : 1;
  std::vector<std::vector<double>> delta(branches, std::vector<double>(n_));
  std::vector<std::vector<double>> ddelta(branches, std::vector<double>(n_, 0.0));
  for (std::size_t b = 0; b < branches; ++b) {
    const double tau = theta[b * (n_ + 1)];
    for (std::size_t i = 0; i < n_; ++i) delta[b][i] = tau * softplus(theta[b * (n_ + 1) + 1 + i]);
  }

  double total = 0.0;
  for (const auto& t : trials_) {
    const auto& d = delta[static_cast<std::size_t>(t.branch)];
    double shift = 0.0;
    for (std::size_t i = 0; i < n_; ++i) shift += t.coef[i] * d[i];
    double sum = 0.0, slope = 0.0;
    for (double z : t.scores) {
      const double s = sigmoid(z + shift);
      sum += s;
      slope += s * (1.0 - s);
    }
    const double inv_s = 1.0 / static_cast<double>(t.scores.size());
    double dnll_dp = 0.0;
    total += nll_term(sum * inv_s, t.y, dnll_dp);
    if (want_grad && dnll_dp != 0.0) {
      auto& g = ddelta[static_cast<std::size_t>(t.branch)];
      const double f = dnll_dp * slope * inv_s;
      for (std::size_t i = 0; i < n_; ++i) g[i] += f * t.coef[i];
    }
  }
  if (with_penalty && l2_penalty_ > 0.0) {
    for (std::size_t b = 0; b < branches; ++b) {
      for (std::size_t i = 0; i < n_; ++i) {
        total += l2_penalty_ * delta[b][i] * delta[b][i];
        ddelta[b][i] += 2.0 * l2_penalty_ * delta[b][i];
      }
    }
  }
  if (want_grad) {
    for (std::size_t b = 0; b < branches; ++b) {
      const std::size_t off = b * (n_ + 1);
      const double tau = theta[off];
      for (std::size_t i = 0; i < n_; ++i) {
        const double u = theta[off + 1 + i];
        grad[off] += ddelta[b][i] * softplus(u);
        grad[off + 1 + i] = ddelta[b][i] * tau * sigmoid(u);
      }
    }
  }
  return total;
}

NudgeParams NudgeObjective::to_params(std::span<const double> theta) const {
  require(theta.size() == parameter_count(), ErrorKind::config, "nudge parameter size mismatch");
  auto vec = [&](std::size_t off) {
    SharedSignVector v;
    v.scale = theta[off];
    for (std::size_t i = 0; i < n_; ++i) v.magnitudes.push_back(softplus(theta[off + 1 + i]));
    return v;
  };
  NudgeParams p;
  switch (treatment_) {
    case Treatment::immediate: p.delta_direct = vec(0); break;
    case Treatment::delayed:
      p.delta_affirm = vec(0);
      p.delta_contra = vec(n_ + 1);
      break;
    case Treatment::explanation: p.delta_exp = sigmoid(theta[0]); break;
    case Treatment::independent: break;
  }
  return p;
}

NudgeFitResult fit_nudge_on_ensemble(std::span<const BehaviorRecord> subject_trials,
                                     std::span<const WeightVector> ensemble, Treatment treatment,
                                     const FitConfig& config) {
  require(config.learning_rate > 0.0 && config.iterations > 0 && config.restarts >= 1 &&
              config.clip_eps > 0.0 && config.clip_eps < 0.5 && config.l2_penalty >= 0.0,
          ErrorKind::config, "invalid nudge fit configuration");
  const NudgeObjective objective(subject_trials, ensemble, treatment, config.clip_eps,
                                 config.l2_penalty);
  const std::size_t dim = objective.parameter_count();
  const std::size_t blocks = treatment == Treatment::delayed ? 2 : 1;
  const std::size_t n = ensemble.front().size();

  Engine engine = make_engine(config.seed, fnv1a(subject_trials.front().subject_id));
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> best_theta;
  double best_value = std::numeric_limits<double>::infinity();
  int best_restart = 0;
  bool any_gradient = false;
  std::vector<double> grad(dim);

  for (int r = 0; r < config.restarts; ++r) {
    std::vector<double> theta(dim, 0.0);
    if (treatment == Treatment::explanation) {
      theta[0] = r == 0 ? 0.0 : 2.0 * normal(engine);
    } else {
      for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t off = b * (n + 1);
        double tau = 0.0;
        if (r == 1) tau = 1.0;
        else if (r == 2) tau = -1.0;
        else if (r > 2) tau = normal(engine);
        theta[off] = tau;
        for (std::size_t i = 0; i < n; ++i) {
          theta[off + 1 + i] =
              r == 0 ? inverse_softplus(0.1) : inverse_softplus(0.5) + 0.5 * normal(engine);
        }
      }
    }
    Adam adam(dim, {.learning_rate = config.learning_rate});
    double value = objective.value_and_gradient(theta, grad);
    double run_best = value;
    std::vector<double> run_theta = theta;
    for (double g : grad) any_gradient = any_gradient || std::abs(g) > 1e-14;
    for (int it = 0; it < config.iterations; ++it) {
      adam.step(theta, grad);
      value = objective.value_and_gradient(theta, grad);
      if (!std::isfinite(value)) {
        fail(ErrorKind::numeric, "nudge likelihood diverged at iteration " + std::to_string(it + 1));
      }
      if (value < run_best) {
        run_best = value;
        run_theta = theta;
      }
    }
    if (run_best < best_value) {
      best_value = run_best;
      best_theta = std::move(run_theta);
      best_restart = r;
    }
  }

  objective.value_and_gradient(best_theta, grad);
  double gnorm = 0.0;
  for (double g : grad) gnorm += g * g;
  gnorm = std::sqrt(gnorm);

  NudgeFitResult result;
  result.params = objective.to_params(best_theta);
  result.train_nll = objective.nll(best_theta);
  result.converged = any_gradient && gnorm < 1e-2;
  result.restart_index = best_restart;
  result.unconstrained = std::move(best_theta);
  return result;
}

NudgeFitResult fit_nudge(std::span<const BehaviorRecord> subject_trials,
                         const PopulationPosterior& posterior, Treatment treatment,
                         const FitConfig& config) {
  require(config.ensemble_size > 0, ErrorKind::config, "ensemble size must be positive");
  const auto& ens = posterior.ensemble();
  const std::size_t k = std::min(config.ensemble_size, ens.size());
  return fit_nudge_on_ensemble(subject_trials, std::span<const WeightVector>(ens).first(k),
                               treatment, config);
}

NudgeFitResult fit_nudge_deterministic_ablation(std::span<const BehaviorRecord> subject_trials,
                                                const WeightVector& point_model,
                                                Treatment treatment, const FitConfig& config) {
  require(treatment == Treatment::delayed, ErrorKind::usage,
          "deterministic ablation is defined for the delayed treatment only");
  const WeightVector single[] = {point_model};
  return fit_nudge_on_ensemble(subject_trials, single, treatment, config);
}

}  // namespace nudgelab
