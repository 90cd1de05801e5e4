#include "nudgelab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "nudgelab/core_model.hpp"
#include "nudgelab/error.hpp"
#include "nudgelab/nudge.hpp"
#include "nudgelab/optim.hpp"

namespace nudgelab {
namespace {

int sample_decision(double p, double temperature, Engine& engine) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(engine);
  if (temperature == 0.0) return threshold_decision(p);
  double q = p;
  if (temperature != 1.0) {
    const double pc = std::clamp(p, 1e-15, 1.0 - 1e-15);
    q = sigmoid(std::log(pc / (1.0 - pc)) / temperature);
  }
  return u < q ? 1 : 0;
}

std::string subject_name(const char* prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03zu", prefix, index + 1);
  return buf;
}

WeightVector cycled_profile(std::size_t n, std::span<const double> profile, double offset) {
  WeightVector w;
  for (std::size_t i = 0; i < n; ++i) w.weights.push_back(profile[i % profile.size()]);
  w.bias = -0.5 * std::accumulate(w.weights.begin(), w.weights.end(), 0.0) + offset;
  return w;
}

}  // namespace

std::pair<int, double> ai_recommend(const SurrogateAI& ai, const TaskInstance& task) {
  const double p = logistic_response(task, ai.weights);
  return {threshold_decision(p), std::max(p, 1.0 - p)};
}

std::vector<int> ai_explain(const SurrogateAI& ai, const TaskInstance& task) {
  const std::size_t n = task.size();
  require(ai.weights.size() == n, ErrorKind::config, "AI weights do not match task dimensionality");
  require(ai.top_k >= 1 && ai.top_k <= n, ErrorKind::config, "top_k must lie in [1, n]");
  std::vector<double> contribution(n);
  for (std::size_t i = 0; i < n; ++i) {
    contribution[i] = std::abs(ai.weights.weights[i] * (task.features[i] - 0.5));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return contribution[a] > contribution[b]; });
  std::vector<int> mask(n, 0);
  for (std::size_t k = 0; k < ai.top_k; ++k) mask[order[k]] = 1;
  return mask;
}

std::vector<BehaviorRecord> generate_behavior(const SyntheticSubject& subject,
                                              std::span<const TaskInstance> tasks,
                                              const SurrogateAI& ai, std::uint64_t seed) {
  require(!tasks.empty(), ErrorKind::usage, "behavior generation requires tasks");
  require(subject.true_params.matches(subject.treatment), ErrorKind::usage,
          "subject parameters do not match treatment");
  require(subject.noise_temperature >= 0.0, ErrorKind::config, "noise temperature must be >= 0");
  Engine engine = make_engine(seed, fnv1a(subject.id));
  const WeightVector members[] = {subject.true_weights};
  const NudgeParams& params = subject.true_params;

  std::vector<BehaviorRecord> out;
  out.reserve(tasks.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const TaskInstance& task = tasks[t];
    BehaviorRecord r;
    r.subject_id = subject.id;
    r.treatment = subject.treatment;
    r.trial_index = static_cast<int>(t);
    r.features = task.features;
    r.crt_score = subject.crt_score;
    double p = 0.0;
    switch (subject.treatment) {
      case Treatment::independent:
        p = predict_independent(members, task).probability;
        break;
      case Treatment::immediate: {
        const auto [rec, conf] = ai_recommend(ai, task);
        r.ai_recommendation = rec;
        r.ai_confidence = conf;
        p = predict_immediate(members, task, {rec, conf}, *params.delta_direct).probability;
        break;
      }
      case Treatment::delayed: {
        const double p0 = logistic_response(task, subject.true_weights);
        const int initial = sample_decision(p0, subject.noise_temperature, engine);
        const int rec = ai_recommend(ai, task).first;
        r.ai_recommendation = rec;
        r.initial_decision = initial;
        p = predict_delayed(members, task, {rec, initial}, *params.delta_affirm,
                            *params.delta_contra)
                .probability;
        break;
      }
      case Treatment::explanation: {
        r.explanation_mask = ai_explain(ai, task);
        p = predict_explanation(members, task, {*r.explanation_mask}, *params.delta_exp).probability;
        break;
      }
    }
    r.final_decision = sample_decision(p, subject.noise_temperature, engine);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TaskInstance> uniform_tasks(std::size_t count, std::size_t n, std::uint64_t seed) {
  Engine engine = make_engine(seed, 0x7461736bULL);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<TaskInstance> tasks(count);
  for (auto& t : tasks) {
    t.features.resize(n);
    for (double& x : t.features) x = unif(engine);
  }
  return tasks;
}

WeightVector default_population_mean(std::size_t n) {
  static constexpr double profile[] = {1.5, -1.0, 2.0, 0.5, 2.5, -1.5};
  return cycled_profile(n, profile, 0.25);
}

WeightVector default_ai_weights(std::size_t n) {
  static constexpr double profile[] = {2.0, -1.2, 3.0, 0.6, 3.5, -2.0};
  return cycled_profile(n, profile, 0.0);
}

SharedSignVector draw_shared_sign_vector(std::size_t n, double norm, double sign, Engine& engine) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> m(n);
  double sq = 0.0;
  for (double& v : m) {
    v = std::abs(normal(engine)) + 0.2;
    sq += v * v;
  }
  const double len = std::sqrt(sq);
  for (double& v : m) v /= len;
  return {sign * norm, std::move(m)};
}

SimulatedStudy simulate_study(const StudyConfig& config) {
  const std::size_t n = config.n_features;
  require(n >= 1, ErrorKind::config, "n_features must be positive");
  require(config.trials_per_subject >= 1 && config.trials_per_subject <= config.pool_size,
          ErrorKind::config, "trials_per_subject must lie in [1, pool_size]");
  require(config.nudges.group_scale.size() == 3, ErrorKind::config, "group_scale needs 3 entries");
  require(config.nudges.norm_min >= 0.0 && config.nudges.norm_max >= config.nudges.norm_min,
          ErrorKind::config, "invalid nudge norm range");
  require(config.nudges.delta_exp_min >= 0.0 && config.nudges.delta_exp_max <= 1.0 &&
              config.nudges.delta_exp_min <= config.nudges.delta_exp_max,
          ErrorKind::config, "invalid delta_exp range");

  SimulatedStudy study;
  study.ai = config.ai;
  if (study.ai.weights.weights.empty()) study.ai.weights = default_ai_weights(n);
  const WeightVector mean =
      config.population_mean.weights.empty() ? default_population_mean(n) : config.population_mean;
  require(mean.size() == n && study.ai.weights.size() == n, ErrorKind::config,
          "population/AI weights must have n_features entries");
  study.pool = uniform_tasks(config.pool_size, n, config.seed);

  Engine engine = make_engine(config.seed, 0x7375626aULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> crt(0, 3);

  auto draw_norm = [&](int crt_score) {
    const int group = crt_score == 0 ? 0 : (crt_score == 3 ? 2 : 1);
    const auto& nd = config.nudges;
    return (nd.norm_min + (nd.norm_max - nd.norm_min) * unif(engine)) *
           nd.group_scale[static_cast<std::size_t>(group)];
  };
  auto draw_sign = [&] { return unif(engine) < config.nudges.trust_probability ? 1.0 : -1.0; };

  const std::pair<Treatment, std::size_t> plan[] = {
      {Treatment::independent, config.independent_subjects},
      {Treatment::immediate, config.immediate_subjects},
      {Treatment::delayed, config.delayed_subjects},
      {Treatment::explanation, config.explanation_subjects},
  };
  const char* prefixes[] = {"ind", "imm", "del", "exp"};
  for (std::size_t g = 0; g < 4; ++g) {
    const auto [treatment, count] = plan[g];
    for (std::size_t s = 0; s < count; ++s) {
      SyntheticSubject subject;
      subject.id = subject_name(prefixes[g], s);
      subject.treatment = treatment;
      subject.noise_temperature = config.noise_temperature;
      subject.crt_score = crt(engine);
      subject.true_weights = mean;
      for (double& w : subject.true_weights.weights) w += config.population_sd * normal(engine);
      subject.true_weights.bias += config.population_sd * normal(engine);
      switch (treatment) {
        case Treatment::independent: break;
        case Treatment::immediate: {
          const double norm = draw_norm(*subject.crt_score);
          subject.true_params.delta_direct = draw_shared_sign_vector(n, norm, draw_sign(), engine);
          break;
        }
        case Treatment::delayed: {
          const double na = draw_norm(*subject.crt_score);
          subject.true_params.delta_affirm = draw_shared_sign_vector(n, na, draw_sign(), engine);
          const double nc = draw_norm(*subject.crt_score);
          subject.true_params.delta_contra = draw_shared_sign_vector(n, nc, draw_sign(), engine);
          break;
        }
        case Treatment::explanation: {
          const auto& nd = config.nudges;
          subject.true_params.delta_exp =
              nd.delta_exp_min + (nd.delta_exp_max - nd.delta_exp_min) * unif(engine);
          break;
        }
      }
      // Sample the subject's trials from the shared pool without replacement.
      std::vector<std::size_t> idx(study.pool.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::vector<TaskInstance> tasks;
      for (std::size_t k = 0; k < config.trials_per_subject; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
        std::swap(idx[k], idx[pick(engine)]);
        tasks.push_back(study.pool[idx[k]]);
      }
      auto records = generate_behavior(subject, tasks, study.ai, derive_seed(config.seed, 7));
      study.records.insert(study.records.end(), records.begin(), records.end());
      study.subjects.push_back(std::move(subject));
    }
  }
  return study;
}

}  // namespace nudgelab
