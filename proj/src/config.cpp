#include "nudgelab/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "nudgelab/error.hpp"
#include "nudgelab/random.hpp"

namespace nudgelab {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  require(j.is_object(), ErrorKind::config, where + " must be a JSON object");
  std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    require(known.count(key) > 0, ErrorKind::config, "unknown config key '" + where + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& target) {
  if (j.contains(key)) {
    try {
      target = j.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(ErrorKind::config, std::string("config key '") + key + "': " + e.what());
    }
  }
}

void positive(bool ok, const char* field) {
  require(ok, ErrorKind::config, std::string("config field '") + field + "' must be positive");
}

}  // namespace

void RunConfig::synchronize() {
  population.seed = seed;
  nudge.seed = seed;
  simulation.seed = seed;
  simulation.n_features = n_features;
}

void RunConfig::validate() const {
  positive(n_features > 0, "n_features");
  positive(population.prior_variance > 0.0, "population.prior_variance");
  positive(population.mc_samples > 0, "population.mc_samples");
  positive(population.ensemble_size > 0, "population.ensemble_size");
  positive(population.learning_rate > 0.0, "population.learning_rate");
  positive(population.iterations > 0, "population.iterations");
  positive(population.init_std > 0.0, "population.init_std");
  positive(nudge.learning_rate > 0.0, "nudge.learning_rate");
  positive(nudge.iterations > 0, "nudge.iterations");
  positive(nudge.ensemble_size > 0, "nudge.ensemble_size");
  positive(nudge.restarts >= 1, "nudge.restarts");
  positive(nudge.clip_eps > 0.0 && nudge.clip_eps < 0.5, "nudge.clip_eps");
  require(nudge.l2_penalty >= 0.0, ErrorKind::config, "config field 'nudge.l2_penalty' must be >= 0");
  require(split.train_fraction > 0.0 && split.train_fraction < 1.0, ErrorKind::config,
          "config field 'split.train_fraction' must lie in (0,1)");
  positive(!split.run_seeds.empty(), "split.run_seeds");
  positive(!train_sizes.empty(), "train_sizes");
  for (auto s : train_sizes) positive(s > 0, "train_sizes");
  positive(baseline_l2 > 0.0, "baseline_l2");
  require(permutations >= 100, ErrorKind::config, "config field 'permutations' must be >= 100");
  positive(simulation.pool_size > 0, "simulation.pool_size");
  positive(simulation.trials_per_subject > 0, "simulation.trials_per_subject");
  require(simulation.trials_per_subject <= simulation.pool_size, ErrorKind::config,
          "simulation.trials_per_subject exceeds pool_size");
  require(simulation.population_sd >= 0.0 && simulation.noise_temperature >= 0.0, ErrorKind::config,
          "simulation spreads must be >= 0");
  const auto& nd = simulation.nudges;
  require(nd.norm_min >= 0.0 && nd.norm_max >= nd.norm_min, ErrorKind::config,
          "simulation norm range invalid");
  require(nd.trust_probability >= 0.0 && nd.trust_probability <= 1.0, ErrorKind::config,
          "simulation.trust_probability must lie in [0,1]");
  require(nd.delta_exp_min >= 0.0 && nd.delta_exp_max <= 1.0 && nd.delta_exp_min <= nd.delta_exp_max,
          ErrorKind::config, "simulation delta_exp range invalid");
  require(nd.group_scale.size() == 3, ErrorKind::config, "simulation.group_scale needs 3 entries");
  require(simulation.ai.top_k >= 1 && simulation.ai.top_k <= n_features, ErrorKind::config,
          "simulation.ai.top_k must lie in [1, n_features]");
  if (!simulation.population_mean.weights.empty()) {
    require(simulation.population_mean.size() == n_features, ErrorKind::config,
            "simulation.population_mean needs n_features weights");
  }
  if (!simulation.ai.weights.weights.empty()) {
    require(simulation.ai.weights.size() == n_features, ErrorKind::config,
            "simulation.ai.weights needs n_features weights");
  }
}

json to_json(const WeightVector& w) { return {{"weights", w.weights}, {"bias", w.bias}}; }

WeightVector weight_vector_from_json(const json& j) {
  reject_unknown(j, {"weights", "bias"}, "weights.");
  WeightVector w;
  read(j, "weights", w.weights);
  read(j, "bias", w.bias);
  return w;
}

json to_json(const NudgeParams& p) {
  json j = json::object();
  auto vec = [](const SharedSignVector& v) {
    return json{{"scale", v.scale}, {"magnitudes", v.magnitudes}, {"realized", v.realized()}};
  };
  if (p.delta_direct) j["delta_direct"] = vec(*p.delta_direct);
  if (p.delta_affirm) j["delta_affirm"] = vec(*p.delta_affirm);
  if (p.delta_contra) j["delta_contra"] = vec(*p.delta_contra);
  if (p.delta_exp) j["delta_exp"] = *p.delta_exp;
  return j;
}

NudgeParams nudge_params_from_json(const json& j) {
  reject_unknown(j, {"delta_direct", "delta_affirm", "delta_contra", "delta_exp"}, "params.");
  auto vec = [](const json& v) {
    SharedSignVector s;
    read(v, "scale", s.scale);
    read(v, "magnitudes", s.magnitudes);
    return s;
  };
  NudgeParams p;
  if (j.contains("delta_direct")) p.delta_direct = vec(j["delta_direct"]);
  if (j.contains("delta_affirm")) p.delta_affirm = vec(j["delta_affirm"]);
  if (j.contains("delta_contra")) p.delta_contra = vec(j["delta_contra"]);
  if (j.contains("delta_exp")) p.delta_exp = j["delta_exp"].get<double>();
  return p;
}

json to_json(const RunConfig& c) {
  const auto& s = c.simulation;
  json sim = {
      {"pool_size", s.pool_size},
      {"trials_per_subject", s.trials_per_subject},
      {"subjects",
       {{"independent", s.independent_subjects},
        {"immediate", s.immediate_subjects},
        {"delayed", s.delayed_subjects},
        {"explanation", s.explanation_subjects}}},
      {"population_sd", s.population_sd},
      {"noise_temperature", s.noise_temperature},
      {"norm_min", s.nudges.norm_min},
      {"norm_max", s.nudges.norm_max},
      {"trust_probability", s.nudges.trust_probability},
      {"delta_exp_min", s.nudges.delta_exp_min},
      {"delta_exp_max", s.nudges.delta_exp_max},
      {"group_scale", s.nudges.group_scale},
      {"ai_top_k", s.ai.top_k},
  };
  if (!s.population_mean.weights.empty()) sim["population_mean"] = to_json(s.population_mean);
  if (!s.ai.weights.weights.empty()) sim["ai_weights"] = to_json(s.ai.weights);
  return {
      {"n_features", c.n_features},
      {"seed", c.seed},
      {"population",
       {{"prior_variance", c.population.prior_variance},
        {"mc_samples", c.population.mc_samples},
        {"ensemble_size", c.population.ensemble_size},
        {"learning_rate", c.population.learning_rate},
        {"iterations", c.population.iterations},
        {"use_bias", c.population.use_bias},
        {"init_std", c.population.init_std}}},
      {"nudge",
       {{"learning_rate", c.nudge.learning_rate},
        {"iterations", c.nudge.iterations},
        {"ensemble_size", c.nudge.ensemble_size},
        {"restarts", c.nudge.restarts},
        {"clip_eps", c.nudge.clip_eps},
        {"l2_penalty", c.nudge.l2_penalty}}},
      {"split", {{"train_fraction", c.split.train_fraction}, {"run_seeds", c.split.run_seeds}}},
      {"train_sizes", c.train_sizes},
      {"baseline_l2", c.baseline_l2},
      {"permutations", c.permutations},
      {"simulation", sim},
  };
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  reject_unknown(j,
                 {"n_features", "seed", "population", "nudge", "split", "train_sizes",
                  "baseline_l2", "permutations", "simulation"},
                 "");
  read(j, "n_features", c.n_features);
  read(j, "seed", c.seed);
  read(j, "train_sizes", c.train_sizes);
  read(j, "baseline_l2", c.baseline_l2);
  read(j, "permutations", c.permutations);
  if (j.contains("population")) {
    const auto& p = j["population"];
    reject_unknown(p, {"prior_variance", "mc_samples", "ensemble_size", "learning_rate", "iterations",
                       "use_bias", "init_std"},
                   "population.");
    read(p, "prior_variance", c.population.prior_variance);
    read(p, "mc_samples", c.population.mc_samples);
    read(p, "ensemble_size", c.population.ensemble_size);
    read(p, "learning_rate", c.population.learning_rate);
    read(p, "iterations", c.population.iterations);
    read(p, "use_bias", c.population.use_bias);
    read(p, "init_std", c.population.init_std);
  }
  if (j.contains("nudge")) {
    const auto& p = j["nudge"];
    reject_unknown(p, {"learning_rate", "iterations", "ensemble_size", "restarts", "clip_eps", "l2_penalty"},
                   "nudge.");
    read(p, "learning_rate", c.nudge.learning_rate);
    read(p, "iterations", c.nudge.iterations);
    read(p, "ensemble_size", c.nudge.ensemble_size);
    read(p, "restarts", c.nudge.restarts);
    read(p, "clip_eps", c.nudge.clip_eps);
    read(p, "l2_penalty", c.nudge.l2_penalty);
  }
  if (j.contains("split")) {
    const auto& p = j["split"];
    reject_unknown(p, {"train_fraction", "run_seeds"}, "split.");
    read(p, "train_fraction", c.split.train_fraction);
    read(p, "run_seeds", c.split.run_seeds);
  }
  if (j.contains("simulation")) {
    const auto& p = j["simulation"];
    reject_unknown(p, {"pool_size", "trials_per_subject", "subjects", "population_sd", "noise_temperature",
                       "norm_min", "norm_max", "trust_probability", "delta_exp_min", "delta_exp_max",
                       "group_scale", "ai_top_k", "population_mean", "ai_weights"},
                   "simulation.");
    auto& s = c.simulation;
    read(p, "pool_size", s.pool_size);
    read(p, "trials_per_subject", s.trials_per_subject);
    read(p, "population_sd", s.population_sd);
    read(p, "noise_temperature", s.noise_temperature);
    read(p, "norm_min", s.nudges.norm_min);
    read(p, "norm_max", s.nudges.norm_max);
    read(p, "trust_probability", s.nudges.trust_probability);
    read(p, "delta_exp_min", s.nudges.delta_exp_min);
    read(p, "delta_exp_max", s.nudges.delta_exp_max);
    read(p, "group_scale", s.nudges.group_scale);
    read(p, "ai_top_k", s.ai.top_k);
    if (p.contains("subjects")) {
      const auto& q = p["subjects"];
      reject_unknown(q, {"independent", "immediate", "delayed", "explanation"}, "simulation.subjects.");
      read(q, "independent", s.independent_subjects);
      read(q, "immediate", s.immediate_subjects);
      read(q, "delayed", s.delayed_subjects);
      read(q, "explanation", s.explanation_subjects);
    }
    if (p.contains("population_mean")) s.population_mean = weight_vector_from_json(p["population_mean"]);
    if (p.contains("ai_weights")) s.ai.weights = weight_vector_from_json(p["ai_weights"]);
  }
  c.synchronize();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::usage, "cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::config, "config file is not valid JSON: " + std::string(e.what()));
  }
  return run_config_from_json(j);
}

std::string config_fingerprint(const RunConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(to_json(config).dump())));
  return buf;
}

}  // namespace nudgelab
