#include "nudgelab/eval.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "nudgelab/error.hpp"
#include "nudgelab/nudge.hpp"
#include "nudgelab/optim.hpp"
#include "nudgelab/random.hpp"

namespace nudgelab {
namespace {

using SubjectScorer = std::function<Metrics(const TrialSplit&)>;

// Means over subjects within a run, then over runs.
void aggregate(EvalReport& report) {
  std::map<std::uint64_t, std::vector<const SubjectMetrics*>> by_run;
  for (const auto& s : report.per_subject) by_run[s.run_seed].push_back(&s);
  report.nll = report.accuracy = report.f1 = 0.0;
  report.n_runs = by_run.size();
  if (by_run.empty()) return;
  for (const auto& [seed, rows] : by_run) {
    Metrics m;
    for (const auto* r : rows) {
      m.nll += r->metrics.nll;
      m.accuracy += r->metrics.accuracy;
      m.f1 += r->metrics.f1;
    }
    const double k = static_cast<double>(rows.size());
    report.nll += m.nll / k;
    report.accuracy += m.accuracy / k;
    report.f1 += m.f1 / k;
  }
  const double runs = static_cast<double>(by_run.size());
  report.nll /= runs;
  report.accuracy /= runs;
  report.f1 /= runs;
}

EvalReport run_protocol(std::span<const BehaviorRecord> dataset, Treatment treatment,
                        const SplitPlan& plan, std::string method, const SubjectScorer& score) {
  require(plan.train_fraction > 0.0 && plan.train_fraction < 1.0, ErrorKind::config,
          "train_fraction must lie in (0, 1)");
  require(!plan.run_seeds.empty(), ErrorKind::config, "split plan needs at least one run seed");
  EvalReport report;
  report.treatment = treatment;
  report.method = std::move(method);
  const auto subjects = group_by_subject(dataset, treatment);
  for (const auto& [id, trials] : subjects) {
    if (trials.size() < 2) {
      report.warnings.push_back("subject " + id + " excluded: fewer than 2 trials");
      continue;
    }
    if (plan.train_size && *plan.train_size >= trials.size()) {
      report.warnings.push_back("subject " + id + " excluded: train size " +
                                std::to_string(*plan.train_size) + " leaves no test trials");
      continue;
    }
    ++report.n_subjects;
    for (std::uint64_t seed : plan.run_seeds) {
      const TrialSplit split = split_trials(trials, plan, seed);
      report.per_subject.push_back({id, seed, score(split)});
    }
  }
  aggregate(report);
  return report;
}

Metrics score_predictions(std::span<const BehaviorRecord> test,
                          const std::function<Prediction(const BehaviorRecord&)>& predict,
                          double clip_eps = kDefaultClipEps) {
  std::vector<Prediction> preds;
  std::vector<int> truths;
  for (const auto& r : test) {
    preds.push_back(predict(r));
    truths.push_back(r.final_decision);
  }
  return metrics(preds, truths, clip_eps);
}

Metrics score_nudge(std::span<const BehaviorRecord> test, std::span<const WeightVector> ensemble,
                    const NudgeParams& params, double clip_eps) {
  return score_predictions(
      test, [&](const BehaviorRecord& r) { return predict_record(r, ensemble, params); }, clip_eps);
}

Metrics score_logistic(std::span<const BehaviorRecord> train, std::span<const BehaviorRecord> test,
                       double l2) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (const auto& r : train) {
    rows.push_back(baseline_features(r));
    labels.push_back(r.final_decision);
  }
  const LogisticModel model = fit_logistic_regression(rows, labels, l2);
  return score_predictions(test, [&](const BehaviorRecord& r) {
    const double p = model.predict(baseline_features(r));
    return Prediction{p, threshold_decision(p)};
  });
}

std::span<const WeightVector> fit_ensemble(const PopulationPosterior& posterior,
                                           const FitConfig& config) {
  const auto& ens = posterior.ensemble();
  return std::span<const WeightVector>(ens).first(std::min(config.ensemble_size, ens.size()));
}

}  // namespace

Metrics metrics(std::span<const Prediction> predictions, std::span<const int> truths,
                double clip_eps) {
  require(predictions.size() == truths.size(), ErrorKind::usage,
          "predictions and truths must have equal length");
  require(!predictions.empty(), ErrorKind::usage, "metrics need at least one prediction");
  double nll = 0.0;
  std::size_t correct = 0, tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const double p = std::clamp(predictions[i].probability, clip_eps, 1.0 - clip_eps);
    const int y = truths[i];
    const int d = predictions[i].decision;
    nll -= y ? std::log(p) : std::log(1.0 - p);
    correct += (d == y);
    tp += (d == 1 && y == 1);
    fp += (d == 1 && y == 0);
    fn += (d == 0 && y == 1);
  }
  const double count = static_cast<double>(truths.size());
  const std::size_t denom = 2 * tp + fp + fn;
  const double f1 = denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  return {nll / count, static_cast<double>(correct) / count, f1};
}

std::map<std::string, std::vector<BehaviorRecord>> group_by_subject(
    std::span<const BehaviorRecord> dataset, Treatment treatment) {
  std::map<std::string, std::vector<BehaviorRecord>> out;
  for (const auto& r : dataset) {
    if (r.treatment == treatment) out[r.subject_id].push_back(r);
  }
  for (auto& [id, trials] : out) {
    std::stable_sort(trials.begin(), trials.end(), [](const auto& a, const auto& b) {
      return a.trial_index < b.trial_index;
    });
  }
  return out;
}

std::vector<BehaviorRecord> shuffled_trials(std::span<const BehaviorRecord> trials,
                                            std::uint64_t run_seed) {
  std::vector<BehaviorRecord> out(trials.begin(), trials.end());
  if (out.empty()) return out;
  Engine engine = make_engine(run_seed, fnv1a(out.front().subject_id));
  for (std::size_t i = out.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(out[i - 1], out[pick(engine)]);
  }
  return out;
}

TrialSplit split_trials(std::span<const BehaviorRecord> trials, double train_fraction,
                        std::uint64_t run_seed) {
  require(trials.size() >= 2, ErrorKind::usage, "a split needs at least 2 trials");
  auto shuffled = shuffled_trials(trials, run_seed);
  const auto total = static_cast<double>(shuffled.size());
  auto k = static_cast<std::size_t>(std::llround(train_fraction * total));
  k = std::clamp<std::size_t>(k, 1, shuffled.size() - 1);
  TrialSplit split;
  split.train.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(k));
  split.test.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(k), shuffled.end());
  return split;
}

TrialSplit split_trials(std::span<const BehaviorRecord> trials, const SplitPlan& plan,
                        std::uint64_t run_seed) {
  if (!plan.train_size) return split_trials(trials, plan.train_fraction, run_seed);
  require(trials.size() >= 2 && *plan.train_size >= 1 && *plan.train_size < trials.size(),
          ErrorKind::usage, "train size must leave at least one test trial");
  auto shuffled = shuffled_trials(trials, run_seed);
  const auto k = static_cast<std::ptrdiff_t>(*plan.train_size);
  TrialSplit split;
  split.train.assign(shuffled.begin(), shuffled.begin() + k);
  split.test.assign(shuffled.begin() + k, shuffled.end());
  return split;
}

EvalReport evaluate_framework(std::span<const BehaviorRecord> dataset,
                              const PopulationPosterior& posterior, Treatment treatment,
                              const SplitPlan& plan, const FitConfig& config) {
  const auto ensemble = fit_ensemble(posterior, config);
  return run_protocol(dataset, treatment, plan, "framework", [&](const TrialSplit& split) {
    const NudgeFitResult fit = fit_nudge_on_ensemble(split.train, ensemble, treatment, config);
    return score_nudge(split.test, ensemble, fit.params, config.clip_eps);
  });
}

EvalReport evaluate_unnudged(std::span<const BehaviorRecord> dataset,
                             const PopulationPosterior& posterior, Treatment treatment,
                             const SplitPlan& plan) {
  return run_protocol(dataset, treatment, plan, "unnudged", [&](const TrialSplit& split) {
    return score_predictions(split.test, [&](const BehaviorRecord& r) {
      return predict_independent(posterior, r.task());
    });
  });
}

double LogisticModel::predict(std::span<const double> features) const {
  if (constant_class) return *constant_class ? 1.0 - clip_eps : clip_eps;
  require(features.size() == coef.size(), ErrorKind::config, "baseline feature width mismatch");
  double z = intercept;
  for (std::size_t i = 0; i < coef.size(); ++i) z += coef[i] * features[i];
  return sigmoid(z);
}

LogisticModel fit_logistic_regression(std::span<const std::vector<double>> rows,
                                      std::span<const int> labels, double l2, double clip_eps) {
  require(!rows.empty() && rows.size() == labels.size(), ErrorKind::usage,
          "logistic regression needs matching nonempty rows and labels");
  require(l2 > 0.0, ErrorKind::config, "baseline L2 strength must be positive");
  const std::size_t width = rows.front().size();
  LogisticModel model;
  model.clip_eps = clip_eps;
  model.coef.assign(width, 0.0);
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0 || positives == static_cast<long>(labels.size())) {
    model.constant_class = positives == 0 ? 0 : 1;
    return model;
  }

  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(width + 1);
  Eigen::MatrixXd x(m, d);
  Eigen::VectorXd y(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    require(row.size() == width, ErrorKind::config, "baseline rows must share width");
    for (Eigen::Index j = 0; j + 1 < d; ++j) x(r, j) = row[static_cast<std::size_t>(j)];
    x(r, d - 1) = 1.0;
    y(r) = labels[static_cast<std::size_t>(r)];
  }
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(d, l2);
  penalty(d - 1) = 0.0;

  auto objective = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd z = x * beta;
    double loss = 0.0;
    for (Eigen::Index r = 0; r < m; ++r) loss -= y(r) ? log_sigmoid(z(r)) : log_sigmoid(-z(r));
    return loss + 0.5 * (penalty.array() * beta.array().square()).sum();
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  double current = objective(beta);
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd z = x * beta;
    Eigen::VectorXd p(m), w(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      p(r) = sigmoid(z(r));
      w(r) = p(r) * (1.0 - p(r));
    }
    const Eigen::VectorXd grad = x.transpose() * (p - y) + penalty.cwiseProduct(beta);
    Eigen::MatrixXd hess = x.transpose() * w.asDiagonal() * x;
    hess.diagonal() += penalty;
    hess.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    double scale = 1.0;
    Eigen::VectorXd next = beta - step;
    double value = objective(next);
    while (value > current && scale > 1e-8) {
      scale *= 0.5;
      next = beta - scale * step;
      value = objective(next);
    }
    beta = next;
    const bool done = std::abs(current - value) < 1e-14 * (1.0 + std::abs(value)) ||
                      (scale * step).norm() < 1e-12;
    current = value;
    if (done) break;
  }
  for (std::size_t j = 0; j < width; ++j) model.coef[j] = beta(static_cast<Eigen::Index>(j));
  model.intercept = beta(d - 1);
  return model;
}

std::vector<double> baseline_features(const BehaviorRecord& r) {
  std::vector<double> f = r.features;
  switch (r.treatment) {
    case Treatment::independent: break;
    case Treatment::immediate:
      require(r.ai_recommendation && r.ai_confidence, ErrorKind::usage,
              "immediate record requires ai_rec and ai_conf");
      f.push_back(*r.ai_recommendation);
      f.push_back(*r.ai_confidence);
      break;
    case Treatment::delayed:
      require(r.initial_decision && r.ai_recommendation, ErrorKind::usage,
              "delayed record requires initial_decision and ai_rec");
      f.push_back(*r.initial_decision);
      f.push_back(*r.ai_recommendation);
      break;
    case Treatment::explanation:
      require(r.explanation_mask.has_value(), ErrorKind::usage, "explanation record requires exp_mask");
      for (int e : *r.explanation_mask) f.push_back(e);
      break;
  }
  return f;
}

EvalReport baseline_logistic(std::span<const BehaviorRecord> dataset, Treatment treatment,
                             const SplitPlan& plan, double l2) {
  return run_protocol(dataset, treatment, plan, "logistic", [&](const TrialSplit& split) {
    return score_logistic(split.train, split.test, l2);
  });
}

WeightVector fit_point_model(std::span<const BehaviorRecord> trials, double l2) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (const auto& r : trials) {
    require(r.initial_decision.has_value(), ErrorKind::usage,
            "point model requires observed initial decisions");
    rows.push_back(r.features);
    labels.push_back(*r.initial_decision);
  }
  const LogisticModel model = fit_logistic_regression(rows, labels, l2);
  WeightVector w;
  w.weights = model.coef;
  if (model.constant_class) {
    // Single-class initial decisions: an intercept that reproduces the class at the clip level.
    const double p = model.predict({});
    w.bias = std::log(p / (1.0 - p));
  } else {
    w.bias = model.intercept;
  }
  return w;
}

EvalReport evaluate_deterministic_ablation(std::span<const BehaviorRecord> dataset,
                                           Treatment treatment, const SplitPlan& plan,
                                           const FitConfig& config, double l2) {
  require(treatment == Treatment::delayed, ErrorKind::usage,
          "deterministic ablation is defined for the delayed treatment only");
  return run_protocol(dataset, treatment, plan, "deterministic", [&](const TrialSplit& split) {
    const WeightVector point = fit_point_model(split.train, l2);
    const NudgeFitResult fit = fit_nudge_deterministic_ablation(split.train, point, treatment, config);
    const WeightVector single[] = {point};
    return score_nudge(split.test, single, fit.params, config.clip_eps);
  });
}

std::optional<CurveRow> LearningCurve::mean(std::size_t size, const std::string& method) const {
  CurveRow out;
  out.size = size;
  out.method = method;
  std::size_t k = 0;
  for (const auto& r : rows) {
    if (r.size != size || r.method != method) continue;
    out.nll += r.nll;
    out.accuracy += r.accuracy;
    out.f1 += r.f1;
    out.n_subjects = r.n_subjects;
    ++k;
  }
  if (k == 0) return std::nullopt;
  out.nll /= static_cast<double>(k);
  out.accuracy /= static_cast<double>(k);
  out.f1 /= static_cast<double>(k);
  return out;
}

LearningCurve learning_curve(std::span<const BehaviorRecord> dataset,
                             const PopulationPosterior& posterior, Treatment treatment,
                             const LearningCurveOptions& options, const SplitPlan& plan,
                             const FitConfig& config) {
  require(!plan.run_seeds.empty(), ErrorKind::config, "split plan needs at least one run seed");
  require(!options.include_deterministic || treatment == Treatment::delayed, ErrorKind::usage,
          "deterministic ablation is defined for the delayed treatment only");
  LearningCurve curve;
  const auto subjects = group_by_subject(dataset, treatment);
  const auto ensemble = fit_ensemble(posterior, config);

  std::vector<std::string> methods = {"framework", "logistic"};
  if (options.include_deterministic) methods.emplace_back("deterministic");

  for (std::size_t size : options.train_sizes) {
    std::vector<const std::vector<BehaviorRecord>*> eligible;
    for (const auto& [id, trials] : subjects) {
      if (size >= 1 && size < trials.size()) {
        eligible.push_back(&trials);
      } else {
        curve.warnings.push_back("train size " + std::to_string(size) + " skipped for subject " +
                                 id + " (" + std::to_string(trials.size()) + " trials)");
      }
    }
    if (eligible.empty()) continue;
    for (std::uint64_t seed : plan.run_seeds) {
      std::map<std::string, Metrics> sums;
      for (const auto* trials : eligible) {
        const auto shuffled = shuffled_trials(*trials, seed);
        const std::span<const BehaviorRecord> all(shuffled);
        const auto train = all.first(size);
        const auto test = all.subspan(size);
        std::map<std::string, Metrics> scored;
        const NudgeFitResult fit = fit_nudge_on_ensemble(train, ensemble, treatment, config);
        scored["framework"] = score_nudge(test, ensemble, fit.params, config.clip_eps);
        scored["logistic"] = score_logistic(train, test, options.baseline_l2);
        if (options.include_deterministic) {
          const WeightVector point = fit_point_model(train, options.baseline_l2);
          const NudgeFitResult det =
              fit_nudge_deterministic_ablation(train, point, treatment, config);
          const WeightVector single[] = {point};
          scored["deterministic"] = score_nudge(test, single, det.params, config.clip_eps);
        }
        for (const auto& [method, m] : scored) {
          auto& s = sums[method];
          s.nll += m.nll;
          s.accuracy += m.accuracy;
          s.f1 += m.f1;
        }
      }
      const double k = static_cast<double>(eligible.size());
      for (const auto& method : methods) {
        const Metrics& s = sums[method];
        curve.rows.push_back({size, method, seed, s.nll / k, s.accuracy / k, s.f1 / k, eligible.size()});
      }
    }
  }
  return curve;
}

}  // namespace nudgelab
