#include <algorithm>

#include "helpers.hpp"
#include "nudgelab/eval.hpp"
#include "nudgelab/simulate.hpp"

using namespace nudgelab;
using namespace testing;
using doctest::Approx;

namespace {

PopulationPosterior generating_posterior(std::size_t n, double sd) {
  const WeightVector w = default_population_mean(n);
  std::vector<double> mean = w.weights;
  mean.push_back(w.bias);
  return PopulationPosterior(mean, std::vector<double>(n + 1, sd * sd), 1000, 2);
}

StudyConfig immediate_only(std::size_t subjects, double norm_max, std::uint64_t seed) {
  StudyConfig c;
  c.independent_subjects = c.delayed_subjects = c.explanation_subjects = 0;
  c.immediate_subjects = subjects;
  c.nudges.norm_min = 0.0;
  c.nudges.norm_max = norm_max;
  c.seed = seed;
  return c;
}

FitConfig quick() {
  FitConfig c;
  c.iterations = 300;
  c.ensemble_size = 300;
  return c;
}

/// The optional L2 hook, used wherever five- to fifteen-trial fits would separate.
FitConfig tiny_data() {
  FitConfig c = quick();
  c.l2_penalty = 0.01;
  return c;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("metrics worked examples") {
    const std::vector<Prediction> perfect = {{1.0, 1}, {0.0, 0}};
    const auto m = metrics(perfect, std::vector<int>{1, 0});
    CHECK(m.nll == Approx(1e-6).epsilon(1e-3));
    CHECK(m.accuracy == 1.0);
    CHECK(m.f1 == 1.0);

    const std::vector<Prediction> coin = {{0.5, 1}, {0.5, 1}, {0.5, 1}};
    CHECK(metrics(coin, std::vector<int>{0, 1, 0}).nll == std::log(2.0));

    const std::vector<Prediction> mixed = {{0.9, 1}, {0.2, 0}, {0.7, 1}};
    const auto h = metrics(mixed, std::vector<int>{1, 1, 0});
    CHECK(h.accuracy == Approx(1.0 / 3.0));
    CHECK(h.f1 == Approx(0.5));
  }

  TEST_CASE("F1 is 1 with no positives anywhere") {
    const std::vector<Prediction> neg = {{0.1, 0}, {0.2, 0}};
    CHECK(metrics(neg, std::vector<int>{0, 0}).f1 == 1.0);
  }

  TEST_CASE("metrics length mismatch") {
    const std::vector<Prediction> one = {{0.5, 1}};
    expect_error(ErrorKind::usage, [&] { metrics(one, std::vector<int>{1, 0}); });
  }

  TEST_CASE("metrics are permutation invariant") {
    Engine e = make_engine(401, 0);
    std::vector<Prediction> p;
    std::vector<int> y;
    for (int i = 0; i < 50; ++i) {
      const double q = uniform(e, 0, 1);
      p.push_back({q, q >= 0.5});
      y.push_back(static_cast<int>(e() % 2));
    }
    const auto a = metrics(p, y);
    std::vector<std::size_t> idx(p.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), e);
    std::vector<Prediction> p2;
    std::vector<int> y2;
    for (std::size_t i : idx) {
      p2.push_back(p[i]);
      y2.push_back(y[i]);
    }
    const auto b = metrics(p2, y2);
    CHECK(a.nll == Approx(b.nll).epsilon(1e-14));
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.f1 == b.f1);
  }

  TEST_CASE("logistic baseline separates toy data") {
    const std::vector<std::vector<double>> rows = {{0.0}, {0.1}, {0.2}, {0.8}, {0.9}, {1.0}};
    const std::vector<int> labels = {0, 0, 0, 1, 1, 1};
    const auto model = fit_logistic_regression(rows, labels, 1e-3);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK((model.predict(rows[i]) >= 0.5) == (labels[i] == 1));
  }

  TEST_CASE("identical features give the base rate") {
    const std::vector<std::vector<double>> rows(10, {0.3, 0.6});
    const std::vector<int> labels = {1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
    const auto model = fit_logistic_regression(rows, labels, 1.0);
    CHECK(model.predict(rows[0]) == Approx(0.3).epsilon(1e-6));
  }

  TEST_CASE("single-class training predicts the clipped constant") {
    const std::vector<std::vector<double>> rows = {{0.1}, {0.7}};
    const auto ones = fit_logistic_regression(rows, std::vector<int>{1, 1}, 1.0);
    CHECK(ones.constant_class == 1);
    CHECK(ones.predict(std::vector<double>{0.5}) == 1.0 - 1e-6);
    const auto zeros = fit_logistic_regression(rows, std::vector<int>{0, 0}, 1.0);
    CHECK(zeros.predict(std::vector<double>{0.5}) == 1e-6);
  }

  TEST_CASE("baseline feature sets") {
    auto imm = record(Treatment::immediate, {0.1, 0.2}, 1);
    imm.ai_recommendation = 1;
    imm.ai_confidence = 0.8;
    CHECK(baseline_features(imm) == std::vector<double>{0.1, 0.2, 1, 0.8});
    auto del = record(Treatment::delayed, {0.1, 0.2}, 1);
    del.ai_recommendation = 0;
    del.initial_decision = 1;
    CHECK(baseline_features(del) == std::vector<double>{0.1, 0.2, 1, 0});
    auto exp = record(Treatment::explanation, {0.1, 0.2}, 1);
    exp.explanation_mask = std::vector<int>{0, 1};
    CHECK(baseline_features(exp) == std::vector<double>{0.1, 0.2, 0, 1});
  }

  TEST_CASE("splits are deterministic and shared between methods") {
    const auto study = simulate_study(immediate_only(4, 2.0, 3));
    const auto subjects = group_by_subject(study.records, Treatment::immediate);
    for (const auto& [id, trials] : subjects) {
      const auto a = split_trials(trials, 0.5, 1);
      const auto b = split_trials(trials, 0.5, 1);
      CHECK(a.train == b.train);
      CHECK(a.train.size() == 15);
      CHECK(a.test.size() == 15);
    }
    SplitPlan plan;
    plan.run_seeds = {0, 1};
    const auto base = baseline_logistic(study.records, Treatment::immediate, plan);
    const auto unn = evaluate_unnudged(study.records, generating_posterior(6, 0.5), Treatment::immediate, plan);
    REQUIRE(base.per_subject.size() == unn.per_subject.size());
    for (std::size_t i = 0; i < base.per_subject.size(); ++i) {
      CHECK(base.per_subject[i].subject_id == unn.per_subject[i].subject_id);
      CHECK(base.per_subject[i].run_seed == unn.per_subject[i].run_seed);
    }
  }

  TEST_CASE("subjects with fewer than two trials are excluded with a warning") {
    auto r = record(Treatment::immediate, {0.1, 0.2}, 1);
    r.ai_recommendation = 1;
    r.ai_confidence = 0.8;
    const std::vector<BehaviorRecord> data = {r};
    SplitPlan plan;
    plan.run_seeds = {0};
    const auto rep = baseline_logistic(data, Treatment::immediate, plan);
    CHECK(rep.n_subjects == 0);
    CHECK_FALSE(rep.warnings.empty());
  }

  TEST_CASE("zero-nudge population: framework close to the unnudged model") {
    const auto study = simulate_study(immediate_only(12, 0.0, 4));
    const auto post = generating_posterior(6, 0.5);
    SplitPlan plan;
    plan.run_seeds = {0};
    const auto fw = evaluate_framework(study.records, post, Treatment::immediate, plan, tiny_data());
    const auto un = evaluate_unnudged(study.records, post, Treatment::immediate, plan);
    CHECK(std::abs(fw.nll - un.nll) <= 0.05);
  }

  TEST_CASE("evaluation is deterministic") {
    const auto study = simulate_study(immediate_only(3, 2.0, 5));
    const auto post = generating_posterior(6, 0.5);
    SplitPlan plan;
    plan.run_seeds = {7};
    const auto a = evaluate_framework(study.records, post, Treatment::immediate, plan, quick());
    const auto b = evaluate_framework(study.records, post, Treatment::immediate, plan, quick());
    CHECK(a.nll == b.nll);
    CHECK(a.f1 == b.f1);
  }

  TEST_CASE("learning curve: oversized train sizes are skipped, small-data robustness") {
    const auto study = simulate_study(immediate_only(10, 2.0, 6));
    const auto post = generating_posterior(6, 0.5);
    LearningCurveOptions opts;
    opts.train_sizes = {5, 25, 40};
    SplitPlan plan;
    plan.run_seeds = {0};
    const auto curve = learning_curve(study.records, post, Treatment::immediate, opts, plan, tiny_data());
    CHECK_FALSE(curve.warnings.empty());
    CHECK_FALSE(curve.mean(40, "framework").has_value());
    const auto at5 = curve.mean(5, "framework"), at25 = curve.mean(25, "framework");
    REQUIRE(at5);
    REQUIRE(at25);
    CHECK(at5->nll - at25->nll <= 0.1);
  }
}
