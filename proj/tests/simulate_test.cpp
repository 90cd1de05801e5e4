#include "helpers.hpp"
#include "nudgelab/core_model.hpp"
#include "nudgelab/simulate.hpp"

using namespace nudgelab;
using namespace testing;
using doctest::Approx;

TEST_SUITE("simulate") {
  TEST_CASE("ai_recommend") {
    const auto [y0, c0] = ai_recommend({wv({0, 0}), 1}, task({0.3, 0.8}));
    CHECK(y0 == 1);
    CHECK(c0 == 0.5);
    const auto [y1, c1] = ai_recommend({wv({2, 0}), 1}, task({1, 0}));
    CHECK(y1 == 1);
    CHECK(c1 == Approx(0.8808).epsilon(1e-4));
    // logit(0.3) puts the surrogate's probability at 0.3.
    const auto [y2, c2] = ai_recommend({wv({std::log(0.3 / 0.7)}), 1}, task({1}));
    CHECK(y2 == 0);
    CHECK(c2 == Approx(0.7).epsilon(1e-12));
  }

  TEST_CASE("ai_explain") {
    CHECK(ai_explain({wv({1, -3}), 2}, task({0.1, 0.9})) == std::vector<int>{1, 1});
    CHECK(ai_explain({wv({3, 0.1, 0.1}), 1}, task({1, 1, 0})) == std::vector<int>{1, 0, 0});
    CHECK(ai_explain({wv({1, 1, 1}), 1}, task({0.25, 0.75, 0.5})) == std::vector<int>{1, 0, 0});
    CHECK(ai_explain({wv({0.5, 1, 1}), 1}, task({0.5, 0.25, 0.75})) == std::vector<int>{0, 1, 0});
  }

  TEST_CASE("noiseless zero nudge reproduces independent decisions") {
    const auto tasks = uniform_tasks(40, 4, 1);
    const SurrogateAI ai{default_ai_weights(4), 2};
    const WeightVector w = default_population_mean(4);
    for (Treatment t : {Treatment::independent, Treatment::immediate, Treatment::delayed}) {
      const SyntheticSubject s{"s", w, NudgeParams::zero(t, 4), t, 0.0, std::nullopt};
      for (const auto& r : generate_behavior(s, tasks, ai, 2)) {
        CHECK(r.final_decision == (logistic_response(r.task(), w) >= 0.5 ? 1 : 0));
      }
    }
  }

  TEST_CASE("dominant trust follows the AI") {
    const auto tasks = uniform_tasks(60, 4, 3);
    const SurrogateAI ai{default_ai_weights(4), 2};
    const WeightVector w = default_population_mean(4);
    NudgeParams p;
    p.delta_direct = SharedSignVector{50.0, {1, 1, 1, 1}};
    const SyntheticSubject s{"s", w, p, Treatment::immediate, 0.0, std::nullopt};
    int checked = 0;
    for (const auto& r : generate_behavior(s, tasks, ai, 4)) {
      double sum_x = 0.0;
      for (double x : r.features) sum_x += x;
      // The shift c * 50 * sum(x) must dwarf |w.x + b| for the AI to decide.
      const double independent = std::abs(linear_score(r.task(), w));
      if (*r.ai_confidence * 50.0 * sum_x > 2.0 * independent) {
        CHECK(r.final_decision == *r.ai_recommendation);
        ++checked;
      }
    }
    CHECK(checked > 40);
  }

  TEST_CASE("fixed seed gives identical records") {
    StudyConfig cfg;
    cfg.independent_subjects = cfg.immediate_subjects = cfg.delayed_subjects = cfg.explanation_subjects = 3;
    cfg.seed = 9;
    const auto a = simulate_study(cfg);
    const auto b = simulate_study(cfg);
    CHECK(a.records == b.records);
    cfg.seed = 10;
    CHECK_FALSE(simulate_study(cfg).records == a.records);
  }

  TEST_CASE("payloads are internally consistent") {
    StudyConfig cfg;
    cfg.independent_subjects = cfg.immediate_subjects = cfg.delayed_subjects = cfg.explanation_subjects = 5;
    const auto study = simulate_study(cfg);
    CHECK(study.subjects.size() == 20);
    CHECK(study.records.size() == 20 * cfg.trials_per_subject);
    for (const auto& r : study.records) {
      switch (r.treatment) {
        case Treatment::immediate:
          REQUIRE(r.ai_confidence);
          CHECK(*r.ai_confidence >= 0.5);
          CHECK(*r.ai_confidence <= 1.0);
          break;
        case Treatment::delayed:
          CHECK(r.initial_decision.has_value());
          CHECK(r.ai_recommendation.has_value());
          break;
        case Treatment::explanation: {
          REQUIRE(r.explanation_mask);
          int ones = 0;
          for (int m : *r.explanation_mask) ones += m;
          CHECK(ones == 2);
          break;
        }
        case Treatment::independent:
          CHECK_FALSE(r.ai_recommendation.has_value());
          break;
      }
      CHECK(r.crt_score.has_value());
    }
    for (const auto& s : study.subjects) CHECK(s.true_params.matches(s.treatment));
  }

  TEST_CASE("shared-sign draws have the requested norm and sign") {
    Engine e = make_engine(5, 0);
    for (double sign : {1.0, -1.0}) {
      const auto d = draw_shared_sign_vector(6, 2.5, sign, e);
      double sq = 0.0;
      for (double v : d.realized()) {
        CHECK(v * sign >= 0.0);
        sq += v * v;
      }
      CHECK(std::sqrt(sq) == Approx(2.5).epsilon(1e-12));
    }
  }
}
