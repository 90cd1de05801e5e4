#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "nudgelab/error.hpp"
#include "nudgelab/random.hpp"
#include "nudgelab/types.hpp"

namespace testing {

using namespace nudgelab;

inline double sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double uniform(Engine& e, double lo, double hi) {
  return std::uniform_real_distribution<>(lo, hi)(e);
}

inline TaskInstance task(std::vector<double> x) { return {std::move(x), std::nullopt}; }

inline WeightVector wv(std::vector<double> w, double bias = 0.0) { return {std::move(w), bias}; }

inline TaskInstance random_task(Engine& e, std::size_t n) {
  TaskInstance t;
  for (std::size_t i = 0; i < n; ++i) t.features.push_back(uniform(e, 0.0, 1.0));
  return t;
}

inline WeightVector random_weights(Engine& e, std::size_t n, double scale = 2.0) {
  WeightVector w;
  for (std::size_t i = 0; i < n; ++i) w.weights.push_back(uniform(e, -scale, scale));
  w.bias = uniform(e, -1.0, 1.0);
  return w;
}

inline Ensemble random_ensemble(Engine& e, std::size_t n, std::size_t size) {
  Ensemble out;
  for (std::size_t i = 0; i < size; ++i) out.push_back(random_weights(e, n));
  return out;
}

inline BehaviorRecord record(Treatment t, std::vector<double> x, int final_decision) {
  BehaviorRecord r;
  r.subject_id = "s001";
  r.treatment = t;
  r.features = std::move(x);
  r.final_decision = final_decision;
  return r;
}

/// Expects `f` to throw nudgelab::Error of the given kind.
inline void expect_error(ErrorKind kind, const std::function<void()>& f) {
  try {
    f();
    FAIL("expected nudgelab::Error(" << to_string(kind) << ")");
  } catch (const Error& e) {
    CHECK_MESSAGE(e.kind() == kind, "got " << to_string(e.kind()) << ": " << e.what());
  }
}

inline std::string error_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace testing
