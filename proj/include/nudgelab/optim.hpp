#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace nudgelab {

struct AdamOptions {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam minimizer state for a fixed-size parameter vector.
class Adam {
 public:
  Adam(std::size_t dim, AdamOptions options) : opt_(options), m_(dim, 0.0), v_(dim, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * grad[i];
      v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * grad[i] * grad[i];
      params[i] -= opt_.learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + opt_.epsilon);
    }
  }

 private:
  AdamOptions opt_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

inline double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) noexcept {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double inverse_softplus(double y) noexcept {
  return y > 30.0 ? y : std::log(std::expm1(y));
}

inline double log_sigmoid(double z) noexcept { return -softplus(-z); }

}  // namespace nudgelab
