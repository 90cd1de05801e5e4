#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nudgelab/types.hpp"

namespace nudgelab {

enum class NudgeBranch { direct, affirm, contra, exp };
enum class CrtGroup { intuitive, moderate, reflective };

std::string_view to_string(NudgeBranch b);
std::string_view to_string(CrtGroup g);

/// 0 -> intuitive, 1-2 -> moderate, 3 -> reflective.
CrtGroup crt_group(int score);

/// sign(tau) * ||delta||_2 for vector branches; delta_exp for `exp`.
double effect_summary(const NudgeParams& params, NudgeBranch branch);

struct EffectSummary {
  std::string subject_id;
  Treatment treatment = Treatment::immediate;
  NudgeBranch branch = NudgeBranch::direct;
  double signed_magnitude = 0.0;
  CrtGroup crt_group = CrtGroup::moderate;
};

struct AnovaResult {
  double f_statistic = 0.0;
  int df_between = 0;
  int df_within = 0;
  double p_value = 1.0;
  std::vector<double> group_means;
  /// Zero within-group variance: F is reported as 0 (no between variance) or p = 0.
  bool degenerate = false;
};

/// Upper tail of the F(d1, d2) distribution via the regularized incomplete beta.
double f_survival(double f, double d1, double d2);

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups);

struct PairwiseComparison {
  std::pair<std::size_t, std::size_t> pair;
  double mean_diff = 0.0;
  double p_value = 1.0;
};

/// Max-statistic permutation analog of Tukey's HSD: each pair's p-value is
/// the fraction of label permutations whose largest absolute pairwise mean
/// difference meets or exceeds that pair's observed difference.
std::vector<PairwiseComparison> pairwise_posthoc(const std::vector<std::vector<double>>& groups,
                                                 int n_permutations, std::uint64_t seed);

struct GroupSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Mean with a two-sided 95% Student-t interval (degenerate interval for n < 2).
GroupSummary summarize_group(std::span<const double> values);

}  // namespace nudgelab
