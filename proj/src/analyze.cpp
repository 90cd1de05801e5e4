#include "nudgelab/analyze.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "nudgelab/error.hpp"
#include "nudgelab/random.hpp"

namespace nudgelab {
namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void check_groups(const std::vector<std::vector<double>>& groups) {
  require(groups.size() >= 2, ErrorKind::usage, "at least 2 groups are required");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    require(groups[g].size() >= 2, ErrorKind::usage,
            "group " + std::to_string(g) + " has fewer than 2 observations");
  }
}

}  // namespace

std::string_view to_string(NudgeBranch b) {
  switch (b) {
    case NudgeBranch::direct: return "direct";
    case NudgeBranch::affirm: return "affirm";
    case NudgeBranch::contra: return "contra";
    case NudgeBranch::exp: return "exp";
  }
  return "direct";
}

std::string_view to_string(CrtGroup g) {
  switch (g) {
    case CrtGroup::intuitive: return "intuitive";
    case CrtGroup::moderate: return "moderate";
    case CrtGroup::reflective: return "reflective";
  }
  return "moderate";
}

CrtGroup crt_group(int score) {
  require(score >= 0 && score <= 3, ErrorKind::input, "CRT score must lie in 0..3");
  if (score == 0) return CrtGroup::intuitive;
  if (score == 3) return CrtGroup::reflective;
  return CrtGroup::moderate;
}

double effect_summary(const NudgeParams& params, NudgeBranch branch) {
  const std::optional<SharedSignVector>* v = nullptr;
  switch (branch) {
    case NudgeBranch::direct: v = &params.delta_direct; break;
    case NudgeBranch::affirm: v = &params.delta_affirm; break;
    case NudgeBranch::contra: v = &params.delta_contra; break;
    case NudgeBranch::exp:
      require(params.delta_exp.has_value(), ErrorKind::usage, "delta_exp is absent");
      return *params.delta_exp;
  }
  require(v->has_value(), ErrorKind::usage,
          "nudge branch '" + std::string(to_string(branch)) + "' is absent");
  double sq = 0.0;
  for (double d : (*v)->realized()) sq += d * d;
  const double sign = (*v)->scale >= 0.0 ? 1.0 : -1.0;
  return sign * std::sqrt(sq);
}

double f_survival(double f, double d1, double d2) {
  require(d1 > 0.0 && d2 > 0.0, ErrorKind::domain, "F degrees of freedom must be positive");
  if (!(f > 0.0)) return 1.0;
  if (std::isinf(f)) return 0.0;
  // P(F > f) = I_{d2 / (d2 + d1 f)}(d2/2, d1/2)
  const double x = d2 / (d2 + d1 * f);
  return boost::math::ibeta(d2 / 2.0, d1 / 2.0, x);
}

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
  check_groups(groups);
  std::size_t total = 0;
  double grand = 0.0;
  AnovaResult out;
  for (const auto& g : groups) {
    total += g.size();
    grand += std::accumulate(g.begin(), g.end(), 0.0);
    out.group_means.push_back(mean_of(g));
  }
  grand /= static_cast<double>(total);
  double ss_between = 0.0, ss_within = 0.0;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const double m = out.group_means[k];
    ss_between += static_cast<double>(groups[k].size()) * (m - grand) * (m - grand);
    for (double v : groups[k]) ss_within += (v - m) * (v - m);
  }
  out.df_between = static_cast<int>(groups.size()) - 1;
  out.df_within = static_cast<int>(total - groups.size());

  // Sums of squares that are pure rounding noise relative to the data scale count as zero.
  double scale = 0.0;
  for (const auto& g : groups) {
    for (double v : g) scale = std::max(scale, std::abs(v - grand));
  }
  const double tiny = 1e-24 * (scale * scale + std::numeric_limits<double>::min()) *
                      static_cast<double>(total);
  const bool no_within = ss_within <= tiny;
  const bool no_between = ss_between <= tiny;
  if (no_within) {
    out.degenerate = true;
    if (no_between) {
      out.f_statistic = 0.0;
      out.p_value = 1.0;
    } else {
      out.f_statistic = std::numeric_limits<double>::infinity();
      out.p_value = 0.0;
    }
    return out;
  }
  const double ms_between = ss_between / out.df_between;
  const double ms_within = ss_within / out.df_within;
  out.f_statistic = no_between ? 0.0 : ms_between / ms_within;
  out.p_value = f_survival(out.f_statistic, out.df_between, out.df_within);
  return out;
}

std::vector<PairwiseComparison> pairwise_posthoc(const std::vector<std::vector<double>>& groups,
                                                 int n_permutations, std::uint64_t seed) {
  check_groups(groups);
  require(n_permutations >= 100, ErrorKind::usage, "post-hoc test needs at least 100 permutations");
  const std::size_t k = groups.size();
  std::vector<double> pooled;
  std::vector<std::size_t> offsets{0};
  for (const auto& g : groups) {
    pooled.insert(pooled.end(), g.begin(), g.end());
    offsets.push_back(pooled.size());
  }

  auto group_means = [&](const std::vector<double>& values) {
    std::vector<double> means(k);
    for (std::size_t g = 0; g < k; ++g) {
      double s = 0.0;
      for (std::size_t i = offsets[g]; i < offsets[g + 1]; ++i) s += values[i];
      means[g] = s / static_cast<double>(offsets[g + 1] - offsets[g]);
    }
    return means;
  };

  std::vector<PairwiseComparison> out;
  const auto observed = group_means(pooled);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) out.push_back({{a, b}, observed[a] - observed[b], 0.0});
  }

  // Permuted means tie with the observed ones up to summation order.
  double scale = 0.0;
  for (double v : pooled) scale = std::max(scale, std::abs(v));
  const double tie_tol = 1e-12 * std::max(scale, 1.0);

  Engine engine = make_engine(seed, 0x706f7374ULL);
  std::vector<double> values = pooled;
  std::vector<std::size_t> hits(out.size(), 0);
  for (int p = 0; p < n_permutations; ++p) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(values[i - 1], values[pick(engine)]);
    }
    const auto means = group_means(values);
    double max_diff = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) max_diff = std::max(max_diff, std::abs(means[a] - means[b]));
    }
    for (std::size_t c = 0; c < out.size(); ++c) {
      if (max_diff >= std::abs(out[c].mean_diff) - tie_tol) ++hits[c];
    }
  }
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c].p_value = static_cast<double>(hits[c]) / n_permutations;
  }
  return out;
}

GroupSummary summarize_group(std::span<const double> values) {
  GroupSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = mean_of(values);
  s.ci_low = s.ci_high = s.mean;
  if (values.size() < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  const double n = static_cast<double>(values.size());
  const double se = std::sqrt(ss / (n - 1.0) / n);
  const boost::math::students_t dist(n - 1.0);
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  s.ci_low = s.mean - t * se;
  s.ci_high = s.mean + t * se;
  return s;
}

}  // namespace nudgelab
