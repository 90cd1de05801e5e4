#include "nudgelab/types.hpp"

#include "nudgelab/error.hpp"

namespace nudgelab {

std::string_view to_string(Treatment t) {
  switch (t) {
    case Treatment::independent: return "independent";
    case Treatment::immediate: return "immediate";
    case Treatment::delayed: return "delayed";
    case Treatment::explanation: return "explanation";
  }
  return "independent";
}

Treatment parse_treatment(std::string_view name) {
  if (name == "independent") return Treatment::independent;
  if (name == "immediate") return Treatment::immediate;
  if (name == "delayed") return Treatment::delayed;
  if (name == "explanation") return Treatment::explanation;
  fail(ErrorKind::usage, "unknown treatment '" + std::string(name) + "'");
}

std::vector<double> SharedSignVector::realized() const {
  std::vector<double> out(magnitudes.size());
  for (std::size_t i = 0; i < magnitudes.size(); ++i) out[i] = scale * magnitudes[i];
  return out;
}

NudgeParams NudgeParams::zero(Treatment treatment, std::size_t n) {
  NudgeParams p;
  switch (treatment) {
    case Treatment::independent: break;
    case Treatment::immediate: p.delta_direct = SharedSignVector::zero(n); break;
    case Treatment::delayed:
      p.delta_affirm = SharedSignVector::zero(n);
      p.delta_contra = SharedSignVector::zero(n);
      break;
    case Treatment::explanation: p.delta_exp = 0.0; break;
  }
  return p;
}

bool NudgeParams::matches(Treatment treatment) const {
  const bool d = delta_direct.has_value();
  const bool a = delta_affirm.has_value();
  const bool c = delta_contra.has_value();
  const bool e = delta_exp.has_value();
  switch (treatment) {
    case Treatment::independent: return !d && !a && !c && !e;
    case Treatment::immediate: return d && !a && !c && !e;
    case Treatment::delayed: return !d && a && c && !e;
    case Treatment::explanation: return !d && !a && !c && e;
  }
  return false;
}

Assistance BehaviorRecord::assistance() const {
  switch (treatment) {
    case Treatment::immediate:
      require(ai_recommendation && ai_confidence, ErrorKind::usage,
              "immediate record requires ai_rec and ai_conf");
      return ImmediateAssist{*ai_recommendation, *ai_confidence};
    case Treatment::delayed:
      require(ai_recommendation && initial_decision, ErrorKind::usage,
              "delayed record requires ai_rec and initial_decision");
      return DelayedAssist{*ai_recommendation, *initial_decision};
    case Treatment::explanation:
      require(explanation_mask.has_value(), ErrorKind::usage, "explanation record requires exp_mask");
      return ExplanationAssist{*explanation_mask};
    case Treatment::independent: break;
  }
  fail(ErrorKind::usage, "independent records carry no assistance");
}

}  // namespace nudgelab
