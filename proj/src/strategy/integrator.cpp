#include "tutorws/strategy/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tutorws/core/canonical_json.hpp"
#include "tutorws/core/errors.hpp"

namespace tutorws::strategy {

namespace {

void check_weight(double w, const char* key) {
  if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError(key, "must be a finite value > 0");
}

}  // namespace

void PriorityWeights::check() const {
  check_weight(severity, "weight_severity");
  check_weight(confidence, "weight_confidence");
  check_weight(evidence, "weight_evidence");
}

std::pair<double, MasteryLevel> severity(const FuzzyMastery& state) {
  const auto level = state.argmax();
  return {1.0 - level_score(level), level};
}

double confidence(const FuzzyMastery& state, bool stable) {
  const auto& v = state.values();
  const double top = *std::max_element(v.begin(), v.end());
  return stable ? top : top * 0.8;
}

double evidence_richness(const std::vector<EvidenceSpan>& spans) {
  return std::min(1.0, static_cast<double>(spans.size()) / 3.0);
}

PriorityRecord priority_record(const cognitive::KcDiagnosis& d, const PriorityWeights& weights) {
  PriorityRecord r;
  r.kc_id = d.kc.id;
  r.severity = severity(d.membership).first;
  r.confidence = confidence(d.membership, d.stable);
  r.richness = evidence_richness(d.evidence);
  r.priority = weights.severity * r.severity + weights.confidence * r.confidence + weights.evidence * r.richness;
  return r;
}

FocusSelection select_focus(const cognitive::CognitiveContext& context, const PriorityWeights& weights) {
  if (context.empty()) throw EmptyContext();
  weights.check();

  FocusSelection out;
  for (const auto& [_, d] : context) out.ranked.push_back(priority_record(d, weights));
  std::stable_sort(out.ranked.begin(), out.ranked.end(), [](const PriorityRecord& a, const PriorityRecord& b) {
    if (a.priority != b.priority) return a.priority > b.priority;
    return a.kc_id < b.kc_id;
  });
  out.kc_id = out.ranked.front().kc_id;
  out.state = context.at(out.kc_id).membership.argmax();
  return out;
}

InstructionalStance stance_for(MasteryLevel level) {
  switch (level) {
    case MasteryLevel::Un: return InstructionalStance::FoundationalScaffolding;
    case MasteryLevel::InK: return InstructionalStance::GuidedConsolidation;
    case MasteryLevel::K: return InstructionalStance::RetrievalPractice;
    case MasteryLevel::L: return InstructionalStance::TransferExtension;
  }
  throw std::invalid_argument("unknown mastery level");
}

ComposedResponse compose_response(const cognitive::CognitiveContext& context, const AffectiveControlVector& control,
                                  const std::string& focus_kc, InstructionalStance stance,
                                  const std::string& seed_draft, const std::string& dialogue,
                                  const gateway::StageContext& ctx) {
  const auto it = context.find(focus_kc);
  if (it == context.end()) throw std::invalid_argument("focus KC '" + focus_kc + "' is not in the context");
  const auto& d = it->second;
  const auto state = d.membership.argmax();

  const auto response = ctx.call(gateway::Stage::final, "final", "final",
                                 {{"focus_label", d.kc.label.empty() ? d.kc.id : d.kc.label},
                                  {"focus_kc", d.kc.id},
                                  {"focus_state", std::string(to_string(state))},
                                  {"stance", std::string(to_string(stance))},
                                  {"emo_cur", canonical::fixed6(control.emo_cur)},
                                  {"int_cur", canonical::fixed6(control.int_cur)},
                                  {"tgt_cur", std::string(to_string(control.tgt_cur))},
                                  {"seed_draft", seed_draft.empty() ? "(none)" : seed_draft},
                                  {"context", cognitive::describe(context) + (dialogue.empty() ? "" : "\nLatest learner message:\n" + dialogue)}});
  auto text = response.payload.at("response").get<std::string>();
  if (!has_content(text)) throw EmptyResponse();

  ComposedResponse out;
  out.action.response_text = std::move(text);
  out.action.focus_kc = d.kc.id;
  out.action.focus_state = state;
  out.action.stance = stance;
  out.action.control = control;
  out.rationale = response.payload.at("rationale").get<std::string>();
  return out;
}

}  // namespace tutorws::strategy
