#include "tutorws/affect/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tutorws/core/canonical_json.hpp"
#include "tutorws/core/errors.hpp"

namespace tutorws::affect {

namespace {

// Rule thresholds are compared with a little slack so that values such as
// 0.7 - 0.5 count as a 0.2 drop.
constexpr double kSlack = 1e-9;

std::string describe_drafts(const std::vector<Draft>& drafts) {
  std::ostringstream out;
  for (std::size_t i = 0; i < drafts.size(); ++i) out << "[" << i << "] " << drafts[i].text << "\n";
  return out.str();
}

}  // namespace

void AffectConfig::check() const {
  if (pool_size < 1) throw ConfigError("pool_size", "must be >= 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda", "must be a finite value >= 0");
}

std::vector<Draft> draft_candidates(const cognitive::CognitiveContext& context, const AffectiveState& e_before,
                                    int pool_size, const gateway::StageContext& ctx) {
  if (pool_size < 1) throw std::invalid_argument("pool size must be >= 1");
  const auto response = ctx.call(gateway::Stage::draft, "draft", "draft",
                                 {{"context", cognitive::describe(context)},
                                  {"valence", canonical::fixed6(e_before.valence)},
                                  {"intensity", canonical::fixed6(e_before.intensity)},
                                  {"pool_size", std::to_string(pool_size)}});
  const auto& items = response.payload.at("drafts");
  const auto wanted = static_cast<std::size_t>(pool_size);
  if (items.size() < wanted) throw PoolUnderfull(items.size(), wanted);

  std::vector<Draft> drafts;
  for (std::size_t i = 0; i < wanted; ++i) {
    Draft d{items[i].at("text").get<std::string>(), items[i].value("strategy", std::string{})};
    if (!has_content(d.text)) throw SchemaError("drafts[" + std::to_string(i) + "].text", "empty draft");
    drafts.push_back(std::move(d));
  }
  return drafts;
}

std::vector<AffectiveState> predict_next_states(const AffectiveState& e_before, const std::vector<Draft>& drafts,
                                                const cognitive::CognitiveContext& context,
                                                const gateway::StageContext& ctx) {
  if (drafts.empty()) throw std::invalid_argument("no drafts to predict");
  const auto response = ctx.call(gateway::Stage::predict_affect, "predict_affect", "predict_affect",
                                 {{"valence", canonical::fixed6(e_before.valence)},
                                  {"intensity", canonical::fixed6(e_before.intensity)},
                                  {"context", cognitive::describe(context)},
                                  {"drafts", describe_drafts(drafts)}});
  const auto& states = response.payload.at("states");
  if (states.size() != drafts.size()) throw ArityMismatch(states.size(), drafts.size());

  std::vector<AffectiveState> out;
  out.reserve(states.size());
  for (const auto& s : states) {
    out.push_back(AffectiveState::clamped(s.at("valence").get<double>(), s.at("intensity").get<double>()));
  }
  return out;
}

double transition_score(const AffectiveState& before, const AffectiveState& after, double lambda) {
  const double gain = after.valence - before.valence;
  const double rise = std::max(0.0, after.intensity - before.intensity);
  return gain - (after.valence < 0.0 ? lambda * rise : 0.0);
}

ControlTarget control_target(const AffectiveState& before, const AffectiveState& after, double best_score) {
  if (before.valence < -0.2 && best_score > 0.0) return ControlTarget::encourage;
  if (std::abs(best_score) <= 0.1 + kSlack) return ControlTarget::stabilize;
  if (before.valence < 0.0 && before.intensity - after.intensity >= 0.2 - kSlack) return ControlTarget::calm;
  if (before.valence >= 0.3 - kSlack && after.intensity > before.intensity) return ControlTarget::challenge;
  return ControlTarget::stabilize;
}

AffectiveSelection select_affective_target(const AffectiveState& e_before, std::vector<CandidateResponse> candidates) {
  if (candidates.empty()) throw std::invalid_argument("candidate pool is empty");

  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].transition_score > candidates[best].transition_score) best = i;
  }

  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto& c = candidates[i];
    c.accepted = i == best;
    if (c.accepted) {
      c.rejection_reason.reset();
    } else {
      c.rejection_reason = "lower transition score (Δ=" + canonical::fixed6(c.transition_score) + ")";
    }
  }

  const auto& chosen = candidates[best];
  AffectiveSelection sel;
  sel.control.emo_cur = chosen.predicted_after.valence;
  sel.control.int_cur = chosen.predicted_after.intensity;
  sel.control.tgt_cur = control_target(e_before, chosen.predicted_after, chosen.transition_score);
  sel.best_index = best;
  sel.candidates = std::move(candidates);
  return sel;
}

AffectiveControlVector neutral_control() { return AffectiveControlVector{0.0, 0.0, ControlTarget::stabilize}; }

CandidateEvent to_event(const CandidateResponse& c) {
  CandidateEvent ev;
  ev.index = c.index;
  ev.draft_text = c.draft_text;
  ev.predicted_state = c.predicted_after;
  ev.transition_score = c.transition_score;
  ev.accepted = c.accepted;
  ev.rejection_reason = c.rejection_reason;
  return ev;
}

}  // namespace tutorws::affect
