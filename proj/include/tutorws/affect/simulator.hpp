#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tutorws/cognitive/validator.hpp"
#include "tutorws/core/trace.hpp"
#include "tutorws/core/types.hpp"
#include "tutorws/gateway/stage_context.hpp"

namespace tutorws::affect {

struct AffectConfig {
  int pool_size = 3;
  double lambda = 0.5;

  void check() const;
};

struct Draft {
  std::string text;
  std::string strategy;  // free-form label from the drafting call, may be empty
};

struct CandidateResponse {
  std::uint32_t index = 0;
  std::string draft_text;
  AffectiveState predicted_after;
  double transition_score = 0.0;
  bool accepted = false;
  std::optional<std::string> rejection_reason;
};

struct AffectiveSelection {
  AffectiveControlVector control;
  std::size_t best_index = 0;
  std::vector<CandidateResponse> candidates;  // accepted flags and reasons filled in
};

/// One batched call producing `pool_size` drafts. Extra drafts are dropped;
/// too few raise PoolUnderfull.
std::vector<Draft> draft_candidates(const cognitive::CognitiveContext& context, const AffectiveState& e_before,
                                    int pool_size, const gateway::StageContext& ctx);

/// One batched call predicting the learner's affect after each draft, clamped
/// into the valid intervals. Throws ArityMismatch when counts differ.
std::vector<AffectiveState> predict_next_states(const AffectiveState& e_before, const std::vector<Draft>& drafts,
                                                const cognitive::CognitiveContext& context,
                                                const gateway::StageContext& ctx);

/// Valence gain, minus lambda times any intensity rise that lands in
/// negative valence.
double transition_score(const AffectiveState& before, const AffectiveState& after, double lambda = 0.5);

/// Directive for the chosen candidate; first matching rule wins:
/// encourage (distressed learner, positive shift), stabilize (|shift| <= 0.1),
/// calm (negative learner, intensity drops by >= 0.2), challenge (positive
/// learner, intensity rises), otherwise stabilize.
ControlTarget control_target(const AffectiveState& before, const AffectiveState& after, double best_score);

/// Picks the highest-scoring candidate (lowest index on ties), marks all
/// others rejected and derives the control vector from its prediction.
AffectiveSelection select_affective_target(const AffectiveState& e_before, std::vector<CandidateResponse> candidates);

/// Neutral control used when affective simulation is disabled.
AffectiveControlVector neutral_control();

CandidateEvent to_event(const CandidateResponse& c);

}  // namespace tutorws::affect
