#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tutorws/cognitive/validator.hpp"
#include "tutorws/core/types.hpp"
#include "tutorws/gateway/stage_context.hpp"

namespace tutorws::strategy {

struct PriorityWeights {
  double severity = 0.5;
  double confidence = 0.3;
  double evidence = 0.2;

  /// Throws ConfigError naming the offending weight key.
  void check() const;
};

/// 1 - level_score of the leading level (ties toward the lower level).
std::pair<double, MasteryLevel> severity(const FuzzyMastery& state);

/// Largest membership, discounted by 0.8 when validation did not settle.
double confidence(const FuzzyMastery& state, bool stable);

double evidence_richness(const std::vector<EvidenceSpan>& spans);

PriorityRecord priority_record(const cognitive::KcDiagnosis& d, const PriorityWeights& weights);

struct FocusSelection {
  std::string kc_id;
  MasteryLevel state = MasteryLevel::Un;
  std::vector<PriorityRecord> ranked;  // highest priority first, ties by kc id
};

/// Throws EmptyContext when there is nothing to rank.
FocusSelection select_focus(const cognitive::CognitiveContext& context, const PriorityWeights& weights = {});

InstructionalStance stance_for(MasteryLevel level);

struct ComposedResponse {
  TutorAction action;
  std::string rationale;
};

/// One final gateway call that writes the reply around the seed draft.
/// Throws EmptyResponse when the returned text is blank.
ComposedResponse compose_response(const cognitive::CognitiveContext& context, const AffectiveControlVector& control,
                                  const std::string& focus_kc, InstructionalStance stance,
                                  const std::string& seed_draft, const std::string& dialogue,
                                  const gateway::StageContext& ctx);

}  // namespace tutorws::strategy
