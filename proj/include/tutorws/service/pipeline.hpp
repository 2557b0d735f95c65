#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tutorws/affect/simulator.hpp"
#include "tutorws/cognitive/validator.hpp"
#include "tutorws/core/trace.hpp"
#include "tutorws/core/types.hpp"
#include "tutorws/gateway/gateway.hpp"
#include "tutorws/gateway/prompts.hpp"
#include "tutorws/strategy/integrator.hpp"

namespace tutorws::service {

struct PipelineConfig {
  cognitive::ValidationConfig validation;
  affect::AffectConfig affect;
  strategy::PriorityWeights weights;
  PipelineVariant variant = PipelineVariant::full;
  TemplateSet templates = default_templates();

  void check() const;
};

struct TurnInput {
  std::string turn_id;
  Utterance utterance;
  std::vector<Utterance> history;
  /// Final memberships from earlier turns, keyed by KC id.
  std::map<std::string, FuzzyMastery> priors;
  std::optional<std::string> fixture_key;
};

struct TurnResult {
  TutorAction action;
  std::string rationale;
  cognitive::CognitiveContext context;
  ReasoningTrace trace;
};

/// Runs one learner turn through parse, validation, affective rollout,
/// integration and composition, recording every stage in the trace.
/// Ablated stages are skipped according to config.variant.
TurnResult run_turn(const TurnInput& input, const PipelineConfig& config, gateway::Gateway& gateway,
                    const gateway::PromptLibrary& prompts);

/// Same, recording calls into a caller-owned scope, which then also holds
/// the usage of a turn that fails part way.
TurnResult run_turn(const TurnInput& input, const PipelineConfig& config, gateway::Gateway& gateway,
                    const gateway::PromptLibrary& prompts, gateway::CallScope& scope);

}  // namespace tutorws::service
