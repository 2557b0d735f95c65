#include "tutorws/service/pipeline.hpp"

#include <stdexcept>

#include "tutorws/core/errors.hpp"
#include "tutorws/gateway/stage_context.hpp"
#include "tutorws/parser/evidence_parser.hpp"

namespace tutorws::service {

void PipelineConfig::check() const {
  validation.check();
  affect.check();
  weights.check();
  if (templates.empty()) throw ConfigError("templates_path", "template set is empty");
}

TurnResult run_turn(const TurnInput& input, const PipelineConfig& config, gateway::Gateway& gateway,
                    const gateway::PromptLibrary& prompts) {
  gateway::CallScope scope;
  return run_turn(input, config, gateway, prompts, scope);
}

TurnResult run_turn(const TurnInput& input, const PipelineConfig& config, gateway::Gateway& gateway,
                    const gateway::PromptLibrary& prompts, gateway::CallScope& scope) {
  config.check();
  const gateway::StageContext ctx{gateway, scope, prompts, input.fixture_key};
  TraceBuilder builder;

  const auto bundle = parser::parse_utterance(input.utterance, input.history, config.templates, ctx);
  builder.append(ParseEvent{bundle});
  if (bundle.encodings.empty()) throw EmptyContext();

  cognitive::CognitiveContext context;
  for (const auto& z : bundle.encodings) {
    std::optional<FuzzyMastery> prior;
    if (auto it = input.priors.find(z.kc.id); it != input.priors.end()) prior = it->second;

    const auto result = config.variant == PipelineVariant::no_cogval
                            ? cognitive::initialize_only(z, config.templates, prior)
                            : cognitive::validate(z, config.templates, config.validation, ctx, prior);
    for (const auto& ev : result.events) builder.append(ev);
    context.emplace(z.kc.id, cognitive::KcDiagnosis{z.kc, result.membership, result.iterations_used, result.stable,
                                                    z.evidence});
  }

  AffectiveControlVector control = affect::neutral_control();
  std::string seed_draft;
  if (config.variant != PipelineVariant::no_affect) {
    const auto drafts = affect::draft_candidates(context, bundle.affect, config.affect.pool_size, ctx);
    const auto predicted = affect::predict_next_states(bundle.affect, drafts, context, ctx);
    std::vector<affect::CandidateResponse> pool;
    for (std::size_t i = 0; i < drafts.size(); ++i) {
      affect::CandidateResponse c;
      c.index = static_cast<std::uint32_t>(i);
      c.draft_text = drafts[i].text;
      c.predicted_after = predicted[i];
      c.transition_score = affect::transition_score(bundle.affect, predicted[i], config.affect.lambda);
      pool.push_back(std::move(c));
    }
    auto selection = affect::select_affective_target(bundle.affect, std::move(pool));
    for (const auto& c : selection.candidates) builder.append(affect::to_event(c));
    control = selection.control;
    seed_draft = selection.candidates[selection.best_index].draft_text;
  }

  const auto focus = strategy::select_focus(context, config.weights);
  const auto stance = strategy::stance_for(focus.state);
  builder.append(IntegrationEvent{focus.ranked, focus.kc_id, focus.state, stance});

  auto composed =
      strategy::compose_response(context, control, focus.kc_id, stance, seed_draft, input.utterance.text, ctx);
  builder.append(FinalAction{composed.action.response_text, composed.rationale, control});

  auto trace = std::move(builder).finish(input.turn_id, config.variant, scope.usage);
  return TurnResult{std::move(composed.action), std::move(composed.rationale), std::move(context), std::move(trace)};
}

}  // namespace tutorws::service
