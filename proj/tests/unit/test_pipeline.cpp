#include <doctest.h>

#include <set>

#include "support.hpp"
#include "tutorws/core/errors.hpp"
#include "tutorws/service/pipeline.hpp"

using namespace tutorws;

TEST_SUITE("pipeline") {
  TEST_CASE("call budget follows validation iterations") {
    CHECK(testing::run_fixture("budget_iter1", "probe").trace.usage().api_calls == 5);
    CHECK(testing::run_fixture("budget_iter2", "probe").trace.usage().api_calls == 6);
    CHECK(testing::run_fixture("budget_iter3", "probe").trace.usage().api_calls == 7);
  }

  TEST_CASE("trace shape of a full turn") {
    const auto r = testing::run_fixture("budget_iter2", "probe");
    const auto& t = r.trace;
    CHECK(t.count<ParseEvent>() == 1);
    CHECK(t.count<ValidationIteration>() == 2);
    CHECK(t.count<CandidateEvent>() == 3);
    CHECK(t.count<IntegrationEvent>() == 1);
    CHECK(t.count<FinalAction>() == 1);
    CHECK(t.usage().per_stage.at("validate").api_calls == 2);
    CHECK(t.usage().consistent());
    const auto* final_action = t.all<FinalAction>().front();
    CHECK(final_action->response_text == r.action.response_text);
    CHECK(final_action->rationale == r.rationale);
    CHECK(final_action->control_vector == r.action.control);
  }

  TEST_CASE("history scenario end to end") {
    const auto r = testing::run_fixture("history_turn_1", testing::kHistoryUtterance);
    CHECK(r.action.stance == InstructionalStance::GuidedConsolidation);
    CHECK(r.action.focus_kc == "history.ww1_chronology");
    CHECK(r.action.focus_state == MasteryLevel::InK);
    CHECK(r.action.control.tgt_cur == ControlTarget::encourage);
    CHECK(r.trace.usage().api_calls == 6);
    const auto candidates = r.trace.all<CandidateEvent>();
    REQUIRE(candidates.size() == 3);
    CHECK(candidates[1]->accepted);
    CHECK(candidates[0]->transition_score < candidates[1]->transition_score);
  }

  TEST_CASE("identical runs give identical traces and actions") {
    const auto a = testing::run_fixture("history_turn_1", testing::kHistoryUtterance);
    const auto b = testing::run_fixture("history_turn_1", testing::kHistoryUtterance);
    CHECK(canonical_serialize(a.trace) == canonical_serialize(b.trace));
    CHECK(canonical_serialize(a.action) == canonical_serialize(b.action));
  }

  TEST_CASE("validation ablation") {
    const auto r = testing::run_fixture("budget_iter2", "probe", PipelineVariant::no_cogval);
    CHECK(r.trace.usage().api_calls == 4);
    CHECK(r.trace.usage().per_stage.count("validate") == 0);
    CHECK(r.trace.variant() == PipelineVariant::no_cogval);
    const auto iterations = r.trace.all<ValidationIteration>();
    REQUIRE(iterations.size() == 1);
    CHECK_FALSE(iterations[0]->grounded);
    CHECK(iterations[0]->iteration == 0);
  }

  TEST_CASE("affect ablation") {
    const auto r = testing::run_fixture("budget_iter2", "probe", PipelineVariant::no_affect);
    CHECK(r.trace.usage().api_calls == 4);
    CHECK(r.trace.count<CandidateEvent>() == 0);
    CHECK(r.action.control == AffectiveControlVector{0.0, 0.0, ControlTarget::stabilize});
  }

  TEST_CASE("retries are part of the budget") {
    const auto r = testing::run_fixture("malformed_parse_once", "probe");
    const auto& u = r.trace.usage();
    CHECK(u.per_stage.at("parse").api_calls == 2);
    const auto iterations = r.trace.count<ValidationIteration>();
    CHECK(u.api_calls == 4 + iterations + 1);
  }

  TEST_CASE("two knowledge components are each validated") {
    const auto r = testing::run_fixture("circuits_confusion", testing::kCircuitsUtterance);
    CHECK(r.context.size() == 2);
    std::set<std::string> ids;
    for (const auto* ev : r.trace.all<ValidationIteration>()) ids.insert(ev->kc_id);
    CHECK(ids == std::set<std::string>{"physics.ohms_law", "physics.series_current"});
    const auto* integration = r.trace.all<IntegrationEvent>().front();
    CHECK(integration->priority_records.size() == 2);
    CHECK(integration->selected_kc == r.action.focus_kc);
    CHECK(r.trace.usage().api_calls ==
          4 + r.trace.usage().per_stage.at("validate").api_calls);
  }

  TEST_CASE("priors from earlier turns shape the starting membership") {
    auto gw = testing::mock_gateway();
    service::PipelineConfig config;
    service::TurnInput input;
    input.turn_id = "t";
    input.utterance = testing::learner("probe");
    input.fixture_key = "budget_iter1";
    const auto plain = service::run_turn(input, config, *gw, testing::prompts());
    input.priors.emplace("budget.kc", FuzzyMastery({0.85, 0.05, 0.05, 0.05}));
    const auto primed = service::run_turn(input, config, *gw, testing::prompts());
    const auto* a = plain.trace.all<ValidationIteration>().front();
    const auto* b = primed.trace.all<ValidationIteration>().front();
    CHECK(b->membership_before[0] > a->membership_before[0]);
  }

  TEST_CASE("failure modes") {
    SUBCASE("persistent malformed parse") {
      try {
        testing::run_fixture("parse_always_malformed", "probe");
        FAIL("expected GatewayFailure");
      } catch (const GatewayFailure& e) {
        CHECK(e.stage() == "parse");
      }
    }
    SUBCASE("no knowledge components") {
      CHECK_THROWS_AS(testing::run_fixture("no_kcs", "probe"), EmptyContext);
    }
    SUBCASE("blank final response") {
      CHECK_THROWS_AS(testing::run_fixture("empty_final", "probe"), EmptyResponse);
    }
    SUBCASE("underfull candidate pool") {
      CHECK_THROWS_AS(testing::run_fixture("underfull", "probe"), PoolUnderfull);
    }
    SUBCASE("prediction arity") {
      CHECK_THROWS_AS(testing::run_fixture("arity", "probe"), ArityMismatch);
    }
    SUBCASE("empty utterance") {
      CHECK_THROWS_AS(testing::run_fixture("default", "   "), EmptyUtterance);
    }
  }

  TEST_CASE("invalid configuration is rejected before any call") {
    auto gw = testing::mock_gateway();
    service::PipelineConfig config;
    config.affect.pool_size = 0;
    service::TurnInput input;
    input.turn_id = "t";
    input.utterance = testing::learner("probe");
    CHECK_THROWS_AS(service::run_turn(input, config, *gw, testing::prompts()), ConfigError);
  }
}
