#include <doctest.h>

#include <random>
#include <set>

#include "support.hpp"
#include "tutorws/core/errors.hpp"
#include "tutorws/strategy/integrator.hpp"

using namespace tutorws;
using namespace tutorws::strategy;

namespace {

cognitive::KcDiagnosis diagnosis(const std::string& id, std::array<double, 4> mu, bool stable, std::size_t spans) {
  cognitive::KcDiagnosis d;
  d.kc = {id, id, "Mathematics"};
  d.membership = FuzzyMastery(mu);
  d.stable = stable;
  d.iterations_used = 2;
  for (std::size_t i = 0; i < spans; ++i) d.evidence.push_back(EvidenceSpan{i, i + 1, "x"});
  return d;
}

cognitive::CognitiveContext context_of(std::vector<cognitive::KcDiagnosis> ds) {
  cognitive::CognitiveContext c;
  for (auto& d : ds) c[d.kc.id] = std::move(d);
  return c;
}

}  // namespace

TEST_SUITE("strategy") {
  TEST_CASE("severity") {
    const auto [s_l, l] = severity(FuzzyMastery::one_hot(MasteryLevel::L));
    CHECK(s_l == 0.0);
    CHECK(l == MasteryLevel::L);
    const auto [s, level] = severity(FuzzyMastery({0.1, 0.5, 0.3, 0.1}));
    CHECK(s == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(level == MasteryLevel::InK);
    CHECK(severity(FuzzyMastery::uniform()).first == 1.0);
  }

  TEST_CASE("confidence") {
    CHECK(confidence(FuzzyMastery::uniform(), true) == 0.25);
    CHECK(confidence(FuzzyMastery({0.1, 0.6, 0.2, 0.1}), false) == doctest::Approx(0.48).epsilon(1e-12));
  }

  TEST_CASE("evidence richness") {
    CHECK(evidence_richness({}) == 0.0);
    CHECK(evidence_richness(std::vector<EvidenceSpan>(2)) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(evidence_richness(std::vector<EvidenceSpan>(3)) == 1.0);
    CHECK(evidence_richness(std::vector<EvidenceSpan>(7)) == 1.0);
  }

  TEST_CASE("priority record combines the three signals") {
    const auto r = priority_record(diagnosis("a", {0.1, 0.6, 0.2, 0.1}, false, 2), {});
    CHECK(r.severity == doctest::Approx(2.0 / 3.0));
    CHECK(r.confidence == doctest::Approx(0.48));
    CHECK(r.richness == doctest::Approx(2.0 / 3.0));
    CHECK(r.priority == doctest::Approx(0.5 * 2.0 / 3.0 + 0.3 * 0.48 + 0.2 * 2.0 / 3.0).epsilon(1e-12));
  }

  TEST_CASE("focus selection matches exhaustive comparison") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> spans(0, 4);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<cognitive::KcDiagnosis> ds;
      for (int k = 0; k < 4; ++k) {
        const auto mu = FuzzyMastery::from_weights({unit(rng), unit(rng), unit(rng), unit(rng)});
        ds.push_back(diagnosis("kc" + std::to_string(k), mu.values(), unit(rng) < 0.5, spans(rng)));
      }
      std::string best;
      double best_p = -1.0;
      for (const auto& d : ds) {
        const auto& v = d.membership.values();
        std::size_t arg = 0;
        for (std::size_t i = 1; i < 4; ++i) {
          if (v[i] > v[arg]) arg = i;
        }
        const double sev = 1.0 - static_cast<double>(arg) / 3.0;
        const double conf = v[arg] * (d.stable ? 1.0 : 0.8);
        const double rich = std::min(1.0, d.evidence.size() / 3.0);
        const double p = 0.5 * sev + 0.3 * conf + 0.2 * rich;
        if (p > best_p) {
          best_p = p;
          best = d.kc.id;
        }
      }
      const auto sel = select_focus(context_of(ds));
      CHECK(sel.kc_id == best);
      CHECK(sel.ranked.front().priority == doctest::Approx(best_p).epsilon(1e-12));
      for (std::size_t i = 1; i < sel.ranked.size(); ++i) CHECK(sel.ranked[i - 1].priority >= sel.ranked[i].priority);
    }
  }

  TEST_CASE("ties break toward the smaller id") {
    const auto c = context_of({diagnosis("biology", {0.1, 0.5, 0.3, 0.1}, true, 2),
                               diagnosis("algebra", {0.1, 0.5, 0.3, 0.1}, true, 2)});
    const auto sel = select_focus(c);
    CHECK(sel.kc_id == "algebra");
    CHECK(sel.ranked[1].kc_id == "biology");
    CHECK(sel.state == MasteryLevel::InK);
  }

  TEST_CASE("empty contexts and bad weights") {
    CHECK_THROWS_AS(select_focus({}), EmptyContext);
    const auto c = context_of({diagnosis("a", {0.25, 0.25, 0.25, 0.25}, true, 1)});
    try {
      select_focus(c, PriorityWeights{0.5, 0.0, 0.2});
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "weight_confidence");
    }
  }

  TEST_CASE("stance mapping is a bijection") {
    CHECK(stance_for(MasteryLevel::Un) == InstructionalStance::FoundationalScaffolding);
    CHECK(stance_for(MasteryLevel::InK) == InstructionalStance::GuidedConsolidation);
    CHECK(stance_for(MasteryLevel::K) == InstructionalStance::RetrievalPractice);
    CHECK(stance_for(MasteryLevel::L) == InstructionalStance::TransferExtension);
    std::set<InstructionalStance> seen;
    for (auto l : kAllLevels) seen.insert(stance_for(l));
    CHECK(seen.size() == 4);
  }

  TEST_CASE("composition through the mock") {
    auto gw = testing::mock_gateway();
    gateway::CallScope scope;
    const gateway::StageContext ctx{*gw, scope, testing::prompts(), std::string("history_turn_1")};
    const auto c = context_of({diagnosis("history.ww1_chronology", {0.2, 0.4, 0.3, 0.1}, true, 3)});
    const AffectiveControlVector control{0.2, 0.4, ControlTarget::encourage};
    const auto a = compose_response(c, control, "history.ww1_chronology", InstructionalStance::GuidedConsolidation,
                                    "seed", "dialogue", ctx);
    CHECK_FALSE(a.action.response_text.empty());
    CHECK_FALSE(a.rationale.empty());
    CHECK(a.action.control == control);
    CHECK(a.action.focus_state == MasteryLevel::InK);
    CHECK(scope.usage.api_calls == 1);

    gateway::CallScope again_scope;
    const gateway::StageContext again{*gw, again_scope, testing::prompts(), std::string("history_turn_1")};
    const auto b = compose_response(c, control, "history.ww1_chronology", InstructionalStance::GuidedConsolidation,
                                    "seed", "dialogue", again);
    CHECK(a.action == b.action);
    CHECK(a.rationale == b.rationale);

    CHECK_THROWS_AS(compose_response(c, control, "missing", InstructionalStance::GuidedConsolidation, "", "", ctx),
                    std::invalid_argument);
  }

  TEST_CASE("blank responses are rejected") {
    auto gw = testing::mock_gateway();
    gateway::CallScope scope;
    const gateway::StageContext ctx{*gw, scope, testing::prompts(), std::string("empty_final")};
    const auto c = context_of({diagnosis("a", {0.25, 0.25, 0.25, 0.25}, true, 1)});
    CHECK_THROWS_AS(compose_response(c, AffectiveControlVector{}, "a", InstructionalStance::FoundationalScaffolding,
                                     "", "", ctx),
                    EmptyResponse);
  }
}
