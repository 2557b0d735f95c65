#include <doctest.h>

#include <barrier>
#include <fstream>
#include <set>
#include <thread>

#include "service_harness.hpp"
#include "support.hpp"
#include "tutorws/service/config.hpp"
#include "tutorws/service/session_service.hpp"

using namespace tutorws;
using namespace tutorws::service;
using nlohmann::json;

TEST_SUITE("service") {
  TEST_CASE("config parsing and validation") {
    const auto c = SessionConfig::from_json(json{{"backend", "mock"}, {"epsilon", 0.01}, {"pool_size", 4},
                                                 {"variant", "no_affect"}, {"weight_severity", 0.6}});
    CHECK(c.pipeline.validation.epsilon == 0.01);
    CHECK(c.pipeline.affect.pool_size == 4);
    CHECK(c.pipeline.variant == PipelineVariant::no_affect);
    CHECK(c.pipeline.weights.severity == 0.6);

    auto field_of = [](const json& doc) {
      try {
        SessionConfig::from_json(doc).check();
      } catch (const ConfigError& e) {
        return e.field();
      }
      return std::string{};
    };
    CHECK(field_of(json{{"epsilon", -1.0}}) == "epsilon");
    CHECK(field_of(json{{"epsilon", "small"}}) == "epsilon");
    CHECK(field_of(json{{"pool_size", 0}}) == "pool_size");
    CHECK(field_of(json{{"variant", "fast"}}) == "variant");
    CHECK(field_of(json{{"backend", "carrier-pigeon"}}) == "backend");
    CHECK(field_of(json{{"surprise", 1}}) == "surprise");
    CHECK(field_of(json::object()).empty());
  }

  TEST_CASE("session overrides are restricted") {
    const auto base = testing::mock_service_config();
    CHECK(base.with_overrides(json{{"eta", 0.7}}).pipeline.validation.eta == 0.7);
    try {
      base.with_overrides(json{{"backend", "http"}});
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "backend");
    }
  }

  TEST_CASE("config round trips through its JSON form") {
    auto c = testing::mock_service_config(5);
    c.pipeline.validation.max_iters = 4;
    const auto again = SessionConfig::from_json(c.to_json());
    CHECK(again.to_json() == c.to_json());
    CHECK_FALSE(c.to_json().contains("api_key"));
  }

  TEST_CASE("config files load relative to their directory") {
    testing::TempDir dir;
    std::ofstream(dir.path() / "engine.json") << R"({"backend":"mock","fixture_dir":"fx","epsilon":0.02})";
    const auto c = SessionConfig::load(dir.path() / "engine.json");
    CHECK(c.fixture_dir == (dir.path() / "fx").lexically_normal());
    CHECK(c.pipeline.validation.epsilon == 0.02);
  }

  TEST_CASE("sessions get distinct ids and keep a log") {
    testing::TempDir dir;
    SessionService svc(testing::mock_service_config(), dir.path());
    std::set<std::string> ids;
    for (int i = 0; i < 20; ++i) ids.insert(svc.create_session());
    CHECK(ids.size() == 20);
    CHECK(svc.session_count() == 20);

    const auto id = *ids.begin();
    const auto first = svc.post_turn(id, testing::kHistoryUtterance, std::string("history_turn_1"));
    CHECK(first.trace_id == "t1");
    const auto second = svc.post_turn(id, "Was the assassination first?", std::string("budget_iter1"));
    CHECK(second.trace_id == "t2");
    const auto log = svc.get_log(id);
    REQUIRE(log.size() == 2);
    CHECK(log[0].utterance.text == testing::kHistoryUtterance);
    CHECK(log[1].action == second.action);

    const auto trace = canonical_parse(svc.get_trace(id, "t1"));
    CHECK(trace.turn_id() == id + "/t1");
    CHECK_THROWS_AS(svc.get_trace(id, "t9"), NotFound);
    CHECK_THROWS_AS(svc.post_turn("nope", "hi"), NotFound);
  }

  TEST_CASE("later turns carry the memberships of earlier ones") {
    testing::TempDir dir;
    SessionService svc(testing::mock_service_config(), dir.path());
    const auto id = svc.create_session();
    svc.post_turn(id, "probe", std::string("budget_iter3"));
    svc.post_turn(id, "probe", std::string("budget_iter3"));
    const auto t1 = canonical_parse(svc.get_trace(id, "t1"));
    const auto t2 = canonical_parse(svc.get_trace(id, "t2"));
    CHECK(t2.all<ValidationIteration>().front()->membership_before !=
          t1.all<ValidationIteration>().front()->membership_before);
  }

  TEST_CASE("session overrides reach the pipeline") {
    testing::TempDir dir;
    SessionService svc(testing::mock_service_config(), dir.path());
    const auto id = svc.create_session(json{{"variant", "no_cogval"}});
    svc.post_turn(id, "probe", std::string("budget_iter2"));
    const auto t = canonical_parse(svc.get_trace(id, "t1"));
    CHECK(t.variant() == PipelineVariant::no_cogval);
    CHECK(t.usage().api_calls == 4);
  }

  TEST_CASE("HTTP routes") {
    testing::TempDir dir;
    testing::ServiceHarness h(dir.path(), testing::mock_service_config());

    auto [hs, hbody] = h.get("/v1/health");
    CHECK(hs == 200);
    CHECK(json::parse(hbody).at("status") == "ok");

    const auto id = h.create_session();
    auto [status, body] = h.post_turn(id, testing::kHistoryUtterance, "history_turn_1");
    REQUIRE(status == 200);
    const auto reply = json::parse(body);
    CHECK(reply.at("trace_id") == "t1");
    CHECK(reply.at("action").at("stance") == "GuidedConsolidation");
    CHECK_FALSE(reply.at("rationale").get<std::string>().empty());

    auto [ts, tbody] = h.get("/v1/sessions/" + id + "/traces/t1");
    CHECK(ts == 200);
    CHECK(tbody == h.service().get_trace(id, "t1"));
    CHECK(canonical_parse(tbody).count<FinalAction>() == 1);

    auto [ls, lbody] = h.get("/v1/sessions/" + id + "/log");
    CHECK(ls == 200);
    CHECK(json::parse(lbody).at("turns").size() == 1);
  }

  TEST_CASE("HTTP error mapping") {
    testing::TempDir dir;
    testing::ServiceHarness h(dir.path(), testing::mock_service_config());
    auto c = h.client();

    auto bad = c.Post("/v1/sessions", R"({"epsilon": -1})", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 422);
    CHECK(json::parse(bad->body).at("field") == "epsilon");

    auto wrapped = c.Post("/v1/sessions", R"({"config": {"pool_size": 0}})", "application/json");
    REQUIRE(wrapped);
    CHECK(wrapped->status == 422);
    CHECK(json::parse(wrapped->body).at("field") == "pool_size");

    CHECK(h.get("/v1/sessions/missing/log").first == 404);
    CHECK(h.post_turn("missing", "hi", "default").first == 404);

    const auto id = h.create_session();
    CHECK(h.get("/v1/sessions/" + id + "/traces/t1").first == 404);

    auto empty = h.post_turn(id, "   ", "default");
    CHECK(empty.first == 422);
    CHECK(json::parse(empty.second).at("field") == "text");

    auto no_text = c.Post("/v1/sessions/" + id + "/turns", "{}", "application/json");
    REQUIRE(no_text);
    CHECK(no_text->status == 422);

    auto broken = h.post_turn(id, "probe", "parse_always_malformed");
    CHECK(broken.first == 502);
    CHECK(json::parse(broken.second).at("stage") == "parse");

    auto no_kcs = h.post_turn(id, "probe", "no_kcs");
    CHECK(no_kcs.first == 422);

    for (const char* key : {"underfull", "arity", "empty_final"}) {
      auto unusable = h.post_turn(id, "probe", key);
      CHECK(unusable.first == 502);
      CHECK(json::parse(unusable.second).at("error") == "invalid_model_output");
    }
    auto span = h.post_turn(id, "this text is not in the fixture", "history_turn_1");
    CHECK(span.first == 502);
  }

  TEST_CASE("concurrent turns to one session: exactly one is rejected") {
    testing::TempDir dir;
    testing::ServiceHarness h(dir.path(), testing::mock_service_config(60));
    const auto id = h.create_session();
    std::barrier start(2);
    std::array<int, 2> status{};
    std::vector<std::thread> threads;
    for (int i = 0; i < 2; ++i) {
      threads.emplace_back([&, i] {
        start.arrive_and_wait();
        status[i] = h.post_turn(id, "probe", "budget_iter2").first;
      });
    }
    for (auto& t : threads) t.join();
    CHECK(std::count(status.begin(), status.end(), 200) == 1);
    CHECK(std::count(status.begin(), status.end(), 409) == 1);
    CHECK(h.service().get_log(id).size() == 1);
  }

  TEST_CASE("sixteen concurrent sessions complete") {
    testing::TempDir dir;
    testing::ServiceHarness h(dir.path(), testing::mock_service_config(5));
    std::vector<std::string> ids;
    for (int i = 0; i < 16; ++i) ids.push_back(h.create_session());
    std::array<int, 16> status{};
    std::vector<std::thread> threads;
    for (int i = 0; i < 16; ++i) {
      threads.emplace_back([&, i] { status[i] = h.post_turn(ids[i], testing::kHistoryUtterance, "history_turn_1").first; });
    }
    for (auto& t : threads) t.join();
    for (int s : status) CHECK(s == 200);
    // Identical inputs in different sessions differ only in their turn ids.
    auto a = json::parse(h.service().get_trace(ids[0], "t1"));
    auto b = json::parse(h.service().get_trace(ids[1], "t1"));
    a.erase("turn_id");
    b.erase("turn_id");
    CHECK(a == b);
  }

  TEST_CASE("traces survive a restart byte for byte") {
    testing::TempDir dir;
    std::map<std::pair<std::string, std::string>, std::string> before;
    std::vector<std::string> ids;
    {
      testing::ServiceHarness h(dir.path(), testing::mock_service_config());
      for (int i = 0; i < 3; ++i) ids.push_back(h.create_session());
      h.post_turn(ids[0], testing::kHistoryUtterance, "history_turn_1");
      h.post_turn(ids[0], "What came next?", "budget_iter2");
      h.post_turn(ids[1], testing::kCircuitsUtterance, "circuits_confusion");
      for (const auto& id : ids) {
        for (const auto& rec : h.service().get_log(id)) {
          before[{id, rec.trace_id}] = h.get("/v1/sessions/" + id + "/traces/" + rec.trace_id).second;
        }
      }
    }
    CHECK(before.size() == 3);
    testing::ServiceHarness h(dir.path(), testing::mock_service_config());
    CHECK(h.service().session_count() == 3);
    for (const auto& [key, bytes] : before) {
      auto [status, body] = h.get("/v1/sessions/" + key.first + "/traces/" + key.second);
      CHECK(status == 200);
      CHECK(body == bytes);
    }
    auto next = h.post_turn(ids[0], "And after that?", "budget_iter1");
    CHECK(next.first == 200);
    CHECK(json::parse(next.second).at("trace_id") == "t3");
  }

  TEST_CASE("a torn final line is ignored on replay") {
    testing::TempDir dir;
    std::string id;
    std::string bytes;
    {
      SessionService svc(testing::mock_service_config(), dir.path());
      id = svc.create_session();
      svc.post_turn(id, "probe", std::string("budget_iter1"));
      bytes = svc.get_trace(id, "t1");
    }
    std::ofstream(dir.path() / (id + ".jsonl"), std::ios::app) << R"({"kind":"turn","turn_ind)";
    SessionService again(testing::mock_service_config(), dir.path());
    CHECK(again.get_trace(id, "t1") == bytes);
    CHECK(again.get_log(id).size() == 1);
  }
}
