#include <doctest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "tutorws/eval/dataset.hpp"
#include "tutorws/eval/reports.hpp"
#include "tutorws/eval/runner.hpp"
#include "tutorws/eval/scores.hpp"

using namespace tutorws;
using namespace tutorws::eval;
using nlohmann::json;

namespace {

RubricScores flat(double v) {
  RubricScores s;
  s.values.fill(v);
  return s;
}

std::string dataset_line(const std::string& id, const std::string& subject = "Biology") {
  return json{{"id", id},        {"subject", subject}, {"scenario", "DirectQA"},
              {"emotion", "Neutral"}, {"grade", "K7"},   {"prompt", "What is osmosis?"}}
      .dump();
}

std::size_t dataset_error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_dataset(in);
  } catch (const DatasetError& e) {
    return e.line();
  }
  return 0;
}

EvalInstance instance(const std::string& id) {
  EvalInstance i;
  i.id = id;
  i.prompt = "I keep mixing up the order of events before the war and it makes me anxious.";
  return i;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("benchmark dataset loads with the reference composition") {
    const auto data = load_dataset(testing::fixture_root() / "dataset" / "benchmark.jsonl", true);
    CHECK(data.size() == 100);
    CHECK(composition_of(data) == reference_composition());
    CHECK(data.front().id == "q001");
    CHECK(data.front().grade >= 1);
    CHECK(data.front().grade <= 12);
    for (const auto& inst : data) CHECK(inst.valence == emotion_valence(inst.emotion));
    CHECK(emotion_valence(Emotion::Negative) < 0.0);
    CHECK(emotion_valence(Emotion::Positive) > 0.0);
  }

  TEST_CASE("dataset errors carry their line") {
    CHECK(dataset_error_line(dataset_line("a") + "\n" + dataset_line("b", "Alchemy") + "\n") == 2);
    CHECK(dataset_error_line(dataset_line("a") + "\n\n" + dataset_line("a") + "\n") == 3);
    auto extra = json::parse(dataset_line("a"));
    extra["difficulty"] = 3;
    CHECK(dataset_error_line(extra.dump()) == 1);
    auto grade = json::parse(dataset_line("a"));
    grade["grade"] = "K13";
    CHECK(dataset_error_line(grade.dump()) == 1);
    CHECK(dataset_error_line("{not json") == 1);
    CHECK(dataset_error_line(dataset_line("a") + "\n" + dataset_line("b")) == 0);
  }

  TEST_CASE("composition mismatches are itemised") {
    std::istringstream in(dataset_line("a") + "\n");
    const auto found = composition_of(parse_dataset(in));
    const auto report = compare_composition(reference_composition(), found);
    CHECK(report.find("subject/Biology: expected 20, found 1") != std::string::npos);
    CHECK(report.find("total: expected 100, found 1") != std::string::npos);
    CHECK(compare_composition(reference_composition(), reference_composition()).empty());

    testing::TempDir dir;
    std::ofstream(dir.path() / "one.jsonl") << dataset_line("a") << "\n";
    CHECK_THROWS_AS(load_dataset(dir.path() / "one.jsonl", true), CompositionMismatch);
    CHECK(load_dataset(dir.path() / "one.jsonl").size() == 1);
  }

  TEST_CASE("baseline and refine7 step budgets") {
    auto gw = testing::mock_gateway();
    const auto inst = instance("q042");
    CHECK(fixture_key(Condition::refine7, inst) == "refine7.q042");

    const auto base = run_instance(inst, Condition::baseline, {}, *gw, testing::prompts());
    CHECK_FALSE(base.error);
    CHECK(base.usage.api_calls == 2);
    CHECK(base.steps == std::vector<std::string>{"diagnose", "respond"});
    CHECK_FALSE(base.response.empty());
    CHECK_FALSE(base.trace);

    const auto refine = run_instance(inst, Condition::refine7, {}, *gw, testing::prompts());
    CHECK(refine.usage.api_calls == 7);
    CHECK(refine.steps == std::vector<std::string>{"draft", "critique", "revision", "critique", "revision",
                                                   "critique", "revision"});
    CHECK(refine.response.rfind("Revision 3", 0) == 0);
  }

  TEST_CASE("SLOW conditions record their trace") {
    auto gw = testing::mock_gateway();
    const auto inst = instance("q001");
    const auto full = run_instance(inst, Condition::slow_full, {}, *gw, testing::prompts());
    REQUIRE_FALSE(full.error);
    REQUIRE(full.trace);
    const auto trace = canonical_parse(*full.trace);
    CHECK(trace.turn_id() == "slow_full/q001");
    CHECK(full.usage == trace.usage());
    CHECK(full.usage.api_calls == 4 + trace.count<ValidationIteration>());
    REQUIRE(full.steps.size() == full.usage.api_calls);
    CHECK(full.steps.front() == "parse");
    CHECK(full.steps.back() == "final");

    const auto no_cogval = run_instance(inst, Condition::slow_no_cogval, {}, *gw, testing::prompts());
    CHECK(no_cogval.usage.api_calls == 4);
    const auto no_affect = run_instance(inst, Condition::slow_no_affect, {}, *gw, testing::prompts());
    CHECK(no_affect.usage.api_calls == 2 + trace.count<ValidationIteration>());
  }

  TEST_CASE("a failing instance does not stop the run") {
    testing::TempDir dir;
    std::ofstream(dir.path() / "parse__default.json") << R"({"raw":"nope"})";
    gateway::Gateway gw(std::make_shared<gateway::MockBackend>(dir.path()), {});
    const std::vector<EvalInstance> data{instance("q001"), instance("q002")};
    const auto run = run_condition(data, Condition::slow_full, RunOptions{{}, 2}, gw, testing::prompts());
    REQUIRE(run.transcripts.size() == 2);
    for (const auto& t : run.transcripts) {
      CHECK(t.error);
      CHECK(t.usage.api_calls == 3);
    }
    CHECK(run.usage.api_calls == 6);
  }

  TEST_CASE("judge scores are clamped and complete") {
    auto gw = testing::mock_gateway();
    gateway::CallScope scope;
    const auto s = judge("p", "r", testing::prompts(), *gw, scope, std::string("overrange"));
    CHECK(s.overall() == 100.0);
    CHECK(s[dimension_index("clarity")] == 72.0);
    CHECK(s.valid());
    CHECK_THROWS_AS(judge("p", "r", testing::prompts(), *gw, scope, std::string("missing_dim")), GatewayFailure);
    CHECK_THROWS_AS(judge("p", "", testing::prompts(), *gw, scope), std::invalid_argument);
  }

  TEST_CASE("aggregation weighs human and llm means equally") {
    ScoreSheet sheet;
    sheet.add({"q1", "slow", "h1", RaterKind::human}, flat(80));
    sheet.add({"q1", "slow", "h2", RaterKind::human}, flat(90));
    sheet.add({"q1", "slow", "j1", RaterKind::llm}, flat(70));
    CHECK(aggregate_scores(sheet, "q1", "slow") == flat(77.5));
    CHECK_THROWS_AS(sheet.add({"q1", "slow", "h1", RaterKind::human}, flat(1)), DuplicateScore);

    sheet.add({"q2", "slow", "h1", RaterKind::human}, flat(60));
    sheet.add({"q2", "slow", "j1", RaterKind::llm}, flat(60));
    CHECK(aggregate_scores(sheet, "q2", "slow") == flat(60));

    sheet.add({"q3", "slow", "h1", RaterKind::human}, flat(60));
    try {
      aggregate_scores(sheet, "q3", "slow");
      FAIL("expected MissingRaterKind");
    } catch (const MissingRaterKind& e) {
      CHECK(e.kind() == RaterKind::llm);
    }

    sheet.add({"q1", "base", "h1", RaterKind::human}, flat(50));
    sheet.add({"q1", "base", "j1", RaterKind::llm}, flat(50));
    try {
      delta_table(sheet, "slow", "base");
      FAIL("expected InstanceSetMismatch");
    } catch (const InstanceSetMismatch& e) {
      CHECK(e.missing() == std::vector<std::string>{"q2", "q3"});
    }
  }

  TEST_CASE("delta table on the recorded score sheets") {
    const auto sheet = load_score_dir(testing::fixture_root() / "scores");
    const auto r1 = delta_table(sheet, "deepseek-r1.slow", "deepseek-r1.baseline");
    const auto v3 = delta_table(sheet, "deepseek-v3.slow", "deepseek-v3.baseline");
    CHECK(r1.instances == 6);
    CHECK(r1.delta[dimension_index("overall")] == doctest::Approx(38.0).epsilon(1e-9));
    CHECK(v3.delta[dimension_index("clarity")] == doctest::Approx(-6.8).epsilon(1e-9));
    CHECK(signed_cell(r1.delta[dimension_index("overall")]) == "+38.000000");
    CHECK(signed_cell(v3.delta[dimension_index("clarity")]) == "-6.800000");
    const auto table = render_delta_table({r1, v3});
    CHECK(table.find("Overall") != std::string::npos);
    CHECK(table.find("+38.000000") != std::string::npos);
    CHECK(to_json(r1).at("comparison") == "deepseek-r1.slow vs deepseek-r1.baseline");
    CHECK(to_json(r1).at("delta").at("overall") == doctest::Approx(38.0));
  }

  TEST_CASE("score sheets round trip") {
    const auto sheet = load_score_sheet(testing::fixture_root() / "scores" / "deepseek-r1.jsonl");
    testing::TempDir dir;
    save_score_sheet(sheet, dir.path() / "copy.jsonl");
    CHECK(load_score_sheet(dir.path() / "copy.jsonl").entries() == sheet.entries());
  }

  TEST_CASE("human ratings CSV") {
    testing::TempDir dir;
    {
      std::ofstream out(dir.path() / "ok.csv");
      out << "instance_id,condition,rater_id,dimension,score\n";
      for (auto d : kDimensions) out << "q1,slow,h1," << d << ",75\n";
    }
    const auto sheet = ingest_human_csv(dir.path() / "ok.csv");
    REQUIRE(sheet.size() == 1);
    CHECK(sheet.entries().begin()->first.kind == RaterKind::human);
    CHECK(sheet.entries().begin()->second == flat(75));

    {
      std::ofstream out(dir.path() / "short.csv");
      out << "instance_id,condition,rater_id,dimension,score\nq1,slow,h1,clarity,75\n";
    }
    CHECK_THROWS_AS(ingest_human_csv(dir.path() / "short.csv"), SchemaError);
    {
      std::ofstream out(dir.path() / "range.csv");
      out << "instance_id,condition,rater_id,dimension,score\nq1,slow,h1,clarity,175\n";
    }
    CHECK_THROWS_AS(ingest_human_csv(dir.path() / "range.csv"), SchemaError);
  }

  TEST_CASE("transcripts round trip") {
    auto gw = testing::mock_gateway();
    std::vector<Transcript> ts{run_instance(instance("q1"), Condition::baseline, {}, *gw, testing::prompts()),
                               run_instance(instance("q1"), Condition::slow_full, {}, *gw, testing::prompts())};
    testing::TempDir dir;
    save_transcripts(ts, dir.path() / "run.jsonl");
    CHECK(load_transcripts(dir.path() / "run.jsonl") == ts);
    CHECK(load_transcript_dir(dir.path()) == ts);
  }

  TEST_CASE("usage summary on the recorded transcripts") {
    const auto ts = load_transcripts(testing::fixture_root() / "usage" / "transcripts.jsonl");
    const auto rows = summarize_usage(ts);
    std::map<std::string, ConditionUsage> by;
    for (const auto& r : rows) by[r.condition] = r;
    REQUIRE(by.size() == 3);
    CHECK(by["baseline"].multiplier.value() == doctest::Approx(1.0));
    CHECK(by["slow_full"].multiplier.value() == doctest::Approx(6.4).epsilon(1e-12));
    CHECK(by["refine7"].multiplier.value() == doctest::Approx(6.2).epsilon(1e-12));
    CHECK(by["slow_full"].median_calls == 6.0);
    CHECK(by["slow_full"].p80_calls == 7.0);
    CHECK(by["refine7"].median_calls == 7.0);
    CHECK(by["baseline"].instances == 10);
    CHECK(render_usage(rows).find("slow_full") != std::string::npos);
    CHECK(percentile({1, 2, 3, 4, 5}, 0.8) == 4.0);
    CHECK(percentile({5, 1}, 1.0) == 5.0);
    CHECK_THROWS_AS(percentile({}, 0.5), std::invalid_argument);
  }

  TEST_CASE("reliability and condition comparison") {
    const auto sheet = load_score_dir(testing::fixture_root() / "scores");
    const auto rel = reliability(sheet);
    CHECK(rel.human_raters == std::vector<std::string>{"h1", "h2"});
    CHECK(rel.responses == 24);
    CHECK(rel.alpha_human > 0.8);
    CHECK(rel.alpha_human <= 1.0);
    CHECK(rel.icc_human > 0.5);
    CHECK(rel.spearman_overall > 0.8);
    CHECK(render_reliability(rel).find("alpha") != std::string::npos);

    const auto cmp = compare_conditions(sheet, "deepseek-r1.slow", "deepseek-r1.baseline");
    CHECK(cmp.delta.delta[6] == doctest::Approx(38.0));
    CHECK(cmp.wilcoxon.n == 6);
    CHECK(cmp.wilcoxon.statistic == 21.0);
    CHECK(cmp.wilcoxon.p_value == doctest::Approx(0.03125));
    CHECK(cmp.cliffs_delta == 1.0);

    ScoreSheet single;
    single.add({"q1", "c", "h1", RaterKind::human}, flat(1));
    single.add({"q1", "c", "j1", RaterKind::llm}, flat(1));
    CHECK_THROWS_AS(reliability(single), DegenerateInput);
  }
}
