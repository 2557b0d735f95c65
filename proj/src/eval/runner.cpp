#include "tutorws/eval/runner.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "tutorws/gateway/stage_context.hpp"

namespace tutorws::eval {

using nlohmann::json;

namespace {

constexpr std::array kConditions{Condition::baseline, Condition::slow_full, Condition::slow_no_cogval,
                                 Condition::slow_no_affect, Condition::refine7};

Transcript run_baseline(const EvalInstance& inst, const gateway::StageContext& ctx, const std::string& rubric) {
  Transcript t;
  const auto diagnosis =
      ctx.call(gateway::Stage::parse, "baseline_diagnose", "baseline_diagnose", {{"rubric", rubric}, {"prompt", inst.prompt}});
  t.steps.push_back("diagnose");
  const auto reply = ctx.call(gateway::Stage::final, "baseline_respond", "baseline_respond",
                              {{"rubric", rubric},
                               {"prompt", inst.prompt},
                               {"cognitive_state", diagnosis.payload.at("cognitive_state").get<std::string>()},
                               {"affective_state", diagnosis.payload.at("affective_state").get<std::string>()}});
  t.steps.push_back("respond");
  t.response = reply.payload.at("response").get<std::string>();
  return t;
}

Transcript run_refine7(const EvalInstance& inst, const gateway::StageContext& ctx, const std::string& rubric) {
  Transcript t;
  auto step = [&](const std::string& kind, std::map<std::string, std::string> vars) {
    vars["rubric"] = rubric;
    vars["prompt"] = inst.prompt;
    const auto r = ctx.call(gateway::Stage::refine_step, "refine_" + kind, "refine_step", vars);
    t.steps.push_back(kind);
    return r.payload.at("text").get<std::string>();
  };
  std::string current = step("draft", {});
  for (int round = 0; round < 3; ++round) {
    const auto critique = step("critique", {{"current", current}});
    current = step("revision", {{"current", current}, {"critique", critique}});
  }
  t.response = current;
  return t;
}

PipelineVariant variant_for(Condition c) {
  switch (c) {
    case Condition::slow_no_cogval: return PipelineVariant::no_cogval;
    case Condition::slow_no_affect: return PipelineVariant::no_affect;
    default: return PipelineVariant::full;
  }
}

}  // namespace

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::baseline: return "baseline";
    case Condition::slow_full: return "slow_full";
    case Condition::slow_no_cogval: return "slow_no_cogval";
    case Condition::slow_no_affect: return "slow_no_affect";
    case Condition::refine7: return "refine7";
  }
  return "?";
}

Condition condition_from_string(std::string_view s) {
  for (auto c : kConditions) {
    if (to_string(c) == s) return c;
  }
  throw std::invalid_argument("unknown condition \"" + std::string(s) +
                              "\" (expected baseline, slow_full, slow_no_cogval, slow_no_affect or refine7)");
}

json to_json(const Transcript& t) {
  return json{{"instance_id", t.instance_id},
              {"condition", t.condition},
              {"prompt", t.prompt},
              {"response", t.response},
              {"steps", t.steps},
              {"usage", tutorws::to_json(t.usage)},
              {"trace", t.trace ? json(*t.trace) : json(nullptr)},
              {"error", t.error ? json(*t.error) : json(nullptr)}};
}

Transcript transcript_from_json(const json& doc) {
  Transcript t;
  t.instance_id = doc.at("instance_id").get<std::string>();
  t.condition = doc.at("condition").get<std::string>();
  t.prompt = doc.value("prompt", std::string{});
  t.response = doc.value("response", std::string{});
  if (doc.contains("steps")) t.steps = doc.at("steps").get<std::vector<std::string>>();
  t.usage = usage_from_json(doc.at("usage"));
  if (doc.contains("trace") && doc["trace"].is_string()) t.trace = doc["trace"].get<std::string>();
  if (doc.contains("error") && doc["error"].is_string()) t.error = doc["error"].get<std::string>();
  return t;
}

std::string rubric_text(const gateway::PromptLibrary& prompts) { return prompts.render("rubric", {}); }

std::string fixture_key(Condition c, const EvalInstance& instance) {
  return std::string(to_string(c)) + "." + instance.id;
}

Transcript run_instance(const EvalInstance& instance, Condition condition, const RunOptions& options,
                        gateway::Gateway& gateway, const gateway::PromptLibrary& prompts) {
  gateway::CallScope scope;
  const gateway::StageContext ctx{gateway, scope, prompts, fixture_key(condition, instance)};
  Transcript t;
  try {
    switch (condition) {
      case Condition::baseline:
        t = run_baseline(instance, ctx, rubric_text(prompts));
        t.usage = scope.usage;
        break;
      case Condition::refine7:
        t = run_refine7(instance, ctx, rubric_text(prompts));
        t.usage = scope.usage;
        break;
      default: {
        auto config = options.pipeline;
        config.variant = variant_for(condition);
        service::TurnInput input;
        input.turn_id = std::string(to_string(condition)) + "/" + instance.id;
        input.utterance = Utterance{instance.prompt, Speaker::learner, 1, {}};
        input.fixture_key = fixture_key(condition, instance);
        auto result = service::run_turn(input, config, gateway, prompts, scope);
        t.response = result.action.response_text;
        for (const auto& entry : scope.log) t.steps.emplace_back(gateway::to_string(entry.stage));
        t.usage = result.trace.usage();
        t.trace = canonical_serialize(result.trace);
      }
    }
  } catch (const Error& e) {
    t.error = e.what();
    t.usage = scope.usage;
  }
  t.instance_id = instance.id;
  t.condition = std::string(to_string(condition));
  t.prompt = instance.prompt;
  return t;
}

ConditionRun run_condition(const std::vector<EvalInstance>& dataset, Condition condition, const RunOptions& options,
                           gateway::Gateway& gateway, const gateway::PromptLibrary& prompts) {
  ConditionRun run;
  run.transcripts.resize(dataset.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (auto i = next++; i < dataset.size(); i = next++) {
      run.transcripts[i] = run_instance(dataset[i], condition, options, gateway, prompts);
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(dataset.size())));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (const auto& t : run.transcripts) run.usage.merge(t.usage);
  return run;
}

RubricScores judge(const std::string& prompt, const std::string& response, const gateway::PromptLibrary& prompts,
                   gateway::Gateway& gateway, gateway::CallScope& scope, const std::optional<std::string>& fixture_key) {
  if (response.empty()) throw std::invalid_argument("cannot judge an empty transcript");
  const gateway::StageContext ctx{gateway, scope, prompts, fixture_key};
  const auto r = ctx.call(gateway::Stage::judge, "judge", "judge",
                          {{"rubric", rubric_text(prompts)}, {"prompt", prompt}, {"response", response}});
  return rubric_from_json(r.payload).clamped();
}

ScoreSheet judge_transcripts(const std::vector<Transcript>& transcripts, const std::string& judge_id,
                             const gateway::PromptLibrary& prompts, gateway::Gateway& gateway) {
  ScoreSheet sheet;
  for (const auto& t : transcripts) {
    if (t.error || t.response.empty()) continue;
    gateway::CallScope scope;
    const auto scores = judge(t.prompt, t.response, prompts, gateway, scope, t.condition + "." + t.instance_id);
    sheet.add(ScoreKey{t.instance_id, t.condition, judge_id, RaterKind::llm}, scores);
  }
  return sheet;
}

void save_transcripts(const std::vector<Transcript>& transcripts, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write transcripts " + path.string());
  for (const auto& t : transcripts) out << to_json(t).dump() << "\n";
}

std::vector<Transcript> load_transcripts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open transcripts " + path.string());
  std::vector<Transcript> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(transcript_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw SchemaError(path.filename().string() + ":" + std::to_string(number), e.what());
    }
  }
  return out;
}

std::vector<Transcript> load_transcript_dir(const std::filesystem::path& dir) {
  if (std::filesystem::is_regular_file(dir)) return load_transcripts(dir);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Transcript> out;
  for (const auto& f : files) {
    auto part = load_transcripts(f);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

}  // namespace tutorws::eval
