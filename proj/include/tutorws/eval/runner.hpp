#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tutorws/core/trace.hpp"
#include "tutorws/eval/dataset.hpp"
#include "tutorws/eval/scores.hpp"
#include "tutorws/gateway/gateway.hpp"
#include "tutorws/gateway/prompts.hpp"
#include "tutorws/service/pipeline.hpp"

namespace tutorws::eval {

enum class Condition { baseline, slow_full, slow_no_cogval, slow_no_affect, refine7 };

std::string_view to_string(Condition c);
/// Throws std::invalid_argument for an unknown name.
Condition condition_from_string(std::string_view s);

struct Transcript {
  std::string instance_id;
  std::string condition;
  std::string prompt;
  std::string response;
  /// Step kinds in call order: "diagnose", "respond" for the baseline,
  /// "draft", "critique", "revision"... for refine7, stage names for SLOW.
  std::vector<std::string> steps;
  UsageRecord usage;
  std::optional<std::string> trace;  // canonical bytes, SLOW conditions only
  std::optional<std::string> error;  // set when the instance failed

  bool operator==(const Transcript&) const = default;
};

nlohmann::json to_json(const Transcript& t);
Transcript transcript_from_json(const nlohmann::json& doc);

struct ConditionRun {
  std::vector<Transcript> transcripts;  // dataset order
  UsageRecord usage;                    // sum over instances
};

struct RunOptions {
  service::PipelineConfig pipeline;  // used by the SLOW conditions; variant is overridden
  unsigned workers = 1;              // instances processed concurrently
};

/// The rubric text shared by the baseline, refine7 and judge prompts.
std::string rubric_text(const gateway::PromptLibrary& prompts);

/// Mock routing key for one instance: "<condition>.<instance id>".
std::string fixture_key(Condition c, const EvalInstance& instance);

Transcript run_instance(const EvalInstance& instance, Condition condition, const RunOptions& options,
                        gateway::Gateway& gateway, const gateway::PromptLibrary& prompts);

/// Runs every instance. A failing instance is recorded with its error and
/// does not stop the run.
ConditionRun run_condition(const std::vector<EvalInstance>& dataset, Condition condition, const RunOptions& options,
                           gateway::Gateway& gateway, const gateway::PromptLibrary& prompts);

/// One judge call; scores are clamped into [0, 100].
RubricScores judge(const std::string& prompt, const std::string& response, const gateway::PromptLibrary& prompts,
                   gateway::Gateway& gateway, gateway::CallScope& scope,
                   const std::optional<std::string>& fixture_key = std::nullopt);

/// Judges every successful transcript; entries are keyed by `judge_id` as an
/// llm rater.
ScoreSheet judge_transcripts(const std::vector<Transcript>& transcripts, const std::string& judge_id,
                             const gateway::PromptLibrary& prompts, gateway::Gateway& gateway);

void save_transcripts(const std::vector<Transcript>& transcripts, const std::filesystem::path& path);
std::vector<Transcript> load_transcripts(const std::filesystem::path& path);
/// Every *.jsonl file under `dir` (or `dir` itself when it is a file).
std::vector<Transcript> load_transcript_dir(const std::filesystem::path& dir);

}  // namespace tutorws::eval
