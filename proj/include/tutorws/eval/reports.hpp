#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tutorws/core/trace.hpp"
#include "tutorws/eval/runner.hpp"
#include "tutorws/eval/scores.hpp"
#include "tutorws/eval/stats.hpp"

namespace tutorws::eval {

struct ConditionUsage {
  std::string condition;
  std::size_t instances = 0;
  UsageRecord total;
  double median_calls = 0.0;
  double p80_calls = 0.0;
  std::optional<double> multiplier;  // total tokens relative to the baseline condition
};

/// Nearest-rank percentile, q in (0, 1].
double percentile(std::vector<double> values, double q);

/// Groups transcripts by condition. Multipliers are filled in when a
/// "baseline" condition is present.
std::vector<ConditionUsage> summarize_usage(const std::vector<Transcript>& transcripts);
std::string render_usage(const std::vector<ConditionUsage>& rows);
nlohmann::json to_json(const std::vector<ConditionUsage>& rows);

struct ReliabilityReport {
  std::vector<std::string> human_raters;
  std::size_t responses = 0;     // (instance, condition) pairs rated by every human and an llm
  double alpha_human = 0.0;      // rows: response x dimension, columns: human raters
  double alpha_hybrid = 0.0;     // same rows, humans plus the mean llm rating as one more column
  double icc_human = 0.0;        // ICC(2,1) on the human columns
  double spearman_overall = 0.0; // mean human vs mean llm overall score per response
};

/// Needs at least two human raters and two fully rated responses.
ReliabilityReport reliability(const ScoreSheet& sheet);
std::string render_reliability(const ReliabilityReport& r);
nlohmann::json to_json(const ReliabilityReport& r);

struct ComparisonStats {
  DeltaRow delta;
  WilcoxonResult wilcoxon;  // on per-instance overall differences
  double cliffs_delta = 0.0;  // overall scores, a vs b
};

ComparisonStats compare_conditions(const ScoreSheet& sheet, const std::string& condition_a,
                                   const std::string& condition_b);
nlohmann::json to_json(const ComparisonStats& s);

}  // namespace tutorws::eval
