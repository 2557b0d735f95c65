#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "tutorws/core/errors.hpp"

namespace tutorws::eval {

/// Rubric dimensions in report column order.
inline constexpr std::array<std::string_view, 7> kDimensions{"clarity",         "goal_clarity",  "emotion_sensitivity",
                                                             "self_comparison", "personalization", "actionability",
                                                             "overall"};
inline constexpr std::array<std::string_view, 7> kDimensionHeaders{"Clar.", "Goal.", "Emo.",   "SelfComp.",
                                                                   "Pers.", "Act.",  "Overall"};

struct RubricScores {
  std::array<double, 7> values{};

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  double overall() const { return values[6]; }

  /// Every value clamped into [0, 100].
  RubricScores clamped() const;
  bool valid() const;

  bool operator==(const RubricScores&) const = default;
};

std::size_t dimension_index(std::string_view name);

nlohmann::json to_json(const RubricScores& s);
/// Requires all seven dimensions as numbers; extra members are ignored.
RubricScores rubric_from_json(const nlohmann::json& doc);

enum class RaterKind { human, llm };
std::string_view to_string(RaterKind k);
RaterKind rater_kind_from_string(std::string_view s);

struct ScoreKey {
  std::string instance_id;
  std::string condition;
  std::string rater_id;
  RaterKind kind = RaterKind::human;

  auto operator<=>(const ScoreKey&) const = default;
};

class DuplicateScore : public Error {
 public:
  using Error::Error;
};

class MissingRaterKind : public Error {
 public:
  MissingRaterKind(RaterKind kind, const std::string& instance_id, const std::string& condition)
      : Error("no " + std::string(to_string(kind)) + " rating for instance '" + instance_id + "' under condition '" +
              condition + "'"),
        kind_(kind) {}
  RaterKind kind() const noexcept { return kind_; }

 private:
  RaterKind kind_;
};

class InstanceSetMismatch : public Error {
 public:
  explicit InstanceSetMismatch(std::vector<std::string> missing);
  const std::vector<std::string>& missing() const noexcept { return missing_; }

 private:
  std::vector<std::string> missing_;
};

class ScoreSheet {
 public:
  /// Throws DuplicateScore when the key is already present.
  void add(const ScoreKey& key, const RubricScores& scores);
  void merge(const ScoreSheet& other);

  const std::map<ScoreKey, RubricScores>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Instance ids rated under `condition`, sorted.
  std::vector<std::string> instances(const std::string& condition) const;
  std::vector<std::string> conditions() const;

 private:
  std::map<ScoreKey, RubricScores> entries_;
};

/// One JSON object per line: instance_id, condition, rater_id, rater_kind
/// and the seven dimensions.
ScoreSheet load_score_sheet(const std::filesystem::path& path);
/// Every *.jsonl file in `dir`, merged.
ScoreSheet load_score_dir(const std::filesystem::path& dir);
void save_score_sheet(const ScoreSheet& sheet, const std::filesystem::path& path);

/// Human ratings CSV with header instance_id,condition,rater_id,dimension,score.
/// Every (instance, condition, rater) must cover all seven dimensions.
ScoreSheet ingest_human_csv(const std::filesystem::path& path);

/// 0.5 * mean(human raters) + 0.5 * mean(llm raters), per dimension.
RubricScores aggregate_scores(const ScoreSheet& sheet, const std::string& instance_id, const std::string& condition);

struct DeltaRow {
  std::string label;  // "<a> vs <b>"
  std::array<double, 7> delta{};
  std::size_t instances = 0;
};

/// Per-dimension mean of the aggregated scores under `condition_a` minus the
/// same under `condition_b`. Each instance is aggregated across raters
/// first, then instances are averaged. Both conditions must cover the same
/// instance ids.
DeltaRow delta_table(const ScoreSheet& sheet, const std::string& condition_a, const std::string& condition_b);

/// Signed six-decimal cell, e.g. "+38.000000" or "-6.800000".
std::string signed_cell(double v);
std::string render_delta_table(const std::vector<DeltaRow>& rows);
nlohmann::json to_json(const DeltaRow& row);

}  // namespace tutorws::eval
