#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tutorws/core/types.hpp"

namespace tutorws {

enum class PipelineVariant { full, no_cogval, no_affect };

std::string_view to_string(PipelineVariant v);
/// Throws std::invalid_argument naming the unknown variant.
PipelineVariant pipeline_variant_from_string(std::string_view s);

struct ParseEvent {
  EvidenceBundle bundle;

  bool operator==(const ParseEvent&) const = default;
};

/// One pass of the validation loop for one knowledge component. Level-indexed
/// arrays are ordered Un, InK, K, L. `grounded` is false for the
/// initialisation-only record emitted when validation is disabled.
struct ValidationIteration {
  std::string kc_id;
  std::uint32_t iteration = 0;
  bool grounded = true;
  std::array<double, 4> membership_before{};
  std::array<double, 4> membership_after{};
  std::array<double, 4> mismatch{};  // aggregate directional mismatch per hypothesised level
  std::array<double, 4> effort{};    // counterfactual effort toward each level
  double max_change = 0.0;

  bool operator==(const ValidationIteration&) const = default;
};

struct CandidateEvent {
  std::uint32_t index = 0;
  std::string draft_text;
  AffectiveState predicted_state;
  double transition_score = 0.0;
  bool accepted = false;
  std::optional<std::string> rejection_reason;

  bool operator==(const CandidateEvent&) const = default;
};

struct IntegrationEvent {
  std::vector<PriorityRecord> priority_records;
  std::string selected_kc;
  MasteryLevel selected_state = MasteryLevel::Un;
  InstructionalStance stance = InstructionalStance::FoundationalScaffolding;

  bool operator==(const IntegrationEvent&) const = default;
};

struct FinalAction {
  std::string response_text;
  std::string rationale;
  AffectiveControlVector control_vector;

  bool operator==(const FinalAction&) const = default;
};

using StageEvent = std::variant<ParseEvent, ValidationIteration, CandidateEvent, IntegrationEvent, FinalAction>;

struct StageUsage {
  std::uint64_t api_calls = 0;
  std::uint64_t tokens_in = 0;
  std::uint64_t tokens_out = 0;

  bool operator==(const StageUsage&) const = default;
};

struct UsageRecord {
  std::uint64_t api_calls = 0;
  std::uint64_t tokens_in = 0;
  std::uint64_t tokens_out = 0;
  std::map<std::string, StageUsage> per_stage;

  void add(const std::string& stage, std::uint64_t calls, std::uint64_t in, std::uint64_t out);
  void merge(const UsageRecord& other);
  std::uint64_t total_tokens() const { return tokens_in + tokens_out; }
  /// Totals equal the per-stage sums.
  bool consistent() const;

  bool operator==(const UsageRecord&) const = default;
};

/// Returns the index of the first event that breaks pipeline order, or
/// nullopt. An index equal to events.size() means the sequence ends early.
struct OrderViolation {
  std::size_t index;
  std::string reason;
};
std::optional<OrderViolation> check_stage_order(std::span<const StageEvent> events);

/// Immutable record of one tutoring turn. Construction enforces stage order
/// and usage consistency, and quantises every real to wire precision so that
/// parse(serialize(t)) == t holds exactly.
class ReasoningTrace {
 public:
  static constexpr int kVersion = 1;

  ReasoningTrace(std::string turn_id, PipelineVariant variant, std::vector<StageEvent> events, UsageRecord usage);

  const std::string& turn_id() const { return turn_id_; }
  PipelineVariant variant() const { return variant_; }
  const std::vector<StageEvent>& events() const { return events_; }
  const UsageRecord& usage() const { return usage_; }

  template <typename Event>
  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& e : events_) n += std::holds_alternative<Event>(e) ? 1 : 0;
    return n;
  }

  template <typename Event>
  std::vector<const Event*> all() const {
    std::vector<const Event*> out;
    for (const auto& e : events_) {
      if (const auto* p = std::get_if<Event>(&e)) out.push_back(p);
    }
    return out;
  }

  bool operator==(const ReasoningTrace&) const = default;

 private:
  std::string turn_id_;
  PipelineVariant variant_;
  std::vector<StageEvent> events_;
  UsageRecord usage_;
};

/// Incremental construction with the ordering check applied per append, so a
/// pipeline bug surfaces at the offending stage rather than at the end.
class TraceBuilder {
 public:
  void append(StageEvent event);
  std::size_t size() const { return events_.size(); }
  ReasoningTrace finish(std::string turn_id, PipelineVariant variant, UsageRecord usage) &&;

 private:
  std::vector<StageEvent> events_;
};

nlohmann::json to_json(const ReasoningTrace& trace);
ReasoningTrace trace_from_json(const nlohmann::json& doc);

std::string canonical_serialize(const ReasoningTrace& trace);
/// Throws SchemaError naming the missing/extra/ill-typed field, or
/// TraceOrderError when the events are out of order.
ReasoningTrace canonical_parse(std::string_view bytes);

nlohmann::json to_json(const UsageRecord& usage);
UsageRecord usage_from_json(const nlohmann::json& doc, const std::string& path = "usage");

nlohmann::json to_json(const AffectiveState& s);
nlohmann::json to_json(const EvidenceSpan& s);
nlohmann::json to_json(const AffectiveControlVector& c);
nlohmann::json to_json(const TutorAction& action);
TutorAction tutor_action_from_json(const nlohmann::json& doc);
std::string canonical_serialize(const TutorAction& action);

}  // namespace tutorws
