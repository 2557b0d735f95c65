#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tutorws {

enum class Speaker { learner, tutor };

std::string_view to_string(Speaker s);
Speaker speaker_from_string(std::string_view s);

struct Utterance {
  std::string text;
  Speaker speaker = Speaker::learner;
  std::uint32_t turn_index = 0;
  std::string session_id;

  bool operator==(const Utterance&) const = default;
};

/// True when `text` has at least one non-whitespace character.
bool has_content(std::string_view text);

struct KnowledgeComponent {
  std::string id;
  std::string label;
  std::string subject;

  bool operator==(const KnowledgeComponent&) const = default;
};

/// Half-open byte range [start, end) into a UTF-8 source text.
struct EvidenceSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string excerpt;

  bool operator==(const EvidenceSpan&) const = default;

  /// Builds a span and fills the excerpt. Throws SpanError when the range is
  /// empty or falls outside `source`.
  static EvidenceSpan within(std::string_view source, long long start, long long end);
  /// Locates the first occurrence of `excerpt` in `source`.
  static EvidenceSpan locate(std::string_view source, std::string_view excerpt);

  bool references(std::string_view source) const;
};

struct AffectiveState {
  double valence = 0.0;    // [-1, 1]
  double intensity = 0.0;  // [0, 1]

  bool operator==(const AffectiveState&) const = default;

  static AffectiveState clamped(double valence, double intensity);
  bool valid() const;
};

enum class MasteryLevel : std::uint8_t { Un = 0, InK = 1, K = 2, L = 3 };

inline constexpr std::array<MasteryLevel, 4> kAllLevels{MasteryLevel::Un, MasteryLevel::InK, MasteryLevel::K,
                                                        MasteryLevel::L};

std::string_view to_string(MasteryLevel level);
MasteryLevel mastery_level_from_string(std::string_view s);

/// Position of a level on the unit interval: Un 0, InK 1/3, K 2/3, L 1.
constexpr double level_score(MasteryLevel level) { return static_cast<double>(level) / 3.0; }

inline constexpr double kMembershipTolerance = 1e-9;

/// Normalised membership over the four ordered mastery levels.
class FuzzyMastery {
 public:
  /// Throws std::invalid_argument unless every component is in [0, 1] and the
  /// components sum to 1 within kMembershipTolerance.
  explicit FuzzyMastery(const std::array<double, 4>& memberships);

  static FuzzyMastery uniform();
  static FuzzyMastery one_hot(MasteryLevel level);
  /// Normalises non-negative weights; all-zero weights give the uniform vector.
  static FuzzyMastery from_weights(const std::array<double, 4>& weights);

  double operator[](MasteryLevel level) const { return m_[static_cast<std::size_t>(level)]; }
  const std::array<double, 4>& values() const { return m_; }

  /// Highest membership; ties resolve toward the lower level.
  MasteryLevel argmax() const;
  double max_abs_difference(const FuzzyMastery& other) const;

  bool operator==(const FuzzyMastery&) const = default;

 private:
  std::array<double, 4> m_;
};

enum class PolarityHint { mastery_positive, mastery_negative };

std::string_view to_string(PolarityHint p);
PolarityHint polarity_from_string(std::string_view s);

struct FeatureTemplate {
  std::string id;
  std::string description;
  PolarityHint polarity_hint = PolarityHint::mastery_positive;

  bool operator==(const FeatureTemplate&) const = default;
};

using TemplateSet = std::vector<FeatureTemplate>;

/// Five-template probe set used when no template file is configured.
const TemplateSet& default_templates();
/// Loads a JSON array of {id, description, polarity_hint}. Throws SchemaError
/// on malformed input or duplicate ids.
TemplateSet load_templates(const std::string& path);
TemplateSet templates_from_json_text(std::string_view text);

struct DiagnosticEncoding {
  KnowledgeComponent kc;
  std::map<std::string, double> activations;  // template id -> [0, 1]
  std::vector<EvidenceSpan> evidence;

  bool operator==(const DiagnosticEncoding&) const = default;
};

struct EvidenceBundle {
  std::vector<DiagnosticEncoding> encodings;
  AffectiveState affect;
  std::vector<EvidenceSpan> affect_evidence;
  std::uint32_t source_turn = 0;

  bool operator==(const EvidenceBundle&) const = default;
};

enum class ControlTarget { encourage, stabilize, calm, challenge };

std::string_view to_string(ControlTarget t);
ControlTarget control_target_from_string(std::string_view s);

struct AffectiveControlVector {
  double emo_cur = 0.0;  // target valence
  double int_cur = 0.0;  // target intensity
  ControlTarget tgt_cur = ControlTarget::stabilize;

  bool operator==(const AffectiveControlVector&) const = default;
};

enum class InstructionalStance { FoundationalScaffolding, GuidedConsolidation, RetrievalPractice, TransferExtension };

std::string_view to_string(InstructionalStance s);
InstructionalStance stance_from_string(std::string_view s);

struct PriorityRecord {
  std::string kc_id;
  double severity = 0.0;
  double confidence = 0.0;
  double richness = 0.0;
  double priority = 0.0;

  bool operator==(const PriorityRecord&) const = default;
};

struct TutorAction {
  std::string response_text;
  std::string focus_kc;
  MasteryLevel focus_state = MasteryLevel::Un;
  InstructionalStance stance = InstructionalStance::FoundationalScaffolding;
  AffectiveControlVector control;

  bool operator==(const TutorAction&) const = default;
};

}  // namespace tutorws
