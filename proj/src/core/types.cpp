#include "tutorws/core/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tutorws/core/errors.hpp"

namespace tutorws {

namespace {

template <typename E, std::size_t N>
E enum_from(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table, const char* what) {
  for (const auto& [value, name] : table) {
    if (name == s) return value;
  }
  throw std::invalid_argument(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

template <typename E, std::size_t N>
std::string_view enum_name(E e, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [value, name] : table) {
    if (value == e) return name;
  }
  return "?";
}

constexpr std::array<std::pair<Speaker, std::string_view>, 2> kSpeakers{{
    {Speaker::learner, "learner"},
    {Speaker::tutor, "tutor"},
}};

constexpr std::array<std::pair<MasteryLevel, std::string_view>, 4> kLevels{{
    {MasteryLevel::Un, "Un"},
    {MasteryLevel::InK, "InK"},
    {MasteryLevel::K, "K"},
    {MasteryLevel::L, "L"},
}};

constexpr std::array<std::pair<PolarityHint, std::string_view>, 2> kPolarities{{
    {PolarityHint::mastery_positive, "mastery_positive"},
    {PolarityHint::mastery_negative, "mastery_negative"},
}};

constexpr std::array<std::pair<ControlTarget, std::string_view>, 4> kTargets{{
    {ControlTarget::encourage, "encourage"},
    {ControlTarget::stabilize, "stabilize"},
    {ControlTarget::calm, "calm"},
    {ControlTarget::challenge, "challenge"},
}};

constexpr std::array<std::pair<InstructionalStance, std::string_view>, 4> kStances{{
    {InstructionalStance::FoundationalScaffolding, "FoundationalScaffolding"},
    {InstructionalStance::GuidedConsolidation, "GuidedConsolidation"},
    {InstructionalStance::RetrievalPractice, "RetrievalPractice"},
    {InstructionalStance::TransferExtension, "TransferExtension"},
}};

}  // namespace

std::string_view to_string(Speaker s) { return enum_name(s, kSpeakers); }
Speaker speaker_from_string(std::string_view s) { return enum_from(s, kSpeakers, "speaker"); }
std::string_view to_string(MasteryLevel level) { return enum_name(level, kLevels); }
MasteryLevel mastery_level_from_string(std::string_view s) { return enum_from(s, kLevels, "mastery level"); }
std::string_view to_string(PolarityHint p) { return enum_name(p, kPolarities); }
PolarityHint polarity_from_string(std::string_view s) { return enum_from(s, kPolarities, "polarity hint"); }
std::string_view to_string(ControlTarget t) { return enum_name(t, kTargets); }
ControlTarget control_target_from_string(std::string_view s) { return enum_from(s, kTargets, "control target"); }
std::string_view to_string(InstructionalStance s) { return enum_name(s, kStances); }
InstructionalStance stance_from_string(std::string_view s) { return enum_from(s, kStances, "instructional stance"); }

bool has_content(std::string_view text) {
  return std::any_of(text.begin(), text.end(), [](unsigned char c) { return !std::isspace(c); });
}

EvidenceSpan EvidenceSpan::within(std::string_view source, long long start, long long end) {
  if (start < 0 || end <= start || static_cast<unsigned long long>(end) > source.size()) {
    throw SpanError(start, end, source.size());
  }
  const auto s = static_cast<std::size_t>(start);
  const auto e = static_cast<std::size_t>(end);
  return EvidenceSpan{s, e, std::string(source.substr(s, e - s))};
}

EvidenceSpan EvidenceSpan::locate(std::string_view source, std::string_view excerpt) {
  const auto pos = excerpt.empty() ? std::string_view::npos : source.find(excerpt);
  if (pos == std::string_view::npos) throw SpanError(std::string(excerpt));
  return EvidenceSpan{pos, pos + excerpt.size(), std::string(excerpt)};
}

bool EvidenceSpan::references(std::string_view source) const {
  return start < end && end <= source.size() && source.substr(start, end - start) == excerpt;
}

AffectiveState AffectiveState::clamped(double valence, double intensity) {
  return AffectiveState{std::clamp(valence, -1.0, 1.0), std::clamp(intensity, 0.0, 1.0)};
}

bool AffectiveState::valid() const {
  return valence >= -1.0 && valence <= 1.0 && intensity >= 0.0 && intensity <= 1.0;
}

FuzzyMastery::FuzzyMastery(const std::array<double, 4>& memberships) : m_(memberships) {
  double sum = 0.0;
  for (double v : m_) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("membership component outside [0, 1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kMembershipTolerance) throw std::invalid_argument("memberships do not sum to 1");
}

FuzzyMastery FuzzyMastery::uniform() { return FuzzyMastery({0.25, 0.25, 0.25, 0.25}); }

FuzzyMastery FuzzyMastery::one_hot(MasteryLevel level) {
  std::array<double, 4> m{};
  m[static_cast<std::size_t>(level)] = 1.0;
  return FuzzyMastery(m);
}

FuzzyMastery FuzzyMastery::from_weights(const std::array<double, 4>& weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("membership weight must be finite and >= 0");
    sum += w;
  }
  if (sum <= 0.0) return uniform();
  std::array<double, 4> m{};
  for (std::size_t i = 0; i < 4; ++i) m[i] = std::clamp(weights[i] / sum, 0.0, 1.0);
  return FuzzyMastery(m);
}

MasteryLevel FuzzyMastery::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < 4; ++i) {
    if (m_[i] > m_[best]) best = i;
  }
  return static_cast<MasteryLevel>(best);
}

double FuzzyMastery::max_abs_difference(const FuzzyMastery& other) const {
  double d = 0.0;
  for (std::size_t i = 0; i < 4; ++i) d = std::max(d, std::abs(m_[i] - other.m_[i]));
  return d;
}

const TemplateSet& default_templates() {
  static const TemplateSet set{
      {"states_causal_mechanism", "learner states a causal mechanism or explains why something happens",
       PolarityHint::mastery_positive},
      {"correct_terminology_use", "learner uses domain terminology correctly", PolarityHint::mastery_positive},
      {"self_reported_gap", "learner reports not knowing, forgetting, or being unable to do something",
       PolarityHint::mastery_negative},
      {"fragmented_enumeration", "learner lists isolated facts without connecting structure",
       PolarityHint::mastery_negative},
      {"misconception_marker", "learner asserts an incorrect belief about the concept",
       PolarityHint::mastery_negative},
  };
  return set;
}

TemplateSet templates_from_json_text(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("templates", e.what());
  }
  if (!doc.is_array() || doc.empty()) throw SchemaError("templates", "expected a non-empty array");
  TemplateSet out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& t = doc[i];
    const std::string path = "templates[" + std::to_string(i) + "]";
    if (!t.is_object()) throw SchemaError(path, "expected object");
    for (const char* key : {"id", "description", "polarity_hint"}) {
      if (!t.contains(key) || !t[key].is_string()) throw SchemaError(path + "." + key, "missing or not a string");
    }
    FeatureTemplate ft;
    ft.id = t["id"].get<std::string>();
    ft.description = t["description"].get<std::string>();
    try {
      ft.polarity_hint = polarity_from_string(t["polarity_hint"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw SchemaError(path + ".polarity_hint", e.what());
    }
    if (ft.id.empty()) throw SchemaError(path + ".id", "empty template id");
    if (!seen.insert(ft.id).second) throw SchemaError(path + ".id", "duplicate template id '" + ft.id + "'");
    out.push_back(std::move(ft));
  }
  return out;
}

TemplateSet load_templates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("templates_path", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return templates_from_json_text(ss.str());
}

}  // namespace tutorws
