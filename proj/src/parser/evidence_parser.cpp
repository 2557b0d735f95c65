#include "tutorws/parser/evidence_parser.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

#include "tutorws/core/errors.hpp"

namespace tutorws::parser {

using nlohmann::json;

namespace {

constexpr std::size_t kHistoryWindow = 6;

std::string describe_templates(const TemplateSet& templates) {
  std::ostringstream out;
  for (const auto& t : templates) {
    out << "- " << t.id << " (" << to_string(t.polarity_hint) << "): " << t.description << "\n";
  }
  return out.str();
}

std::string describe_history(std::span<const Utterance> history) {
  if (history.empty()) return "(none)";
  std::ostringstream out;
  const auto from = history.size() > kHistoryWindow ? history.size() - kHistoryWindow : 0;
  for (auto i = from; i < history.size(); ++i) out << to_string(history[i].speaker) << ": " << history[i].text << "\n";
  return out.str();
}

void sort_unique(std::vector<EvidenceSpan>& spans) {
  std::sort(spans.begin(), spans.end(),
            [](const EvidenceSpan& a, const EvidenceSpan& b) { return std::tie(a.start, a.end) < std::tie(b.start, b.end); });
  spans.erase(std::unique(spans.begin(), spans.end()), spans.end());
}

}  // namespace

EvidenceSpan resolve_span(const json& span, std::string_view source) {
  const bool has_start = span.contains("start");
  const bool has_end = span.contains("end");
  const bool has_excerpt = span.contains("excerpt");
  if (has_start) {
    const auto start = span["start"].get<long long>();
    const auto end = has_end ? span["end"].get<long long>() : static_cast<long long>(source.size());
    auto s = EvidenceSpan::within(source, start, end);
    if (has_excerpt && span["excerpt"].get<std::string>() != s.excerpt) throw SpanError(start, end, source.size());
    return s;
  }
  if (has_excerpt) return EvidenceSpan::locate(source, span["excerpt"].get<std::string>());
  throw SchemaError("span", "needs start/end offsets or an excerpt");
}

DiagnosticEncoding encode_diagnostic(const KnowledgeComponent& kc, std::vector<EvidenceSpan> spans,
                                     const TemplateSet& templates, const json& activations) {
  if (spans.empty()) throw std::invalid_argument("diagnostic encoding for '" + kc.id + "' needs evidence spans");
  if (!activations.is_object()) throw SchemaError("activations", "expected object");

  DiagnosticEncoding enc;
  enc.kc = kc;
  for (const auto& t : templates) enc.activations[t.id] = 0.0;
  for (auto it = activations.begin(); it != activations.end(); ++it) {
    auto slot = enc.activations.find(it.key());
    if (slot == enc.activations.end()) throw UnknownTemplateId(it.key());
    if (!it->is_number()) throw SchemaError("activations." + it.key(), "expected number");
    slot->second = std::clamp(it->get<double>(), 0.0, 1.0);
  }
  sort_unique(spans);
  enc.evidence = std::move(spans);
  return enc;
}

std::pair<AffectiveState, std::vector<EvidenceSpan>> extract_affect(const json& payload, std::string_view source) {
  if (payload.is_null() || (payload.is_array() && payload.empty())) return {AffectiveState{}, {}};
  if (!payload.is_array()) throw SchemaError("affect", "expected array or null");

  const json* best = nullptr;
  AffectiveState best_state;
  for (const auto& triplet : payload) {
    const auto state = AffectiveState::clamped(triplet.at("valence").get<double>(), triplet.at("intensity").get<double>());
    if (!best || state.intensity > best_state.intensity ||
        (state.intensity == best_state.intensity && state.valence < best_state.valence)) {
      best = &triplet;
      best_state = state;
    }
  }
  std::vector<EvidenceSpan> spans;
  if (auto it = best->find("spans"); it != best->end()) {
    for (const auto& s : *it) spans.push_back(resolve_span(s, source));
  }
  sort_unique(spans);
  return {best_state, std::move(spans)};
}

std::vector<DiagnosticEncoding> merge_encodings(std::vector<DiagnosticEncoding> encodings) {
  std::map<std::string, DiagnosticEncoding> by_id;
  for (auto& enc : encodings) {
    auto [it, inserted] = by_id.try_emplace(enc.kc.id, enc);
    if (inserted) continue;
    auto& merged = it->second;
    for (const auto& [k, v] : enc.activations) {
      auto& slot = merged.activations[k];
      slot = std::max(slot, v);
    }
    merged.evidence.insert(merged.evidence.end(), enc.evidence.begin(), enc.evidence.end());
    sort_unique(merged.evidence);
    if (merged.kc.label.empty()) merged.kc.label = enc.kc.label;
    if (merged.kc.subject.empty()) merged.kc.subject = enc.kc.subject;
  }
  std::vector<DiagnosticEncoding> out;
  out.reserve(by_id.size());
  for (auto& [_, enc] : by_id) out.push_back(std::move(enc));
  return out;
}

EvidenceBundle parse_utterance(const Utterance& utterance, std::span<const Utterance> history,
                               const TemplateSet& templates, const gateway::StageContext& ctx) {
  if (utterance.speaker != Speaker::learner) throw std::invalid_argument("only learner utterances are parsed");
  if (templates.empty()) throw std::invalid_argument("feature template set is empty");
  if (!has_content(utterance.text)) throw EmptyUtterance();

  const auto response = ctx.call(gateway::Stage::parse, "parse", "parse",
                                 {{"utterance", utterance.text},
                                  {"history", describe_history(history)},
                                  {"templates", describe_templates(templates)}});
  const auto& payload = response.payload;

  std::vector<DiagnosticEncoding> encodings;
  for (const auto& kc_json : payload.at("kcs")) {
    KnowledgeComponent kc{kc_json.at("id").get<std::string>(), kc_json.at("label").get<std::string>(),
                          kc_json.value("subject", std::string{})};
    std::vector<EvidenceSpan> spans;
    for (const auto& s : kc_json.at("spans")) spans.push_back(resolve_span(s, utterance.text));
    encodings.push_back(encode_diagnostic(kc, std::move(spans), templates, kc_json.at("activations")));
  }

  EvidenceBundle bundle;
  bundle.encodings = merge_encodings(std::move(encodings));
  std::tie(bundle.affect, bundle.affect_evidence) = extract_affect(payload.at("affect"), utterance.text);
  bundle.source_turn = utterance.turn_index;
  return bundle;
}

}  // namespace tutorws::parser
