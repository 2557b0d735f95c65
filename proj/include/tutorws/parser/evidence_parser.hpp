#pragma once

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tutorws/core/types.hpp"
#include "tutorws/gateway/stage_context.hpp"

namespace tutorws::parser {

/// Decomposes a learner utterance into per-KC diagnostic encodings and a
/// single affective state. Consumes exactly one gateway call (plus retries).
/// Throws EmptyUtterance, GatewayFailure, SpanError, UnknownTemplateId.
EvidenceBundle parse_utterance(const Utterance& utterance, std::span<const Utterance> history,
                               const TemplateSet& templates, const gateway::StageContext& ctx);

/// Builds one encoding from the gateway's activation object: values are
/// clamped into [0, 1] and templates the payload omits are filled with 0.
DiagnosticEncoding encode_diagnostic(const KnowledgeComponent& kc, std::vector<EvidenceSpan> spans,
                                     const TemplateSet& templates, const nlohmann::json& activations);

/// `payload` is the "affect" member: null or an empty array means no cue.
/// Several triplets collapse to the most intense one (ties: most negative).
std::pair<AffectiveState, std::vector<EvidenceSpan>> extract_affect(const nlohmann::json& payload,
                                                                    std::string_view source);

/// Resolves a gateway span object ({start,end}, {excerpt}, {start} to the end
/// of text, or offsets plus a matching excerpt) against `source`.
EvidenceSpan resolve_span(const nlohmann::json& span, std::string_view source);

/// Merges encodings that share a KC id (span union, element-wise max) and
/// returns them ordered by KC id.
std::vector<DiagnosticEncoding> merge_encodings(std::vector<DiagnosticEncoding> encodings);

}  // namespace tutorws::parser
