#include "tutorws/core/trace.hpp"

#include <stdexcept>

#include "tutorws/core/canonical_json.hpp"
#include "tutorws/core/errors.hpp"
#include "tutorws/core/json_reader.hpp"

namespace tutorws {

using nlohmann::json;
using canonical::quantize;

std::string_view to_string(PipelineVariant v) {
  switch (v) {
    case PipelineVariant::full: return "full";
    case PipelineVariant::no_cogval: return "no_cogval";
    case PipelineVariant::no_affect: return "no_affect";
  }
  return "?";
}

PipelineVariant pipeline_variant_from_string(std::string_view s) {
  if (s == "full") return PipelineVariant::full;
  if (s == "no_cogval") return PipelineVariant::no_cogval;
  if (s == "no_affect") return PipelineVariant::no_affect;
  throw std::invalid_argument("unknown pipeline variant '" + std::string(s) + "'");
}

void UsageRecord::add(const std::string& stage, std::uint64_t calls, std::uint64_t in, std::uint64_t out) {
  api_calls += calls;
  tokens_in += in;
  tokens_out += out;
  auto& s = per_stage[stage];
  s.api_calls += calls;
  s.tokens_in += in;
  s.tokens_out += out;
}

void UsageRecord::merge(const UsageRecord& other) {
  for (const auto& [stage, u] : other.per_stage) add(stage, u.api_calls, u.tokens_in, u.tokens_out);
}

bool UsageRecord::consistent() const {
  StageUsage sum;
  for (const auto& [_, u] : per_stage) {
    sum.api_calls += u.api_calls;
    sum.tokens_in += u.tokens_in;
    sum.tokens_out += u.tokens_out;
  }
  return sum.api_calls == api_calls && sum.tokens_in == tokens_in && sum.tokens_out == tokens_out;
}

// ---------------------------------------------------------------------------
// Stage ordering

namespace {

enum class Phase { start, parsed, validating, candidates, integrated, finished };

struct OrderState {
  Phase phase = Phase::start;
  std::size_t first_candidate = 0;
  std::size_t candidates = 0;
  std::size_t accepted = 0;
  std::optional<std::size_t> second_accept;
};

std::optional<OrderViolation> step(OrderState& st, const StageEvent& ev, std::size_t i) {
  auto bad = [i](std::string why) { return std::optional<OrderViolation>(OrderViolation{i, std::move(why)}); };
  switch (ev.index()) {
    case 0:  // parse
      if (st.phase != Phase::start) return bad("parse event must come first and only once");
      st.phase = Phase::parsed;
      return std::nullopt;
    case 1:  // validation
      if (st.phase != Phase::parsed && st.phase != Phase::validating)
        return bad("validation iteration must follow the parse event or another validation iteration");
      st.phase = Phase::validating;
      return std::nullopt;
    case 2: {  // candidate
      if (st.phase != Phase::validating && st.phase != Phase::candidates)
        return bad("candidate event must follow the validation block");
      const auto& c = std::get<CandidateEvent>(ev);
      if (st.phase == Phase::validating) st.first_candidate = i;
      if (c.index != st.candidates) return bad("candidate indices must be dense and ascending");
      st.phase = Phase::candidates;
      ++st.candidates;
      if (c.accepted) {
        ++st.accepted;
        if (st.accepted == 2) st.second_accept = i;
      }
      return std::nullopt;
    }
    case 3:  // integration
      if (st.phase != Phase::validating && st.phase != Phase::candidates)
        return bad("integration event must follow validation or candidate events");
      if (st.candidates > 0 && st.accepted == 0)
        return std::optional<OrderViolation>(OrderViolation{st.first_candidate, "no accepted candidate in pool"});
      if (st.second_accept)
        return std::optional<OrderViolation>(OrderViolation{*st.second_accept, "more than one accepted candidate"});
      st.phase = Phase::integrated;
      return std::nullopt;
    case 4:  // final
      if (st.phase != Phase::integrated) return bad("final action must directly follow the integration event");
      st.phase = Phase::finished;
      return std::nullopt;
  }
  return bad("unknown event");
}

const char* missing_after(Phase p) {
  switch (p) {
    case Phase::start: return "trace is missing its parse event";
    case Phase::parsed: return "trace is missing validation iterations";
    case Phase::validating:
    case Phase::candidates: return "trace is missing its integration event";
    case Phase::integrated: return "trace is missing its final action";
    case Phase::finished: return "";
  }
  return "";
}

}  // namespace

std::optional<OrderViolation> check_stage_order(std::span<const StageEvent> events) {
  OrderState st;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (auto v = step(st, events[i], i)) return v;
  }
  if (st.phase != Phase::finished) return OrderViolation{events.size(), missing_after(st.phase)};
  return std::nullopt;
}

void TraceBuilder::append(StageEvent event) {
  OrderState st;
  events_.push_back(std::move(event));
  // Replaying is cheap at trace sizes and keeps one definition of the rules.
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (auto v = step(st, events_[i], i)) {
      events_.pop_back();
      throw TraceOrderError(v->index, v->reason);
    }
  }
}

ReasoningTrace TraceBuilder::finish(std::string turn_id, PipelineVariant variant, UsageRecord usage) && {
  return ReasoningTrace(std::move(turn_id), variant, std::move(events_), std::move(usage));
}

// ---------------------------------------------------------------------------
// Quantisation

namespace {

void quantize_in_place(std::array<double, 4>& a) {
  for (auto& x : a) x = quantize(x);
}
void quantize_in_place(AffectiveState& s) {
  s.valence = quantize(s.valence);
  s.intensity = quantize(s.intensity);
}

void quantize_event(StageEvent& ev) {
  std::visit(
      [](auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, ParseEvent>) {
          for (auto& enc : e.bundle.encodings) {
            for (auto& [_, v] : enc.activations) v = quantize(v);
          }
          quantize_in_place(e.bundle.affect);
        } else if constexpr (std::is_same_v<T, ValidationIteration>) {
          quantize_in_place(e.membership_before);
          quantize_in_place(e.membership_after);
          quantize_in_place(e.mismatch);
          quantize_in_place(e.effort);
          e.max_change = quantize(e.max_change);
        } else if constexpr (std::is_same_v<T, CandidateEvent>) {
          quantize_in_place(e.predicted_state);
          e.transition_score = quantize(e.transition_score);
        } else if constexpr (std::is_same_v<T, IntegrationEvent>) {
          for (auto& r : e.priority_records) {
            r.severity = quantize(r.severity);
            r.confidence = quantize(r.confidence);
            r.richness = quantize(r.richness);
            r.priority = quantize(r.priority);
          }
        } else if constexpr (std::is_same_v<T, FinalAction>) {
          e.control_vector.emo_cur = quantize(e.control_vector.emo_cur);
          e.control_vector.int_cur = quantize(e.control_vector.int_cur);
        }
      },
      ev);
}

}  // namespace

ReasoningTrace::ReasoningTrace(std::string turn_id, PipelineVariant variant, std::vector<StageEvent> events,
                               UsageRecord usage)
    : turn_id_(std::move(turn_id)), variant_(variant), events_(std::move(events)), usage_(std::move(usage)) {
  if (auto v = check_stage_order(events_)) throw TraceOrderError(v->index, v->reason);
  if (!usage_.consistent()) throw SchemaError("usage.api_calls", "totals do not equal per-stage sums");
  for (auto& ev : events_) quantize_event(ev);
}

// ---------------------------------------------------------------------------
// JSON encoding

json to_json(const AffectiveState& s) { return json{{"valence", s.valence}, {"intensity", s.intensity}}; }

json to_json(const EvidenceSpan& s) { return json{{"start", s.start}, {"end", s.end}, {"excerpt", s.excerpt}}; }

json to_json(const AffectiveControlVector& c) {
  return json{{"emo_cur", c.emo_cur}, {"int_cur", c.int_cur}, {"tgt_cur", std::string(to_string(c.tgt_cur))}};
}

namespace {

json levels_json(const std::array<double, 4>& a) { return json::array({a[0], a[1], a[2], a[3]}); }

json spans_json(const std::vector<EvidenceSpan>& spans) {
  json out = json::array();
  for (const auto& s : spans) out.push_back(to_json(s));
  return out;
}

json event_json(const StageEvent& ev) {
  return std::visit(
      [](const auto& e) -> json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, ParseEvent>) {
          json encodings = json::array();
          for (const auto& enc : e.bundle.encodings) {
            json acts = json::object();
            for (const auto& [k, v] : enc.activations) acts[k] = v;
            encodings.push_back({{"kc", {{"id", enc.kc.id}, {"label", enc.kc.label}, {"subject", enc.kc.subject}}},
                                 {"activations", acts},
                                 {"evidence", spans_json(enc.evidence)}});
          }
          return {{"type", "parse"},
                  {"bundle",
                   {{"encodings", encodings},
                    {"affect", to_json(e.bundle.affect)},
                    {"affect_evidence", spans_json(e.bundle.affect_evidence)},
                    {"source_turn", e.bundle.source_turn}}}};
        } else if constexpr (std::is_same_v<T, ValidationIteration>) {
          return {{"type", "validation"},
                  {"kc_id", e.kc_id},
                  {"iteration", e.iteration},
                  {"grounded", e.grounded},
                  {"membership_before", levels_json(e.membership_before)},
                  {"membership_after", levels_json(e.membership_after)},
                  {"mismatch", levels_json(e.mismatch)},
                  {"effort", levels_json(e.effort)},
                  {"max_change", e.max_change}};
        } else if constexpr (std::is_same_v<T, CandidateEvent>) {
          return {{"type", "candidate"},
                  {"index", e.index},
                  {"draft_text", e.draft_text},
                  {"predicted_state", to_json(e.predicted_state)},
                  {"transition_score", e.transition_score},
                  {"accepted", e.accepted},
                  {"rejection_reason", e.rejection_reason ? json(*e.rejection_reason) : json(nullptr)}};
        } else if constexpr (std::is_same_v<T, IntegrationEvent>) {
          json recs = json::array();
          for (const auto& r : e.priority_records) {
            recs.push_back({{"kc_id", r.kc_id},
                            {"severity", r.severity},
                            {"confidence", r.confidence},
                            {"richness", r.richness},
                            {"priority", r.priority}});
          }
          return {{"type", "integration"},
                  {"priority_records", recs},
                  {"selected_kc", e.selected_kc},
                  {"selected_state", std::string(to_string(e.selected_state))},
                  {"stance", std::string(to_string(e.stance))}};
        } else {
          return {{"type", "final"},
                  {"response_text", e.response_text},
                  {"rationale", e.rationale},
                  {"control_vector", to_json(e.control_vector)}};
        }
      },
      ev);
}

// --- decoding ---------------------------------------------------------------

AffectiveState affect_from(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  AffectiveState s{r.real("valence"), r.real("intensity")};
  r.finish();
  if (!s.valid()) throw SchemaError(path, "affective state outside valid intervals");
  return s;
}

EvidenceSpan span_from(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  EvidenceSpan s{r.count("start"), r.count("end"), r.string("excerpt")};
  r.finish();
  if (s.start >= s.end) throw SchemaError(path, "span must satisfy start < end");
  if (s.excerpt.size() != s.end - s.start) throw SchemaError(path + ".excerpt", "length does not match offsets");
  return s;
}

std::vector<EvidenceSpan> spans_from(ObjectReader& r, std::string_view key) {
  const auto& arr = r.array(key);
  std::vector<EvidenceSpan> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(span_from(arr[i], r.index(key, i)));
  return out;
}

std::array<double, 4> levels_from(ObjectReader& r, std::string_view key) {
  const auto& arr = r.array(key);
  if (arr.size() != 4) throw SchemaError(r.child(key), "expected 4 level values");
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!arr[i].is_number()) throw SchemaError(r.index(key, i), "expected number");
    out[i] = arr[i].get<double>();
  }
  return out;
}

AffectiveControlVector control_from(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  AffectiveControlVector c;
  c.emo_cur = r.real("emo_cur");
  c.int_cur = r.real("int_cur");
  c.tgt_cur = r.enumeration("tgt_cur", control_target_from_string);
  r.finish();
  if (c.emo_cur < -1.0 || c.emo_cur > 1.0 || c.int_cur < 0.0 || c.int_cur > 1.0)
    throw SchemaError(path, "control vector outside valid intervals");
  return c;
}

StageEvent event_from(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  const auto type = r.string("type");
  if (type == "parse") {
    ObjectReader b(r.object("bundle"), r.child("bundle"));
    EvidenceBundle bundle;
    const auto& encs = b.array("encodings");
    for (std::size_t i = 0; i < encs.size(); ++i) {
      ObjectReader e(encs[i], b.index("encodings", i));
      DiagnosticEncoding enc;
      ObjectReader kc(e.object("kc"), e.child("kc"));
      enc.kc = KnowledgeComponent{kc.string("id"), kc.string("label"), kc.string("subject")};
      kc.finish();
      const auto& acts = e.object("activations");
      for (auto it = acts.begin(); it != acts.end(); ++it) {
        if (!it->is_number()) throw SchemaError(e.child("activations") + "." + it.key(), "expected number");
        enc.activations[it.key()] = it->get<double>();
      }
      enc.evidence = spans_from(e, "evidence");
      e.finish();
      bundle.encodings.push_back(std::move(enc));
    }
    bundle.affect = affect_from(b.required("affect"), b.child("affect"));
    bundle.affect_evidence = spans_from(b, "affect_evidence");
    bundle.source_turn = static_cast<std::uint32_t>(b.count("source_turn"));
    b.finish();
    r.finish();
    return ParseEvent{std::move(bundle)};
  }
  if (type == "validation") {
    ValidationIteration v;
    v.kc_id = r.string("kc_id");
    v.iteration = static_cast<std::uint32_t>(r.count("iteration"));
    v.grounded = r.boolean("grounded");
    v.membership_before = levels_from(r, "membership_before");
    v.membership_after = levels_from(r, "membership_after");
    v.mismatch = levels_from(r, "mismatch");
    v.effort = levels_from(r, "effort");
    v.max_change = r.real("max_change");
    r.finish();
    return v;
  }
  if (type == "candidate") {
    CandidateEvent c;
    c.index = static_cast<std::uint32_t>(r.count("index"));
    c.draft_text = r.string("draft_text");
    c.predicted_state = affect_from(r.required("predicted_state"), r.child("predicted_state"));
    c.transition_score = r.real("transition_score");
    c.accepted = r.boolean("accepted");
    const auto& reason = r.required("rejection_reason");
    if (!reason.is_null()) {
      if (!reason.is_string()) throw SchemaError(r.child("rejection_reason"), "expected string or null");
      c.rejection_reason = reason.get<std::string>();
    }
    r.finish();
    return c;
  }
  if (type == "integration") {
    IntegrationEvent e;
    const auto& recs = r.array("priority_records");
    for (std::size_t i = 0; i < recs.size(); ++i) {
      ObjectReader p(recs[i], r.index("priority_records", i));
      e.priority_records.push_back(
          PriorityRecord{p.string("kc_id"), p.real("severity"), p.real("confidence"), p.real("richness"),
                         p.real("priority")});
      p.finish();
    }
    e.selected_kc = r.string("selected_kc");
    e.selected_state = r.enumeration("selected_state", mastery_level_from_string);
    e.stance = r.enumeration("stance", stance_from_string);
    r.finish();
    return e;
  }
  if (type == "final") {
    FinalAction f;
    f.response_text = r.string("response_text");
    f.rationale = r.string("rationale");
    f.control_vector = control_from(r.required("control_vector"), r.child("control_vector"));
    r.finish();
    return f;
  }
  throw SchemaError(r.child("type"), "unknown event type '" + type + "'");
}

}  // namespace

json to_json(const UsageRecord& usage) {
  json per = json::object();
  for (const auto& [stage, u] : usage.per_stage) {
    per[stage] = {{"api_calls", u.api_calls}, {"tokens_in", u.tokens_in}, {"tokens_out", u.tokens_out}};
  }
  return {{"api_calls", usage.api_calls},
          {"tokens_in", usage.tokens_in},
          {"tokens_out", usage.tokens_out},
          {"per_stage", per}};
}

UsageRecord usage_from_json(const json& doc, const std::string& path) {
  ObjectReader r(doc, path);
  UsageRecord u;
  u.api_calls = r.count("api_calls");
  u.tokens_in = r.count("tokens_in");
  u.tokens_out = r.count("tokens_out");
  const auto& per = r.object("per_stage");
  for (auto it = per.begin(); it != per.end(); ++it) {
    ObjectReader s(*it, r.child("per_stage") + "." + it.key());
    u.per_stage[it.key()] = StageUsage{s.count("api_calls"), s.count("tokens_in"), s.count("tokens_out")};
    s.finish();
  }
  r.finish();
  if (!u.consistent()) throw SchemaError(path + ".api_calls", "totals do not equal per-stage sums");
  return u;
}

json to_json(const ReasoningTrace& trace) {
  json events = json::array();
  for (const auto& ev : trace.events()) events.push_back(event_json(ev));
  return {{"version", ReasoningTrace::kVersion},
          {"turn_id", trace.turn_id()},
          {"variant", std::string(to_string(trace.variant()))},
          {"events", events},
          {"usage", to_json(trace.usage())}};
}

ReasoningTrace trace_from_json(const json& doc) {
  ObjectReader r(doc, "");
  const auto version = r.integer("version");
  if (version != ReasoningTrace::kVersion)
    throw SchemaError("version", "unsupported trace version " + std::to_string(version));
  auto turn_id = r.string("turn_id");
  const auto variant = r.enumeration("variant", pipeline_variant_from_string);
  const auto& arr = r.array("events");
  std::vector<StageEvent> events;
  for (std::size_t i = 0; i < arr.size(); ++i) events.push_back(event_from(arr[i], r.index("events", i)));
  auto usage = usage_from_json(r.required("usage"));
  r.finish();
  return ReasoningTrace(std::move(turn_id), variant, std::move(events), std::move(usage));
}

std::string canonical_serialize(const ReasoningTrace& trace) {
  // The constructor already rejected misordered traces; this re-check keeps
  // the serializer's contract independent of how the value was obtained.
  if (auto v = check_stage_order(trace.events())) throw TraceOrderError(v->index, v->reason);
  return canonical::dump(to_json(trace));
}

ReasoningTrace canonical_parse(std::string_view bytes) {
  if (bytes.empty()) throw SchemaError("$", "empty input");
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("malformed JSON: ") + e.what());
  }
  return trace_from_json(doc);
}

json to_json(const TutorAction& a) {
  return {{"response_text", a.response_text},
          {"focus_kc", a.focus_kc},
          {"focus_state", std::string(to_string(a.focus_state))},
          {"stance", std::string(to_string(a.stance))},
          {"control", to_json(a.control)}};
}

TutorAction tutor_action_from_json(const json& doc) {
  ObjectReader r(doc, "action");
  TutorAction a;
  a.response_text = r.string("response_text");
  a.focus_kc = r.string("focus_kc");
  a.focus_state = r.enumeration("focus_state", mastery_level_from_string);
  a.stance = r.enumeration("stance", stance_from_string);
  a.control = control_from(r.required("control"), r.child("control"));
  r.finish();
  return a;
}

std::string canonical_serialize(const TutorAction& action) { return canonical::dump(to_json(action)); }

}  // namespace tutorws
