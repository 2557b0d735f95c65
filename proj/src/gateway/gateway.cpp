#include "tutorws/gateway/gateway.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include "tutorws/gateway/schema.hpp"

namespace tutorws::gateway {

using nlohmann::json;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::parse: return "parse";
    case Stage::validate: return "validate";
    case Stage::draft: return "draft";
    case Stage::predict_affect: return "predict_affect";
    case Stage::final: return "final";
    case Stage::judge: return "judge";
    case Stage::refine_step: return "refine_step";
  }
  return "?";
}

json parse_model_json(std::string_view text) {
  auto first = text.find('{');
  auto last = text.rfind('}');
  if (first == std::string_view::npos || last == std::string_view::npos || last < first) {
    throw SchemaError("$", "no JSON object in model output");
  }
  return json::parse(text.substr(first, last - first + 1));
}

// ---------------------------------------------------------------------------

MockBackend::MockBackend(std::filesystem::path fixture_dir, std::chrono::milliseconds latency)
    : dir_(std::move(fixture_dir)), latency_(latency) {}

std::pair<std::string, const json*> MockBackend::resolve(Stage stage, const std::string& key) {
  std::vector<std::string> chain;
  for (std::string k = key;;) {
    chain.push_back(k);
    const auto dot = k.rfind('.');
    if (dot == std::string::npos) break;
    k.resize(dot);
  }
  if (chain.back() != "default") chain.push_back("default");

  std::lock_guard lock(mutex_);
  for (const auto& k : chain) {
    const std::string name = std::string(to_string(stage)) + "__" + k + ".json";
    auto it = cache_.find(name);
    if (it == cache_.end()) {
      std::optional<json> loaded;
      std::ifstream in(dir_ / name);
      if (in) {
        std::stringstream ss;
        ss << in.rdbuf();
        loaded = json::parse(ss.str());
      }
      it = cache_.emplace(name, std::move(loaded)).first;
    }
    // Entries are never erased, so the pointer stays valid after unlocking.
    if (it->second) return {name, &*it->second};
  }
  throw UnknownFixtureKey(std::string(to_string(stage)), key);
}

RawCompletion MockBackend::send(const GatewayRequest& req, const std::string& prompt, CallScope& scope) {
  const auto [name, fixture] = resolve(req.stage, req.fixture_key.value_or("default"));
  const json* entry = fixture;
  if (fixture->is_object() && fixture->contains("script")) {
    const auto& script = (*fixture)["script"];
    auto& cursor = scope.mock_cursors[name];
    entry = &script[std::min(cursor, script.size() - 1)];
    ++cursor;
  }
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);

  RawCompletion out;
  if (entry->is_object() && entry->size() == 1 && entry->contains("raw")) {
    out.text = (*entry)["raw"].get<std::string>();
  } else {
    out.text = entry->dump();
  }
  out.tokens_in = prompt.size() / 4;
  out.tokens_out = out.text.size() / 4;
  return out;
}

// ---------------------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(options), inflight_(std::clamp<std::ptrdiff_t>(options.max_inflight, 1, 1024)) {
  if (!backend_) throw std::invalid_argument("gateway requires a backend");
  if (options_.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
}

GatewayResponse Gateway::complete(const GatewayRequest& req, CallScope& scope) {
  const auto& schema = response_schema(req.schema_id);
  const std::string stage(to_string(req.stage));
  std::string prompt = req.prompt;
  std::string last_error;

  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    RawCompletion raw;
    bool transport_ok = true;
    inflight_.acquire();
    try {
      raw = backend_->send(req, prompt, scope);
    } catch (const TransportError& e) {
      transport_ok = false;
      last_error = e.what();
      raw.tokens_in = prompt.size() / 4;
    } catch (...) {
      inflight_.release();
      throw;
    }
    inflight_.release();
    scope.usage.add(stage, 1, raw.tokens_in, raw.tokens_out);

    if (transport_ok) {
      try {
        auto payload = parse_model_json(raw.text);
        if (auto violation = schema.first_violation(payload)) {
          last_error = "schema '" + req.schema_id + "' violated: " + *violation;
        } else {
          scope.log.push_back({req.stage, req.schema_id, attempt, true});
          return GatewayResponse{std::move(payload), raw.tokens_in, raw.tokens_out, attempt};
        }
      } catch (const json::exception& e) {
        last_error = std::string("output is not valid JSON: ") + e.what();
      } catch (const SchemaError& e) {
        last_error = e.what();
      }
    }
    scope.log.push_back({req.stage, req.schema_id, attempt, false});
    prompt = req.prompt + "\n\nYour previous answer was rejected (" + last_error +
             "). Reply again with only a JSON object that satisfies the required schema.";
  }
  throw GatewayFailure(stage, options_.max_attempts, last_error);
}

std::uint64_t turn_budget(const ReasoningTrace& trace) { return trace.usage().api_calls; }

double cost_multiplier(const UsageRecord& usage_slow, const UsageRecord& usage_baseline) {
  if (usage_baseline.total_tokens() == 0) throw std::invalid_argument("baseline usage has zero tokens");
  return static_cast<double>(usage_slow.total_tokens()) / static_cast<double>(usage_baseline.total_tokens());
}

}  // namespace tutorws::gateway
