#include "tutorws/service/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "tutorws/core/errors.hpp"

namespace tutorws::service {

using nlohmann::json;

namespace {

const std::set<std::string, std::less<>> kSessionKeys{
    "epsilon",         "max_validation_iters", "eta",         "pool_size",      "lambda",        "weight_severity",
    "weight_confidence", "weight_evidence",    "variant",     "fixture_key",    "templates_path"};

double number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(key, "expected a finite number");
  return d;
}

long long integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
  return v.get<long long>();
}

std::string text(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError(key, "expected a string");
  return v.get<std::string>();
}

}  // namespace

SessionConfig SessionConfig::from_json(const json& doc, SessionConfig c) {
  if (!doc.is_object()) throw ConfigError("$", "config must be a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& key = it.key();
    const json& v = *it;
    if (key == "backend") {
      c.backend = text(v, key);
    } else if (key == "fixture_dir") {
      c.fixture_dir = text(v, key);
    } else if (key == "fixture_key") {
      if (v.is_null()) c.fixture_key.reset();
      else c.fixture_key = text(v, key);
    } else if (key == "endpoint") {
      c.http.endpoint = text(v, key);
    } else if (key == "model") {
      c.http.model = text(v, key);
    } else if (key == "temperature") {
      c.http.temperature = number(v, key);
    } else if (key == "timeout_s") {
      c.http.timeout = std::chrono::seconds(integer(v, key));
    } else if (key == "prompts_dir") {
      c.prompts_dir = text(v, key);
    } else if (key == "templates_path") {
      c.templates_path = text(v, key);
      c.pipeline.templates = c.templates_path.empty() ? default_templates() : load_templates(c.templates_path.string());
    } else if (key == "max_inflight") {
      c.max_inflight = integer(v, key);
    } else if (key == "max_attempts") {
      c.max_attempts = static_cast<int>(integer(v, key));
    } else if (key == "mock_latency_ms") {
      c.mock_latency_ms = static_cast<int>(integer(v, key));
    } else if (key == "epsilon") {
      c.pipeline.validation.epsilon = number(v, key);
    } else if (key == "max_validation_iters") {
      c.pipeline.validation.max_iters = static_cast<int>(integer(v, key));
    } else if (key == "eta") {
      c.pipeline.validation.eta = number(v, key);
    } else if (key == "pool_size") {
      c.pipeline.affect.pool_size = static_cast<int>(integer(v, key));
    } else if (key == "lambda") {
      c.pipeline.affect.lambda = number(v, key);
    } else if (key == "weight_severity") {
      c.pipeline.weights.severity = number(v, key);
    } else if (key == "weight_confidence") {
      c.pipeline.weights.confidence = number(v, key);
    } else if (key == "weight_evidence") {
      c.pipeline.weights.evidence = number(v, key);
    } else if (key == "variant") {
      try {
        c.pipeline.variant = pipeline_variant_from_string(text(v, key));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
      }
    } else {
      throw ConfigError(key, "unknown config key");
    }
  }
  c.check();
  return c;
}

SessionConfig SessionConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("$", "cannot read config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("$", std::string("config file is not valid JSON: ") + e.what());
  }
  // Relative paths in a config file are relative to the file itself.
  if (doc.is_object()) {
    for (const char* key : {"fixture_dir", "prompts_dir", "templates_path"}) {
      auto it = doc.find(key);
      if (it == doc.end() || !it->is_string() || it->get<std::string>().empty()) continue;
      const std::filesystem::path p = it->get<std::string>();
      if (p.is_relative()) *it = (path.parent_path() / p).lexically_normal().string();
    }
  }
  return from_json(doc);
}

SessionConfig SessionConfig::with_overrides(const json& overrides) const {
  if (overrides.is_null()) return *this;
  if (!overrides.is_object()) throw ConfigError("$", "overrides must be a JSON object");
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    if (!kSessionKeys.contains(it.key())) throw ConfigError(it.key(), "cannot be set per session");
  }
  return from_json(overrides, *this);
}

void SessionConfig::check() const {
  if (backend != "mock" && backend != "http") throw ConfigError("backend", "must be \"mock\" or \"http\"");
  if (max_inflight < 1 || max_inflight > 1024) throw ConfigError("max_inflight", "must be in [1, 1024]");
  if (max_attempts < 1) throw ConfigError("max_attempts", "must be >= 1");
  if (mock_latency_ms < 0) throw ConfigError("mock_latency_ms", "must be >= 0");
  if (http.timeout.count() < 1) throw ConfigError("timeout_s", "must be >= 1");
  if (!(http.temperature >= 0.0 && http.temperature <= 2.0)) throw ConfigError("temperature", "must be in [0, 2]");
  pipeline.check();
}

json SessionConfig::to_json() const {
  json doc{{"backend", backend},
           {"fixture_dir", fixture_dir.string()},
           {"fixture_key", fixture_key ? json(*fixture_key) : json(nullptr)},
           {"endpoint", http.endpoint},
           {"model", http.model},
           {"temperature", http.temperature},
           {"timeout_s", http.timeout.count()},
           {"prompts_dir", prompts_dir.string()},
           {"templates_path", templates_path.string()},
           {"max_inflight", max_inflight},
           {"max_attempts", max_attempts},
           {"mock_latency_ms", mock_latency_ms},
           {"epsilon", pipeline.validation.epsilon},
           {"max_validation_iters", pipeline.validation.max_iters},
           {"eta", pipeline.validation.eta},
           {"pool_size", pipeline.affect.pool_size},
           {"lambda", pipeline.affect.lambda},
           {"weight_severity", pipeline.weights.severity},
           {"weight_confidence", pipeline.weights.confidence},
           {"weight_evidence", pipeline.weights.evidence},
           {"variant", std::string(tutorws::to_string(pipeline.variant))}};
  return doc;
}

std::shared_ptr<gateway::Backend> make_backend(const SessionConfig& config) {
  if (config.backend == "mock") {
    return std::make_shared<gateway::MockBackend>(config.fixture_dir,
                                                  std::chrono::milliseconds(config.mock_latency_ms));
  }
  auto options = config.http;
  options.apply_env();
  return std::make_shared<gateway::HttpBackend>(options);
}

std::shared_ptr<gateway::Gateway> make_gateway(const SessionConfig& config) {
  return std::make_shared<gateway::Gateway>(make_backend(config),
                                            gateway::GatewayOptions{config.max_attempts, config.max_inflight});
}

gateway::PromptLibrary make_prompts(const SessionConfig& config) {
  return config.prompts_dir.empty() ? gateway::PromptLibrary::defaults()
                                    : gateway::PromptLibrary::with_overrides(config.prompts_dir);
}

}  // namespace tutorws::service
