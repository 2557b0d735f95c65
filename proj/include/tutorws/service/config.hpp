#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "tutorws/gateway/gateway.hpp"
#include "tutorws/gateway/prompts.hpp"
#include "tutorws/service/pipeline.hpp"

namespace tutorws::service {

/// Engine configuration. Keys in the JSON form:
///   backend ("mock" | "http"), fixture_dir, fixture_key, endpoint, model,
///   temperature, timeout_s, prompts_dir, templates_path, max_inflight,
///   max_attempts, mock_latency_ms, epsilon, max_validation_iters, eta,
///   pool_size, lambda, weight_severity, weight_confidence, weight_evidence,
///   variant.
struct SessionConfig {
  std::string backend = "mock";
  std::filesystem::path fixture_dir = "fixtures/mock";
  std::optional<std::string> fixture_key;
  gateway::HttpBackendOptions http;
  std::filesystem::path prompts_dir;
  std::filesystem::path templates_path;
  std::ptrdiff_t max_inflight = 8;
  int max_attempts = 3;
  int mock_latency_ms = 0;
  PipelineConfig pipeline;

  /// Copy of `base` with the keys in `doc` applied. Unknown keys, wrong types
  /// and out-of-range values raise ConfigError naming the key.
  static SessionConfig from_json(const nlohmann::json& doc, SessionConfig base);
  static SessionConfig from_json(const nlohmann::json& doc) { return from_json(doc, SessionConfig{}); }
  static SessionConfig load(const std::filesystem::path& path);

  /// Like from_json, restricted to the keys a single session may change:
  /// pipeline parameters, variant, fixture_key and templates_path.
  SessionConfig with_overrides(const nlohmann::json& overrides) const;

  void check() const;
  /// Every key except secrets, so the effective config can be logged.
  nlohmann::json to_json() const;
};

std::shared_ptr<gateway::Backend> make_backend(const SessionConfig& config);
std::shared_ptr<gateway::Gateway> make_gateway(const SessionConfig& config);
gateway::PromptLibrary make_prompts(const SessionConfig& config);

}  // namespace tutorws::service
