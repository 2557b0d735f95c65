#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tutorws/core/errors.hpp"
#include "tutorws/core/trace.hpp"

namespace tutorws::gateway {

enum class Stage { parse, validate, draft, predict_affect, final, judge, refine_step };

std::string_view to_string(Stage s);

struct GatewayRequest {
  Stage stage = Stage::parse;
  std::string prompt;
  std::string schema_id;
  /// Routes the mock backend. Dot-separated keys fall back to their parent
  /// scope ("a.b" -> "a") and finally to "default".
  std::optional<std::string> fixture_key;
};

struct GatewayResponse {
  nlohmann::json payload;
  std::uint64_t tokens_in = 0;
  std::uint64_t tokens_out = 0;
  int attempts = 1;
};

struct CallLogEntry {
  Stage stage;
  std::string schema_id;
  int attempt;
  bool ok;
};

/// Per-turn accounting. Every backend attempt, failed or not, lands here.
/// One scope belongs to one turn (or one evaluation instance) and is not
/// shared between threads.
struct CallScope {
  UsageRecord usage;
  std::vector<CallLogEntry> log;
  std::map<std::string, std::size_t> mock_cursors;
};

struct RawCompletion {
  std::string text;
  std::uint64_t tokens_in = 0;
  std::uint64_t tokens_out = 0;
};

/// Transport-level failure of one attempt (connection refused, HTTP 5xx...).
class TransportError : public Error {
 public:
  using Error::Error;
};

class Backend {
 public:
  virtual ~Backend() = default;
  /// `prompt` is the request prompt plus any repair instruction for retries.
  virtual RawCompletion send(const GatewayRequest& req, const std::string& prompt, CallScope& scope) = 0;
};

/// Scripted backend reading `<stage>__<fixture_key>.json` files.
///
/// A fixture holds either a payload object returned for every call, or
/// {"script": [entry, ...]} consumed one entry per call within a CallScope
/// (the last entry repeats). An entry of the form {"raw": "..."} is returned
/// verbatim, which lets fixtures emit malformed output. Token counts are
/// character counts divided by 4.
class MockBackend : public Backend {
 public:
  explicit MockBackend(std::filesystem::path fixture_dir,
                       std::chrono::milliseconds latency = std::chrono::milliseconds(0));

  RawCompletion send(const GatewayRequest& req, const std::string& prompt, CallScope& scope) override;

  const std::filesystem::path& fixture_dir() const { return dir_; }

 private:
  std::pair<std::string, const nlohmann::json*> resolve(Stage stage, const std::string& key);

  std::filesystem::path dir_;
  std::chrono::milliseconds latency_;
  std::mutex mutex_;
  std::map<std::string, std::optional<nlohmann::json>> cache_;
};

struct HttpBackendOptions {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o-mini";
  std::string api_key;
  double temperature = 0.0;
  std::chrono::seconds timeout{120};

  /// Applies TUTORWS_LLM_ENDPOINT, TUTORWS_LLM_MODEL and TUTORWS_LLM_API_KEY
  /// when set.
  void apply_env();
};

/// Chat-completions style JSON-over-HTTP backend.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions options);
  RawCompletion send(const GatewayRequest& req, const std::string& prompt, CallScope& scope) override;

 private:
  HttpBackendOptions options_;
  std::string base_;  // scheme://host[:port]
  std::string path_;
};

struct GatewayOptions {
  int max_attempts = 3;
  std::ptrdiff_t max_inflight = 8;
};

/// Single chokepoint for model inference: schema-checked structured output,
/// retry with a repair instruction, bounded concurrency, usage accounting.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<Backend> backend, GatewayOptions options = {});

  /// Throws GatewayFailure after max_attempts schema-invalid or failed
  /// attempts, UnknownFixtureKey from the mock, std::out_of_range for an
  /// unknown schema id.
  GatewayResponse complete(const GatewayRequest& req, CallScope& scope);

  Backend& backend() { return *backend_; }

 private:
  std::shared_ptr<Backend> backend_;
  GatewayOptions options_;
  std::counting_semaphore<1024> inflight_;
};

/// Total API calls a turn consumed, retries included.
std::uint64_t turn_budget(const ReasoningTrace& trace);

/// Ratio of total tokens (in + out). Throws std::invalid_argument when the
/// baseline has no tokens.
double cost_multiplier(const UsageRecord& usage_slow, const UsageRecord& usage_baseline);

/// Extracts the first JSON object from model text, tolerating code fences.
nlohmann::json parse_model_json(std::string_view text);

}  // namespace tutorws::gateway
