#include <cstdlib>
#include <regex>

#include <httplib.h>

#include "tutorws/gateway/gateway.hpp"
#include "tutorws/gateway/schema.hpp"

namespace tutorws::gateway {

using nlohmann::json;

void HttpBackendOptions::apply_env() {
  if (const char* v = std::getenv("TUTORWS_LLM_ENDPOINT"); v && *v) endpoint = v;
  if (const char* v = std::getenv("TUTORWS_LLM_MODEL"); v && *v) model = v;
  if (const char* v = std::getenv("TUTORWS_LLM_API_KEY"); v && *v) api_key = v;
}

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(options_.endpoint, m, url)) {
    throw ConfigError("endpoint", "expected http(s)://host[:port]/path, got '" + options_.endpoint + "'");
  }
  base_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/";
}

RawCompletion HttpBackend::send(const GatewayRequest& req, const std::string& prompt, CallScope&) {
  const std::string system =
      "You are one component of a tutoring engine. Reply with a single JSON object and nothing else. "
      "The object must validate against this JSON Schema:\n" +
      response_schema(req.schema_id).document().dump();

  json body{{"model", options_.model},
            {"temperature", options_.temperature},
            {"response_format", {{"type", "json_object"}}},
            {"messages", json::array({{{"role", "system"}, {"content", system}}, {{"role", "user"}, {"content", prompt}}})}};

  httplib::Client client(base_);
  client.set_read_timeout(options_.timeout);
  client.set_write_timeout(options_.timeout);
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) throw TransportError("HTTP request failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300));
  }

  json doc;
  try {
    doc = json::parse(res->body);
  } catch (const json::exception& e) {
    throw TransportError(std::string("response body is not JSON: ") + e.what());
  }
  RawCompletion out;
  try {
    out.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw TransportError("response has no choices[0].message.content");
  }
  const auto usage = doc.find("usage");
  if (usage != doc.end() && usage->is_object()) {
    out.tokens_in = usage->value("prompt_tokens", std::uint64_t{0});
    out.tokens_out = usage->value("completion_tokens", std::uint64_t{0});
  } else {
    out.tokens_in = (system.size() + prompt.size()) / 4;
    out.tokens_out = out.text.size() / 4;
  }
  return out;
}

}  // namespace tutorws::gateway
