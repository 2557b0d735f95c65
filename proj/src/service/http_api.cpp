#include "tutorws/service/http_api.hpp"

#include <httplib.h>

#include "tutorws/core/errors.hpp"
#include "tutorws/core/trace.hpp"
#include "tutorws/service/session_service.hpp"

namespace tutorws::service {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const std::exception& e) {
      auto [status, body] = error_response(e);
      reply(res, status, body);
    }
  };
}

json request_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw SchemaError("$", std::string("request body is not valid JSON: ") + e.what());
  }
}

}  // namespace

std::pair<int, json> error_response(const std::exception& e) {
  json body{{"message", e.what()}};
  if (const auto* x = dynamic_cast<const ConfigError*>(&e)) {
    body["error"] = "invalid_config";
    body["field"] = x->field();
    return {422, body};
  }
  if (const auto* x = dynamic_cast<const SchemaError*>(&e)) {
    body["error"] = "invalid_request";
    body["field"] = x->field();
    return {422, body};
  }
  if (dynamic_cast<const EmptyUtterance*>(&e)) {
    body["error"] = "empty_utterance";
    body["field"] = "text";
    return {422, body};
  }
  if (dynamic_cast<const EmptyContext*>(&e)) {
    body["error"] = "no_knowledge_components";
    return {422, body};
  }
  if (dynamic_cast<const NotFound*>(&e)) {
    body["error"] = "not_found";
    return {404, body};
  }
  if (dynamic_cast<const SessionBusy*>(&e)) {
    body["error"] = "session_busy";
    return {409, body};
  }
  // Replies that passed the schema but cannot be used.
  if (dynamic_cast<const SpanError*>(&e) || dynamic_cast<const UnknownTemplateId*>(&e) ||
      dynamic_cast<const PoolUnderfull*>(&e) || dynamic_cast<const ArityMismatch*>(&e) ||
      dynamic_cast<const EmptyResponse*>(&e)) {
    body["error"] = "invalid_model_output";
    return {502, body};
  }
  if (const auto* x = dynamic_cast<const GatewayFailure*>(&e)) {
    body["error"] = "gateway_failure";
    body["stage"] = x->stage();
    return {502, body};
  }
  if (const auto* x = dynamic_cast<const UnknownFixtureKey*>(&e)) {
    body["error"] = "gateway_failure";
    body["stage"] = x->stage();
    return {502, body};
  }
  body["error"] = "internal";
  return {500, body};
}

void register_routes(httplib::Server& server, SessionService& service) {
  server.Get("/v1/health", guarded([&service](const httplib::Request&, httplib::Response& res) {
               reply(res, 200, json{{"status", "ok"}, {"sessions", service.session_count()}});
             }));

  server.Post("/v1/sessions", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                const auto body = request_body(req);
                const auto overrides = body.contains("config") ? body["config"] : body;
                reply(res, 201, json{{"session_id", service.create_session(overrides)}});
              }));

  server.Post(R"(/v1/sessions/([^/]+)/turns)",
              guarded([&service](const httplib::Request& req, httplib::Response& res) {
                const auto body = request_body(req);
                if (!body.is_object() || !body.contains("text") || !body["text"].is_string()) {
                  throw SchemaError("text", "expected a string");
                }
                std::optional<std::string> key;
                if (body.contains("fixture_key")) {
                  if (!body["fixture_key"].is_string()) throw SchemaError("fixture_key", "expected a string");
                  key = body["fixture_key"].get<std::string>();
                }
                const auto result = service.post_turn(req.matches[1], body["text"].get<std::string>(), key);
                reply(res, 200,
                      json{{"action", to_json(result.action)},
                           {"trace_id", result.trace_id},
                           {"rationale", result.rationale}});
              }));

  server.Get(R"(/v1/sessions/([^/]+)/traces/([^/]+))",
             guarded([&service](const httplib::Request& req, httplib::Response& res) {
               res.status = 200;
               res.set_content(service.get_trace(req.matches[1], req.matches[2]), kJson);
             }));

  server.Get(R"(/v1/sessions/([^/]+)/log)", guarded([&service](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, service.log_json(req.matches[1]));
             }));
}

}  // namespace tutorws::service
