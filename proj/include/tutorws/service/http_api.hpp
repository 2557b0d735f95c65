#pragma once

#include <exception>
#include <utility>

#include <json.hpp>

namespace httplib {
class Server;
}

namespace tutorws::service {

class SessionService;

/// Installs the JSON API on `server`:
///   POST /v1/sessions                          -> {session_id}
///   POST /v1/sessions/{id}/turns {text}        -> {action, trace_id, rationale}
///   GET  /v1/sessions/{id}/traces/{trace_id}   -> canonical trace bytes
///   GET  /v1/sessions/{id}/log                 -> {session_id, turns}
///   GET  /v1/health                            -> {status, sessions}
void register_routes(httplib::Server& server, SessionService& service);

/// HTTP status and JSON error body for an exception escaping a handler.
std::pair<int, nlohmann::json> error_response(const std::exception& e);

}  // namespace tutorws::service
