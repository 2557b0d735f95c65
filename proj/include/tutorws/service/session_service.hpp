#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "tutorws/core/errors.hpp"
#include "tutorws/core/types.hpp"
#include "tutorws/gateway/gateway.hpp"
#include "tutorws/gateway/prompts.hpp"
#include "tutorws/service/config.hpp"

namespace tutorws::service {

class NotFound : public Error {
 public:
  using Error::Error;
};

/// A turn was posted while another turn of the same session was running.
class SessionBusy : public Error {
 public:
  explicit SessionBusy(const std::string& session_id) : Error("session '" + session_id + "' is busy") {}
};

struct TurnRecord {
  Utterance utterance;
  TutorAction action;
  std::string trace_id;
};

struct PostTurnResult {
  TutorAction action;
  std::string trace_id;
  std::string rationale;
};

/// Hosts tutoring sessions. Each session is an append-only JSON-lines file
/// under the data directory; the directory is replayed on construction, so a
/// restarted service serves the same traces byte for byte.
class SessionService {
 public:
  SessionService(SessionConfig base, std::filesystem::path data_dir);
  ~SessionService();

  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  /// Throws ConfigError for invalid or non-overridable keys.
  std::string create_session(const nlohmann::json& overrides = nlohmann::json::object());

  /// Runs one learner turn. Throws NotFound, SessionBusy, EmptyUtterance,
  /// GatewayFailure and the pipeline's other errors. The trace is on disk
  /// before this returns.
  PostTurnResult post_turn(const std::string& session_id, const std::string& text,
                           const std::optional<std::string>& fixture_key = std::nullopt);

  /// Canonical trace bytes exactly as persisted.
  std::string get_trace(const std::string& session_id, const std::string& trace_id) const;

  std::vector<TurnRecord> get_log(const std::string& session_id) const;
  nlohmann::json log_json(const std::string& session_id) const;

  std::size_t session_count() const;
  const SessionConfig& base_config() const { return base_; }

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& session_id) const;
  void replay(const std::filesystem::path& file);

  SessionConfig base_;
  std::filesystem::path data_dir_;
  std::shared_ptr<gateway::Gateway> gateway_;
  gateway::PromptLibrary prompts_;

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace tutorws::service
