#include "tutorws/service/session_service.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "tutorws/core/trace.hpp"
#include "tutorws/service/pipeline.hpp"

namespace tutorws::service {

using nlohmann::json;

struct SessionService::Session {
  std::string id;
  SessionConfig config;
  nlohmann::json overrides;
  std::filesystem::path file;

  std::mutex lane;  // held for the whole turn; try_lock failure means busy

  mutable std::mutex data;  // guards everything below
  std::vector<TurnRecord> log;
  std::vector<Utterance> history;
  std::map<std::string, std::string> traces;  // trace id -> canonical bytes
  std::map<std::string, FuzzyMastery> priors;
};

namespace {

std::string new_session_id() {
  static std::mutex mutex;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mutex);
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << rng();
  return out.str();
}

void append_line(const std::filesystem::path& file, const json& record) {
  std::ofstream out(file, std::ios::app | std::ios::binary);
  const std::string line = record.dump() + "\n";
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.flush();
  if (!out) throw Error("cannot append to session log " + file.string());
}

json memberships_json(const std::map<std::string, FuzzyMastery>& priors) {
  json out = json::object();
  for (const auto& [id, mu] : priors) out[id] = mu.values();
  return out;
}

}  // namespace

SessionService::SessionService(SessionConfig base, std::filesystem::path data_dir)
    : base_(std::move(base)), data_dir_(std::move(data_dir)), gateway_(make_gateway(base_)),
      prompts_(make_prompts(base_)) {
  base_.check();
  std::filesystem::create_directories(data_dir_);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(data_dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) replay(f);
}

SessionService::~SessionService() = default;

void SessionService::replay(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::string line;
  std::shared_ptr<Session> session;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception&) {
      // A torn final line from an interrupted write; everything before it is intact.
      break;
    }
    const auto kind = record.at("kind").get<std::string>();
    if (kind == "created") {
      session = std::make_shared<Session>();
      session->id = record.at("session_id").get<std::string>();
      session->overrides = record.at("overrides");
      session->config = base_.with_overrides(session->overrides);
      session->file = file;
    } else if (kind == "turn" && session) {
      TurnRecord rec;
      rec.utterance.text = record.at("text").get<std::string>();
      rec.utterance.turn_index = record.at("turn_index").get<std::uint32_t>();
      rec.utterance.session_id = session->id;
      rec.action = tutor_action_from_json(record.at("action"));
      rec.trace_id = record.at("trace_id").get<std::string>();
      session->traces[rec.trace_id] = record.at("trace").get<std::string>();
      for (const auto& [id, values] : record.at("memberships").items()) {
        session->priors.insert_or_assign(id, FuzzyMastery(values.get<std::array<double, 4>>()));
      }
      session->history.push_back(rec.utterance);
      session->history.push_back(Utterance{rec.action.response_text, Speaker::tutor, rec.utterance.turn_index, session->id});
      session->log.push_back(std::move(rec));
    }
  }
  if (session) sessions_[session->id] = session;
}

std::string SessionService::create_session(const json& overrides) {
  auto session = std::make_shared<Session>();
  session->overrides = overrides.is_null() ? json::object() : overrides;
  session->config = base_.with_overrides(session->overrides);

  std::unique_lock lock(sessions_mutex_);
  do {
    session->id = new_session_id();
  } while (sessions_.contains(session->id));
  session->file = data_dir_ / (session->id + ".jsonl");
  append_line(session->file, json{{"kind", "created"}, {"session_id", session->id}, {"overrides", session->overrides}});
  sessions_[session->id] = session;
  return session->id;
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& session_id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFound("unknown session '" + session_id + "'");
  return it->second;
}

PostTurnResult SessionService::post_turn(const std::string& session_id, const std::string& text,
                                         const std::optional<std::string>& fixture_key) {
  auto session = find(session_id);
  std::unique_lock lane(session->lane, std::try_to_lock);
  if (!lane.owns_lock()) throw SessionBusy(session_id);

  TurnInput input;
  {
    std::lock_guard data(session->data);
    input.utterance = Utterance{text, Speaker::learner, static_cast<std::uint32_t>(session->log.size() + 1), session_id};
    input.history = session->history;
    input.priors = session->priors;
  }
  const std::string trace_id = "t" + std::to_string(input.utterance.turn_index);
  input.turn_id = session_id + "/" + trace_id;
  input.fixture_key = fixture_key ? fixture_key : session->config.fixture_key;

  auto result = run_turn(input, session->config.pipeline, *gateway_, prompts_);
  const std::string bytes = canonical_serialize(result.trace);

  std::map<std::string, FuzzyMastery> memberships;
  for (const auto& [id, d] : result.context) memberships.insert_or_assign(id, d.membership);

  append_line(session->file, json{{"kind", "turn"},
                                   {"turn_index", input.utterance.turn_index},
                                   {"text", text},
                                   {"action", to_json(result.action)},
                                   {"trace_id", trace_id},
                                   {"trace", bytes},
                                   {"memberships", memberships_json(memberships)}});

  std::lock_guard data(session->data);
  for (auto& [id, mu] : memberships) session->priors.insert_or_assign(id, mu);
  session->traces[trace_id] = bytes;
  session->history.push_back(input.utterance);
  session->history.push_back(
      Utterance{result.action.response_text, Speaker::tutor, input.utterance.turn_index, session_id});
  session->log.push_back(TurnRecord{input.utterance, result.action, trace_id});
  return PostTurnResult{std::move(result.action), trace_id, std::move(result.rationale)};
}

std::string SessionService::get_trace(const std::string& session_id, const std::string& trace_id) const {
  auto session = find(session_id);
  std::lock_guard data(session->data);
  auto it = session->traces.find(trace_id);
  if (it == session->traces.end()) throw NotFound("unknown trace '" + trace_id + "' in session '" + session_id + "'");
  return it->second;
}

std::vector<TurnRecord> SessionService::get_log(const std::string& session_id) const {
  auto session = find(session_id);
  std::lock_guard data(session->data);
  return session->log;
}

json SessionService::log_json(const std::string& session_id) const {
  json turns = json::array();
  for (const auto& rec : get_log(session_id)) {
    turns.push_back(json{{"turn_index", rec.utterance.turn_index},
                         {"text", rec.utterance.text},
                         {"action", to_json(rec.action)},
                         {"trace_id", rec.trace_id}});
  }
  return json{{"session_id", session_id}, {"turns", std::move(turns)}};
}

std::size_t SessionService::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

}  // namespace tutorws::service
