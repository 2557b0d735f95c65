#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tutorws {

/// Root of every error raised by the engine. Callers that only need a message
/// can catch this; the service maps the concrete subclasses to HTTP status codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trace whose stage events are not in pipeline order.
class TraceOrderError : public Error {
 public:
  TraceOrderError(std::size_t index, const std::string& why)
      : Error("stage ordering violated at event " + std::to_string(index) + ": " + why), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Wire data that does not match an expected schema. `field` names the
/// missing, extra, or ill-typed member using a dotted path.
class SchemaError : public Error {
 public:
  SchemaError(std::string field, const std::string& why)
      : Error("schema violation at '" + field + "': " + why), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class SpanError : public Error {
 public:
  SpanError(long long start, long long end, std::size_t text_size)
      : Error("evidence span [" + std::to_string(start) + ", " + std::to_string(end) +
              ") out of bounds for text of length " + std::to_string(text_size)),
        start_(start),
        end_(end) {}
  explicit SpanError(const std::string& excerpt)
      : Error("evidence excerpt not found in source text: \"" + excerpt + "\""), start_(-1), end_(-1) {}
  long long start() const noexcept { return start_; }
  long long end() const noexcept { return end_; }

 private:
  long long start_;
  long long end_;
};

class EmptyUtterance : public Error {
 public:
  EmptyUtterance() : Error("learner utterance is empty after trimming") {}
};

class UnknownTemplateId : public Error {
 public:
  explicit UnknownTemplateId(std::string id) : Error("unknown feature template id '" + id + "'"), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class KeySetMismatch : public Error {
 public:
  explicit KeySetMismatch(std::vector<std::string> missing)
      : Error("template key sets differ; missing: " + join(missing)), missing_(std::move(missing)) {}
  const std::vector<std::string>& missing() const noexcept { return missing_; }

 private:
  static std::string join(const std::vector<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) {
      if (!out.empty()) out += ", ";
      out += id;
    }
    return out;
  }
  std::vector<std::string> missing_;
};

class PoolUnderfull : public Error {
 public:
  PoolUnderfull(std::size_t got, std::size_t wanted)
      : Error("candidate pool underfull: got " + std::to_string(got) + " drafts, wanted " + std::to_string(wanted)),
        count_(got) {}
  std::size_t count() const noexcept { return count_; }

 private:
  std::size_t count_;
};

class ArityMismatch : public Error {
 public:
  ArityMismatch(std::size_t got, std::size_t wanted)
      : Error("expected " + std::to_string(wanted) + " items, got " + std::to_string(got)) {}
};

class EmptyContext : public Error {
 public:
  EmptyContext() : Error("cognitive context has no knowledge components") {}
};

class EmptyResponse : public Error {
 public:
  EmptyResponse() : Error("gateway returned an empty tutoring response") {}
};

/// Model inference failed after the retry budget was spent.
class GatewayFailure : public Error {
 public:
  GatewayFailure(std::string stage, int attempts, const std::string& last_error)
      : Error("gateway failure in stage '" + stage + "' after " + std::to_string(attempts) +
              " attempt(s): " + last_error),
        stage_(std::move(stage)),
        attempts_(attempts) {}
  const std::string& stage() const noexcept { return stage_; }
  int attempts() const noexcept { return attempts_; }

 private:
  std::string stage_;
  int attempts_;
};

class UnknownFixtureKey : public Error {
 public:
  UnknownFixtureKey(std::string stage, const std::string& key)
      : Error("no mock fixture for stage '" + stage + "' and key '" + key + "'"), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& why)
      : Error("invalid config field '" + field + "': " + why), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace tutorws
