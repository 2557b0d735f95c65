#pragma once

#include <map>
#include <optional>
#include <string>

#include "tutorws/gateway/gateway.hpp"
#include "tutorws/gateway/prompts.hpp"

namespace tutorws::gateway {

/// What a pipeline stage needs to talk to the model: the shared gateway, the
/// turn's accounting scope, the prompt templates and the mock routing key.
struct StageContext {
  Gateway& gateway;
  CallScope& scope;
  const PromptLibrary& prompts;
  std::optional<std::string> fixture_key;

  /// Renders `template_name` and completes it against `schema_id`. A
  /// non-empty `subkey` narrows the mock routing key to "<key>.<subkey>".
  GatewayResponse call(Stage stage, const std::string& template_name, const std::string& schema_id,
                       const std::map<std::string, std::string>& vars, const std::string& subkey = {}) const {
    GatewayRequest req;
    req.stage = stage;
    req.prompt = prompts.render(template_name, vars);
    req.schema_id = schema_id;
    if (fixture_key) req.fixture_key = subkey.empty() ? *fixture_key : *fixture_key + "." + subkey;
    return gateway.complete(req, scope);
  }
};

}  // namespace tutorws::gateway
