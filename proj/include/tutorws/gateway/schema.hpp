#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tutorws::gateway {

/// Validator for the JSON Schema subset the response schemas use: type (name
/// or list), properties, required, additionalProperties (bool or schema),
/// items, minItems, maxItems, minLength, minimum, maximum, enum.
class JsonSchema {
 public:
  explicit JsonSchema(nlohmann::json schema);

  /// First violation as "path: message", or nullopt when `value` conforms.
  std::optional<std::string> first_violation(const nlohmann::json& value) const;
  const nlohmann::json& document() const { return schema_; }

 private:
  nlohmann::json schema_;
};

/// Response schemas shipped under schemas/ and compiled into the library.
/// Throws std::out_of_range for unknown ids.
const JsonSchema& response_schema(std::string_view id);
bool is_known_schema(std::string_view id);
std::vector<std::string> known_schema_ids();

}  // namespace tutorws::gateway
