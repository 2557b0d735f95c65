#pragma once

#include <set>
#include <string>
#include <string_view>
#include <utility>

#include <json.hpp>

#include "tutorws/core/errors.hpp"

namespace tutorws {

/// Strict accessor over a JSON object: every member read is recorded so that
/// finish() can reject members the schema does not know about. All failures
/// are SchemaErrors carrying the dotted path of the offending member.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw SchemaError(path_.empty() ? "$" : path_, "expected object");
  }

  const nlohmann::json& required(std::string_view key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) throw SchemaError(child(key), "missing field");
    used_.emplace(key);
    return *it;
  }

  const nlohmann::json* optional(std::string_view key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return nullptr;
    used_.emplace(key);
    return it->is_null() ? nullptr : &*it;
  }

  std::string string(std::string_view key) {
    const auto& v = required(key);
    if (!v.is_string()) throw SchemaError(child(key), "expected string");
    return v.get<std::string>();
  }

  double real(std::string_view key) {
    const auto& v = required(key);
    if (!v.is_number()) throw SchemaError(child(key), "expected number");
    return v.get<double>();
  }

  long long integer(std::string_view key) {
    const auto& v = required(key);
    if (!v.is_number_integer()) throw SchemaError(child(key), "expected integer");
    return v.get<long long>();
  }

  unsigned long long count(std::string_view key) {
    const auto v = integer(key);
    if (v < 0) throw SchemaError(child(key), "expected non-negative integer");
    return static_cast<unsigned long long>(v);
  }

  bool boolean(std::string_view key) {
    const auto& v = required(key);
    if (!v.is_boolean()) throw SchemaError(child(key), "expected boolean");
    return v.get<bool>();
  }

  const nlohmann::json& array(std::string_view key) {
    const auto& v = required(key);
    if (!v.is_array()) throw SchemaError(child(key), "expected array");
    return v;
  }

  const nlohmann::json& object(std::string_view key) {
    const auto& v = required(key);
    if (!v.is_object()) throw SchemaError(child(key), "expected object");
    return v;
  }

  /// Converts an enum-valued string with `parse`, mapping its
  /// std::invalid_argument into a SchemaError at this member.
  template <typename Parse>
  auto enumeration(std::string_view key, Parse parse) {
    const auto s = string(key);
    try {
      return parse(s);
    } catch (const std::invalid_argument& e) {
      throw SchemaError(child(key), e.what());
    }
  }

  std::string child(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  std::string index(std::string_view key, std::size_t i) const {
    return child(key) + "[" + std::to_string(i) + "]";
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!used_.contains(it.key())) throw SchemaError(child(it.key()), "unexpected field");
    }
  }

 private:
  const nlohmann::json& obj_;
  std::string path_;
  std::set<std::string, std::less<>> used_;
};

}  // namespace tutorws
