#include "tutorws/gateway/schema.hpp"

#include <map>
#include <mutex>
#include <stdexcept>

namespace tutorws::resources::schemas {
const std::map<std::string, std::string_view, std::less<>>& embedded();
}

namespace tutorws::gateway {

using nlohmann::json;

namespace {

bool type_matches(const json& v, std::string_view type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "number") return v.is_number();
  if (type == "integer") return v.is_number_integer();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  return false;
}

std::optional<std::string> check(const json& schema, const json& v, const std::string& path) {
  auto fail = [&](const std::string& msg) { return std::optional<std::string>((path.empty() ? "$" : path) + ": " + msg); };

  if (auto t = schema.find("type"); t != schema.end()) {
    bool ok = false;
    if (t->is_string()) {
      ok = type_matches(v, t->get<std::string>());
    } else {
      for (const auto& alt : *t) ok = ok || type_matches(v, alt.get<std::string>());
    }
    if (!ok) return fail("expected type " + t->dump());
  }
  if (auto e = schema.find("enum"); e != schema.end()) {
    bool ok = false;
    for (const auto& alt : *e) ok = ok || alt == v;
    if (!ok) return fail("value not in enumeration");
  }
  if (v.is_string()) {
    if (auto m = schema.find("minLength"); m != schema.end() && v.get<std::string>().size() < m->get<std::size_t>())
      return fail("string shorter than " + m->dump());
  }
  if (v.is_number()) {
    if (auto m = schema.find("minimum"); m != schema.end() && v.get<double>() < m->get<double>())
      return fail("below minimum " + m->dump());
    if (auto m = schema.find("maximum"); m != schema.end() && v.get<double>() > m->get<double>())
      return fail("above maximum " + m->dump());
  }
  if (v.is_array()) {
    if (auto m = schema.find("minItems"); m != schema.end() && v.size() < m->get<std::size_t>())
      return fail("fewer than " + m->dump() + " items");
    if (auto m = schema.find("maxItems"); m != schema.end() && v.size() > m->get<std::size_t>())
      return fail("more than " + m->dump() + " items");
    if (auto items = schema.find("items"); items != schema.end()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (auto err = check(*items, v[i], path + "[" + std::to_string(i) + "]")) return err;
      }
    }
  }
  if (v.is_object()) {
    const auto props = schema.find("properties");
    if (auto req = schema.find("required"); req != schema.end()) {
      for (const auto& name : *req) {
        if (!v.contains(name.get<std::string>())) return fail("missing required member '" + name.get<std::string>() + "'");
      }
    }
    const auto extra = schema.find("additionalProperties");
    for (auto it = v.begin(); it != v.end(); ++it) {
      const std::string child = path.empty() ? it.key() : path + "." + it.key();
      if (props != schema.end() && props->contains(it.key())) {
        if (auto err = check((*props)[it.key()], it.value(), child)) return err;
      } else if (extra != schema.end()) {
        if (extra->is_boolean()) {
          if (!extra->get<bool>()) return fail("unexpected member '" + it.key() + "'");
        } else if (auto err = check(*extra, it.value(), child)) {
          return err;
        }
      }
    }
  }
  return std::nullopt;
}

std::map<std::string, JsonSchema, std::less<>> load_all() {
  std::map<std::string, JsonSchema, std::less<>> out;
  for (const auto& [name, text] : resources::schemas::embedded()) {
    out.emplace(name, JsonSchema(json::parse(text)));
  }
  return out;
}

const std::map<std::string, JsonSchema, std::less<>>& registry() {
  static const auto schemas = load_all();
  return schemas;
}

}  // namespace

JsonSchema::JsonSchema(json schema) : schema_(std::move(schema)) {
  if (!schema_.is_object()) throw std::invalid_argument("schema document must be an object");
}

std::optional<std::string> JsonSchema::first_violation(const json& value) const { return check(schema_, value, ""); }

const JsonSchema& response_schema(std::string_view id) {
  const auto& reg = registry();
  auto it = reg.find(id);
  if (it == reg.end()) throw std::out_of_range("unknown response schema '" + std::string(id) + "'");
  return it->second;
}

bool is_known_schema(std::string_view id) { return registry().find(id) != registry().end(); }

std::vector<std::string> known_schema_ids() {
  std::vector<std::string> ids;
  for (const auto& [name, _] : registry()) ids.push_back(name);
  return ids;
}

}  // namespace tutorws::gateway
