#include "tutorws/core/canonical_json.hpp"

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>

namespace tutorws::canonical {

namespace {

constexpr double kScale = 1e6;

void write(const nlohmann::json& v, std::string& out) {
  using value_t = nlohmann::json::value_t;
  switch (v.type()) {
    case value_t::object: {
      out += '{';
      bool first = true;
      // nlohmann::json objects are std::map-backed, so iteration is already
      // in byte-lexicographic key order.
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += nlohmann::json(it.key()).dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
        out += ':';
        write(it.value(), out);
      }
      out += '}';
      break;
    }
    case value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        write(v[i], out);
      }
      out += ']';
      break;
    }
    case value_t::number_float:
      out += fixed6(v.get<double>());
      break;
    default:
      out += v.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
  }
}

}  // namespace

double quantize(double x) {
  if (!std::isfinite(x)) throw std::domain_error("non-finite real cannot be serialised");
  const double q = std::round(x * kScale) / kScale;
  return q == 0.0 ? 0.0 : q;
}

std::string fixed6(double x) {
  if (!std::isfinite(x)) throw std::domain_error("non-finite real cannot be serialised");
  const auto units = std::llround(x * kScale);
  const auto mag = static_cast<std::uint64_t>(units < 0 ? -units : units);
  std::string frac = std::to_string(mag % 1000000);
  frac.insert(0, 6 - frac.size(), '0');
  std::string out;
  if (units < 0) out += '-';
  out += std::to_string(mag / 1000000);
  out += '.';
  out += frac;
  return out;
}

std::string dump(const nlohmann::json& value) {
  std::string out;
  write(value, out);
  return out;
}

}  // namespace tutorws::canonical
