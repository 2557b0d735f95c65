#pragma once

#include <string>

#include <json.hpp>

namespace tutorws::canonical {

/// Number of decimal places every real carries on the wire.
inline constexpr int kRealDecimals = 6;

/// Rounds to the nearest multiple of 1e-6, the precision reals carry on the
/// wire. Values already quantised are fixed points of this function, and the
/// parsed form of fixed6(x) equals quantize(x) exactly.
double quantize(double x);

/// Renders a real with exactly six decimals. Negative zero renders as zero.
std::string fixed6(double x);

/// Compact JSON with lexicographically sorted keys (byte order) and every
/// floating-point number rendered by fixed6. Strings are UTF-8, not
/// \u-escaped beyond what JSON requires.
std::string dump(const nlohmann::json& value);

}  // namespace tutorws::canonical
