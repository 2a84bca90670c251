#pragma once

#include <string>

#include <json.hpp>

namespace oswi {

/// Serializes `value` with every floating-point number printed to 17
/// significant digits. Non-finite numbers become null.
std::string to_json_text(const nlohmann::json& value, int indent = 2);

/// printf("%.17g").
std::string format_double(double v);

} // namespace oswi
