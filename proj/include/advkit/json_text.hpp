#pragma once

#include <string>

#include <json.hpp>

namespace advkit {

using Json = nlohmann::json;

/// Serializes `value` with object keys in sorted order and every double in
/// its shortest round-trip form. `indent < 0` gives compact output.
std::string to_json_text(const Json& value, int indent = -1);

/// Parses JSON text; syntax errors raise DataError mentioning `what`.
Json parse_json_text(const std::string& text, const std::string& what);

}  // namespace advkit
