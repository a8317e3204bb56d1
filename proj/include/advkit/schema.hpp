#pragma once

#include <string>
#include <vector>

#include "advkit/json_text.hpp"

namespace advkit {

/// Checks `doc` against a JSON Schema restricted to the draft-07 keywords
/// type, enum, properties, required, additionalProperties (false only),
/// items, minItems, maxItems, uniqueItems, minimum, maximum,
/// exclusiveMinimum, exclusiveMaximum, minLength and local
/// "#/definitions/..." references. $schema, title, description and default
/// are annotations. Any other keyword in the schema raises ContractError.
/// Each error reads "<json pointer>: <message>".
std::vector<std::string> schema_errors(const Json& schema, const Json& doc);

/// Throws ConfigError carrying the first error, prefixed by `what`.
void require_schema(const Json& schema, const Json& doc, const std::string& what);

}  // namespace advkit
