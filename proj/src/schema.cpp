#include "advkit/schema.hpp"

#include <set>

#include "advkit/error.hpp"
#include "advkit/io.hpp"

namespace advkit {

namespace {

const std::set<std::string> kKnownKeywords = {
    "$schema", "title",    "description", "default",  "definitions",      "$ref",
    "type",    "enum",     "properties",  "required", "additionalProperties", "items",
    "minItems", "maxItems", "uniqueItems", "minimum", "maximum",          "exclusiveMinimum",
    "exclusiveMaximum", "minLength"};

class Checker {
 public:
  explicit Checker(const Json& root) : root_(root) {}

  void check(const Json& schema, const Json& doc, const std::string& path) {
    if (!schema.is_object()) throw ContractError("schema node at " + path + " is not an object");
    for (const auto& [key, _] : schema.items()) {
      if (!kKnownKeywords.contains(key)) throw ContractError("unsupported schema keyword '" + key + "'");
    }
    if (schema.contains("additionalProperties") && schema.at("additionalProperties") != false) {
      throw ContractError("only additionalProperties: false is supported");
    }
    if (schema.contains("$ref")) {
      check(resolve(schema.at("$ref").get<std::string>()), doc, path);
      return;
    }
    if (schema.contains("type") && !type_matches(schema.at("type"), doc)) {
      fail(path, "expected " + schema.at("type").dump() + ", got " + type_name(doc));
      return;
    }
    if (schema.contains("enum")) {
      bool found = false;
      for (const auto& v : schema.at("enum")) found = found || v == doc;
      if (!found) fail(path, doc.dump() + " is not one of " + schema.at("enum").dump());
    }
    if (doc.is_number()) check_number(schema, doc.get<double>(), path);
    if (doc.is_string() && schema.contains("minLength") &&
        doc.get<std::string>().size() < schema.at("minLength").get<std::size_t>()) {
      fail(path, "string is shorter than " + schema.at("minLength").dump());
    }
    if (doc.is_object()) check_object(schema, doc, path);
    if (doc.is_array()) check_array(schema, doc, path);
  }

  std::vector<std::string> errors;

 private:
  const Json& resolve(const std::string& ref) const {
    const std::string prefix = "#/definitions/";
    if (ref.rfind(prefix, 0) != 0) throw ContractError("unsupported $ref '" + ref + "'");
    const std::string name = ref.substr(prefix.size());
    if (!root_.contains("definitions") || !root_.at("definitions").contains(name)) {
      throw ContractError("dangling $ref '" + ref + "'");
    }
    return root_.at("definitions").at(name);
  }

  static std::string type_name(const Json& doc) {
    if (doc.is_number_integer()) return "integer";
    if (doc.is_number()) return "number";
    return doc.type_name();
  }

  static bool one_type_matches(const std::string& t, const Json& doc) {
    if (t == "object") return doc.is_object();
    if (t == "array") return doc.is_array();
    if (t == "string") return doc.is_string();
    if (t == "boolean") return doc.is_boolean();
    if (t == "null") return doc.is_null();
    if (t == "number") return doc.is_number();
    if (t == "integer") return doc.is_number_integer();
    throw ContractError("unknown schema type '" + t + "'");
  }

  static bool type_matches(const Json& type, const Json& doc) {
    if (type.is_string()) return one_type_matches(type.get<std::string>(), doc);
    for (const auto& t : type) {
      if (one_type_matches(t.get<std::string>(), doc)) return true;
    }
    return false;
  }

  void check_number(const Json& schema, double v, const std::string& path) {
    auto bound = [&](const char* key) { return schema.at(key).get<double>(); };
    if (schema.contains("minimum") && v < bound("minimum")) fail(path, "below minimum " + format_double(bound("minimum")));
    if (schema.contains("maximum") && v > bound("maximum")) fail(path, "above maximum " + format_double(bound("maximum")));
    if (schema.contains("exclusiveMinimum") && v <= bound("exclusiveMinimum")) {
      fail(path, "must exceed " + format_double(bound("exclusiveMinimum")));
    }
    if (schema.contains("exclusiveMaximum") && v >= bound("exclusiveMaximum")) {
      fail(path, "must be below " + format_double(bound("exclusiveMaximum")));
    }
  }

  void check_object(const Json& schema, const Json& doc, const std::string& path) {
    if (schema.contains("required")) {
      for (const auto& key : schema.at("required")) {
        if (!doc.contains(key.get<std::string>())) fail(path, "missing required key '" + key.get<std::string>() + "'");
      }
    }
    const Json empty = Json::object();
    const Json& props = schema.contains("properties") ? schema.at("properties") : empty;
    for (const auto& [key, value] : doc.items()) {
      if (props.contains(key)) {
        check(props.at(key), value, path + "/" + key);
      } else if (schema.contains("additionalProperties")) {
        fail(path, "unknown key '" + key + "'");
      }
    }
  }

  void check_array(const Json& schema, const Json& doc, const std::string& path) {
    if (schema.contains("minItems") && doc.size() < schema.at("minItems").get<std::size_t>()) {
      fail(path, "needs at least " + schema.at("minItems").dump() + " items");
    }
    if (schema.contains("maxItems") && doc.size() > schema.at("maxItems").get<std::size_t>()) {
      fail(path, "allows at most " + schema.at("maxItems").dump() + " items");
    }
    if (schema.value("uniqueItems", false)) {
      for (std::size_t i = 0; i < doc.size(); ++i)
        for (std::size_t j = i + 1; j < doc.size(); ++j)
          if (doc[i] == doc[j]) fail(path, "duplicate item " + doc[i].dump());
    }
    if (schema.contains("items")) {
      for (std::size_t i = 0; i < doc.size(); ++i) check(schema.at("items"), doc[i], path + "/" + std::to_string(i));
    }
  }

  void fail(const std::string& path, const std::string& message) {
    errors.push_back((path.empty() ? "/" : path) + ": " + message);
  }

  const Json& root_;
};

}  // namespace

std::vector<std::string> schema_errors(const Json& schema, const Json& doc) {
  Checker checker(schema);
  checker.check(schema, doc, "");
  return std::move(checker.errors);
}

void require_schema(const Json& schema, const Json& doc, const std::string& what) {
  const auto errors = schema_errors(schema, doc);
  if (!errors.empty()) throw ConfigError(what + " " + errors.front());
}

}  // namespace advkit
