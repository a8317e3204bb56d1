#include "advkit/json_text.hpp"

#include <cmath>

#include "advkit/error.hpp"
#include "advkit/io.hpp"

namespace advkit {

namespace {

void newline(std::string& out, int indent, int depth) {
  if (indent < 0) return;
  out.push_back('\n');
  out.append(static_cast<std::size_t>(indent * depth), ' ');
}

void emit(const Json& v, std::string& out, int indent, int depth) {
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out.push_back('{');
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out.push_back(',');
        first = false;
        newline(out, indent, depth + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        emit(it.value(), out, indent, depth + 1);
      }
      newline(out, indent, depth);
      out.push_back('}');
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = indent < 0 || !(v.front().is_object() || v.front().is_array());
      out.push_back('[');
      bool first = true;
      for (const auto& item : v) {
        if (!first) out.push_back(',');
        first = false;
        if (!flat) newline(out, indent, depth + 1);
        emit(item, out, flat ? -1 : indent, depth + 1);
      }
      if (!flat) newline(out, indent, depth);
      out.push_back(']');
      return;
    }
    case Json::value_t::number_float: {
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw InvariantViolation("refusing to serialize a non-finite number");
      std::string s = format_double(d);
      // Keep floats recognisable as floats on re-parse.
      if (s.find_first_of(".eE") == std::string::npos) s += ".0";
      out += s;
      return;
    }
    default:
      out += v.dump();
      return;
  }
}

}  // namespace

std::string to_json_text(const Json& value, int indent) {
  std::string out;
  emit(value, out, indent, 0);
  return out;
}

Json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw DataError(what + " is not valid JSON: " + e.what());
  }
}

}  // namespace advkit
