#pragma once

// Minimal deterministic JSON/CSV emission: insertion-ordered objects and
// fixed float formatting (17 significant digits), so identical runs produce
// byte-identical reports.

#include <cstdio>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ahc/errors.hpp"

namespace ahc {

class JsonValue;
using JsonPtr = std::shared_ptr<JsonValue>;

class JsonValue {
 public:
  using Object = std::vector<std::pair<std::string, JsonPtr>>;
  using Array = std::vector<JsonPtr>;
  std::variant<std::nullptr_t, bool, double, std::int64_t, std::string, Object, Array> v = nullptr;

  static JsonPtr object() {
    auto p = std::make_shared<JsonValue>();
    p->v = Object{};
    return p;
  }
  static JsonPtr array() {
    auto p = std::make_shared<JsonValue>();
    p->v = Array{};
    return p;
  }
  static JsonPtr of(double x) {
    auto p = std::make_shared<JsonValue>();
    p->v = x;
    return p;
  }
  static JsonPtr of(std::int64_t x) {
    auto p = std::make_shared<JsonValue>();
    p->v = x;
    return p;
  }
  static JsonPtr of(int x) { return of(std::int64_t(x)); }
  static JsonPtr of(bool x) {
    auto p = std::make_shared<JsonValue>();
    p->v = x;
    return p;
  }
  static JsonPtr of(const std::string& s) {
    auto p = std::make_shared<JsonValue>();
    p->v = s;
    return p;
  }
  static JsonPtr of(const char* s) { return of(std::string(s)); }

  JsonValue& set(const std::string& key, JsonPtr val) {
    std::get<Object>(v).emplace_back(key, std::move(val));
    return *this;
  }
  template <class T>
  JsonValue& set(const std::string& key, T val) {
    return set(key, of(val));
  }
  void push(JsonPtr val) { std::get<Array>(v).push_back(std::move(val)); }
  template <class T>
  void push(T val) {
    push(of(val));
  }
};

inline std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

inline std::string format_double(double x) {
  char buf[64];
  if (x != x) return "null";  // NaN is not valid JSON
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void json_dump(const JsonValue& v, std::string& out, int indent) {
  std::string pad(size_t(indent) * 2, ' ');
  std::string pad2(size_t(indent + 1) * 2, ' ');
  if (std::holds_alternative<std::nullptr_t>(v.v)) {
    out += "null";
  } else if (std::holds_alternative<bool>(v.v)) {
    out += std::get<bool>(v.v) ? "true" : "false";
  } else if (std::holds_alternative<double>(v.v)) {
    out += format_double(std::get<double>(v.v));
  } else if (std::holds_alternative<std::int64_t>(v.v)) {
    out += std::to_string(std::get<std::int64_t>(v.v));
  } else if (std::holds_alternative<std::string>(v.v)) {
    out += '"' + json_escape(std::get<std::string>(v.v)) + '"';
  } else if (std::holds_alternative<JsonValue::Object>(v.v)) {
    const auto& obj = std::get<JsonValue::Object>(v.v);
    if (obj.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    for (size_t i = 0; i < obj.size(); ++i) {
      out += pad2 + '"' + json_escape(obj[i].first) + "\": ";
      json_dump(*obj[i].second, out, indent + 1);
      if (i + 1 < obj.size()) out += ',';
      out += '\n';
    }
    out += pad + '}';
  } else {
    const auto& arr = std::get<JsonValue::Array>(v.v);
    if (arr.empty()) {
      out += "[]";
      return;
    }
    out += "[\n";
    for (size_t i = 0; i < arr.size(); ++i) {
      out += pad2;
      json_dump(*arr[i], out, indent + 1);
      if (i + 1 < arr.size()) out += ',';
      out += '\n';
    }
    out += pad + ']';
  }
}

inline std::string json_dump(const JsonValue& v) {
  std::string out;
  json_dump(v, out, 0);
  out += '\n';
  return out;
}

// CSV writing with the same float format.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  std::string dump() const {
    std::string out;
    for (size_t i = 0; i < header.size(); ++i) {
      out += header[i];
      out += (i + 1 < header.size()) ? ',' : '\n';
    }
    for (const auto& r : rows) {
      for (size_t i = 0; i < r.size(); ++i) {
        out += r[i];
        out += (i + 1 < r.size()) ? ',' : '\n';
      }
    }
    return out;
  }
};

inline std::string csv_num(double x) { return format_double(x); }

}  // namespace ahc
