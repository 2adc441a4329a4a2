#pragma once

// Minimal TOML-style config reader: [sections], key = value pairs, with
// strings, integers, floats, booleans, and single-line arrays of scalars.
// Covers exactly what engine config files use; anything else is rejected
// with a line-numbered error.

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>
#include <variant>

#include "mrfd/common.hpp"

namespace mrfd::toml {

struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<std::int64_t, double, bool, std::string, Array> v;

  bool is_int() const { return std::holds_alternative<std::int64_t>(v); }
  bool is_float() const { return std::holds_alternative<double>(v); }
  bool is_bool() const { return std::holds_alternative<bool>(v); }
  bool is_string() const { return std::holds_alternative<std::string>(v); }
  bool is_array() const { return std::holds_alternative<Array>(v); }

  std::int64_t as_int(const std::string& what) const {
    if (!is_int()) throw ConfigError(what + ": expected an integer");
    return std::get<std::int64_t>(v);
  }
  double as_double(const std::string& what) const {
    if (is_int()) return static_cast<double>(std::get<std::int64_t>(v));
    if (!is_float()) throw ConfigError(what + ": expected a number");
    return std::get<double>(v);
  }
  bool as_bool(const std::string& what) const {
    if (!is_bool()) throw ConfigError(what + ": expected true or false");
    return std::get<bool>(v);
  }
  const std::string& as_string(const std::string& what) const {
    if (!is_string()) throw ConfigError(what + ": expected a string");
    return std::get<std::string>(v);
  }
  const Array& as_array(const std::string& what) const {
    if (!is_array()) throw ConfigError(what + ": expected an array");
    return std::get<Array>(v);
  }
};

/// section name -> key -> value; keys before any [section] land under "".
using Table = std::map<std::string, std::map<std::string, Value>>;

namespace detail {

[[noreturn]] inline void fail(std::size_t line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

inline void skip_ws(std::string_view s, std::size_t& i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

inline bool bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

inline std::string parse_basic_string(std::string_view s, std::size_t& i,
                                      std::size_t line) {
  std::string out;
  ++i;  // opening quote
  while (i < s.size() && s[i] != '"') {
    char c = s[i];
    if (c == '\\') {
      ++i;
      if (i >= s.size()) fail(line, "unterminated escape");
      switch (s[i]) {
        case '"': c = '"'; break;
        case '\\': c = '\\'; break;
        case 'n': c = '\n'; break;
        case 't': c = '\t'; break;
        default: fail(line, "unsupported escape sequence");
      }
    }
    out.push_back(c);
    ++i;
  }
  if (i >= s.size()) fail(line, "unterminated string");
  ++i;  // closing quote
  return out;
}

inline Value parse_scalar(std::string_view tok, std::size_t line) {
  if (tok == "true") return Value{true};
  if (tok == "false") return Value{false};
  const std::string t(tok);
  const bool looks_int =
      !t.empty() && t.find_first_not_of("+-0123456789") == std::string::npos &&
      t.find_first_of("0123456789") != std::string::npos;
  if (looks_int) {
    std::int64_t n = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), n);
    if (ec == std::errc() && p == t.data() + t.size()) return Value{n};
  }
  try {
    std::size_t used = 0;
    const double d = std::stod(t, &used);
    if (used == t.size() && std::isfinite(d)) return Value{d};
  } catch (const std::exception&) {
  }
  fail(line, "cannot parse value '" + t + "'");
}

inline Value parse_value(std::string_view s, std::size_t& i, std::size_t line);

inline Value parse_array(std::string_view s, std::size_t& i, std::size_t line) {
  Array arr;
  ++i;  // '['
  skip_ws(s, i);
  if (i < s.size() && s[i] == ']') {
    ++i;
    return Value{arr};
  }
  while (true) {
    skip_ws(s, i);
    if (i >= s.size()) fail(line, "unterminated array");
    arr.push_back(parse_value(s, i, line));
    skip_ws(s, i);
    if (i < s.size() && s[i] == ',') {
      ++i;
      continue;
    }
    if (i < s.size() && s[i] == ']') {
      ++i;
      return Value{arr};
    }
    fail(line, "expected ',' or ']' in array");
  }
}

inline Value parse_value(std::string_view s, std::size_t& i, std::size_t line) {
  skip_ws(s, i);
  if (i >= s.size()) fail(line, "missing value");
  if (s[i] == '"') return Value{parse_basic_string(s, i, line)};
  if (s[i] == '[') return parse_array(s, i, line);
  std::size_t start = i;
  while (i < s.size() && s[i] != ',' && s[i] != ']' && s[i] != '#' &&
         s[i] != ' ' && s[i] != '\t')
    ++i;
  if (i == start) fail(line, "missing value");
  return parse_scalar(s.substr(start, i - start), line);
}

}  // namespace detail

inline Table parse(std::string_view text) {
  Table table;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::size_t i = 0;
    detail::skip_ws(line, i);
    if (i >= line.size() || line[i] == '#') continue;

    if (line[i] == '[') {
      const std::size_t close = line.find(']', i);
      if (close == std::string_view::npos)
        detail::fail(line_no, "unterminated section header");
      section = std::string(line.substr(i + 1, close - i - 1));
      if (section.empty()) detail::fail(line_no, "empty section name");
      for (char c : section)
        if (!detail::bare_key_char(c))
          detail::fail(line_no, "bad section name '" + section + "'");
      i = close + 1;
      detail::skip_ws(line, i);
      if (i < line.size() && line[i] != '#')
        detail::fail(line_no, "trailing characters after section header");
      continue;
    }

    std::size_t kstart = i;
    while (i < line.size() && detail::bare_key_char(line[i])) ++i;
    if (i == kstart) detail::fail(line_no, "expected a key");
    const std::string key(line.substr(kstart, i - kstart));
    detail::skip_ws(line, i);
    if (i >= line.size() || line[i] != '=')
      detail::fail(line_no, "expected '=' after key '" + key + "'");
    ++i;
    Value v = detail::parse_value(line, i, line_no);
    detail::skip_ws(line, i);
    if (i < line.size() && line[i] != '#')
      detail::fail(line_no, "trailing characters after value");
    if (table[section].count(key))
      detail::fail(line_no, "duplicate key '" + key + "'");
    table[section].emplace(key, std::move(v));
  }
  return table;
}

inline Table parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace mrfd::toml
