#include "rvts/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rvts/error.hpp"
#include "rvts/rng.hpp"

namespace rvts::config {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

class Parser {
 public:
  Parser(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }
  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("", what + " in '" + std::string(text_) + "'", line_);
  }

  std::string key() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_key_char(text_[pos_])) ++pos_;
    if (start == pos_) fail("expected a key");
    return std::string(text_.substr(start, pos_ - start));
  }

  // Parses a value; inline tables are flattened into `out` under `prefix`.
  void value_into(const std::string& prefix, std::map<std::string, Value>& out) {
    if (peek() == '{') {
      ++pos_;
      if (peek() == '}') {
        ++pos_;
        return;
      }
      while (true) {
        const std::string k = key();
        expect('=');
        value_into(prefix + "." + k, out);
        const char c = peek();
        if (c == ',') {
          ++pos_;
          continue;
        }
        if (c == '}') {
          ++pos_;
          return;
        }
        fail("expected ',' or '}'");
      }
    }
    out[prefix] = scalar_or_array();
  }

  Value scalar_or_array() {
    const char c = peek();
    Value v;
    v.line = line_;
    if (c == '[') {
      ++pos_;
      v.kind = Value::Kind::Array;
      if (peek() == ']') {
        ++pos_;
        return v;
      }
      while (true) {
        v.items.push_back(scalar());
        const char d = peek();
        if (d == ',') {
          ++pos_;
          if (peek() == ']') {
            ++pos_;
            return v;
          }
          continue;
        }
        if (d == ']') {
          ++pos_;
          return v;
        }
        fail("expected ',' or ']'");
      }
    }
    return scalar();
  }

  Value scalar() {
    const char c = peek();
    Value v;
    v.line = line_;
    if (c == '"') {
      ++pos_;
      v.kind = Value::Kind::String;
      while (true) {
        if (pos_ >= text_.size()) fail("unterminated string");
        const char ch = text_[pos_++];
        if (ch == '"') break;
        if (ch == '\\') {
          if (pos_ >= text_.size()) fail("dangling escape");
          const char e = text_[pos_++];
          v.text.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
        } else {
          v.text.push_back(ch);
        }
      }
      return v;
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' &&
           text_[pos_] != '}' && !std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    const std::string_view word = text_.substr(start, pos_ - start);
    if (word.empty()) fail("expected a value");
    if (word == "true" || word == "false") {
      v.kind = Value::Kind::Bool;
      v.boolean = word == "true";
      v.text = std::string(word);
      return v;
    }
    double d = 0.0;
    const auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), d);
    if (ec == std::errc() && ptr == word.data() + word.size()) {
      v.kind = Value::Kind::Number;
      v.number = d;
      v.text = std::string(word);
      return v;
    }
    if (word == "inf" || word == "+inf") {
      v.kind = Value::Kind::Number;
      v.number = INFINITY;
      v.text = "inf";
      return v;
    }
    if (!std::isalpha(static_cast<unsigned char>(word.front())) && std::string_view("_/.~").find(word.front()) == std::string_view::npos)
      fail("malformed value '" + std::string(word) + "'");
    v.kind = Value::Kind::String;
    v.text = std::string(word);
    return v;
  }

 private:
  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

std::string strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '\\' && in_string) {
      ++i;
    } else if (c == '"') {
      in_string = !in_string;
    } else if (c == '#' && !in_string) {
      return std::string(line.substr(0, i));
    }
  }
  return std::string(line);
}

void assignment_into(std::string_view text, const std::string& section, std::size_t line,
                     std::map<std::string, Value>& out) {
  Parser p(text, line);
  const std::string k = p.key();
  p.expect('=');
  const std::string full = section.empty() ? k : section + "." + k;
  p.value_into(full, out);
  if (!p.at_end()) p.fail("trailing characters");
}

const char* kind_name(Value::Kind k) {
  switch (k) {
    case Value::Kind::Number: return "number";
    case Value::Kind::String: return "string";
    case Value::Kind::Bool: return "bool";
    case Value::Kind::Array: return "array";
  }
  return "?";
}

const Value& typed(const Document& d, const std::string& key, Value::Kind kind) {
  const Value& v = d.at(key);
  if (v.kind != kind)
    throw ConfigError(key, std::string("expected ") + kind_name(kind) + ", found " +
                               kind_name(v.kind),
                      v.line);
  return v;
}

}  // namespace

std::string Value::repr() const {
  switch (kind) {
    case Kind::Number: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", number);
      return buf;
    }
    case Kind::Bool: return boolean ? "true" : "false";
    case Kind::String: {
      std::string s = "\"";
      for (char c : text) {
        if (c == '"' || c == '\\') s.push_back('\\');
        s.push_back(c);
      }
      return s + "\"";
    }
    case Kind::Array: {
      std::string s = "[";
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) s += ", ";
        s += items[i].repr();
      }
      return s + "]";
    }
  }
  return {};
}

Value parse_value(std::string_view text, std::size_t line) {
  Parser p(text, line);
  Value v = p.scalar_or_array();
  if (!p.at_end()) p.fail("trailing characters");
  return v;
}

Document Document::parse(std::string_view text) {
  Document doc;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    ++line_no;
    const std::string raw = strip_comment(text.substr(pos, end - pos));
    pos = end + 1;
    const std::string_view line = trim(raw);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("", "malformed section header '" + std::string(line) + "'", line_no);
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty() || !std::all_of(section.begin(), section.end(), is_key_char))
        throw ConfigError("", "malformed section name '" + section + "'", line_no);
      continue;
    }
    assignment_into(line, section, line_no, doc.values_);
    if (end == text.size()) break;
  }
  return doc;
}

Document Document::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Document Document::parse_block(std::string_view block, const std::string& prefix) {
  Document doc;
  Parser p(block, 0);
  if (p.peek() != '{') p.fail("expected '{'");
  p.value_into(prefix, doc.values_);
  if (!p.at_end()) p.fail("trailing characters");
  return doc;
}

void Document::set_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError(std::string(assignment), "override must have the form key=value");
  assignment_into(assignment, "", 0, values_);
}

bool Document::has_section(const std::string& prefix) const {
  const std::string p = prefix + ".";
  const auto it = values_.lower_bound(p);
  return it != values_.end() && it->first.compare(0, p.size(), p) == 0;
}

const Value& Document::at(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "missing required field");
  return it->second;
}

double Document::number(const std::string& key) const {
  return typed(*this, key, Value::Kind::Number).number;
}
double Document::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}
std::int64_t Document::integer(const std::string& key) const {
  const Value& v = typed(*this, key, Value::Kind::Number);
  if (v.number != std::floor(v.number) || std::fabs(v.number) > 9.0e15)
    throw ConfigError(key, "expected an integer", v.line);
  return static_cast<std::int64_t>(v.number);
}
std::int64_t Document::integer_or(const std::string& key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}
std::string Document::string(const std::string& key) const {
  return typed(*this, key, Value::Kind::String).text;
}
std::string Document::string_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? string(key) : fallback;
}
bool Document::boolean_or(const std::string& key, bool fallback) const {
  return has(key) ? typed(*this, key, Value::Kind::Bool).boolean : fallback;
}
std::vector<double> Document::numbers(const std::string& key) const {
  const Value& v = at(key);
  if (v.kind == Value::Kind::Number) return {v.number};
  if (v.kind != Value::Kind::Array) throw ConfigError(key, "expected an array of numbers", v.line);
  std::vector<double> out;
  for (const Value& item : v.items) {
    if (item.kind != Value::Kind::Number)
      throw ConfigError(key, "expected an array of numbers", v.line);
    out.push_back(item.number);
  }
  return out;
}
std::vector<std::string> Document::strings(const std::string& key) const {
  const Value& v = at(key);
  if (v.kind == Value::Kind::String) return {v.text};
  if (v.kind != Value::Kind::Array) throw ConfigError(key, "expected an array of strings", v.line);
  std::vector<std::string> out;
  for (const Value& item : v.items) {
    if (item.kind != Value::Kind::String)
      throw ConfigError(key, "expected an array of strings", v.line);
    out.push_back(item.text);
  }
  return out;
}

Document Document::section(const std::string& prefix) const {
  Document out;
  const std::string p = prefix + ".";
  for (auto it = values_.lower_bound(p); it != values_.end(); ++it) {
    if (it->first.compare(0, p.size(), p) != 0) break;
    out.values_[it->first.substr(p.size())] = it->second;
  }
  return out;
}

std::string Document::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v.repr() + "\n";
  return out;
}

std::uint64_t Document::hash() const { return rng::fnv1a64(canonical()); }

}  // namespace rvts::config
