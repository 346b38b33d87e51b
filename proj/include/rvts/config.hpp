#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Experiment configuration: a flat key/value format with [sections].
//
//   # comment
//   [space]
//   kind = "euclidean"
//   dim = 2
//
//   model = { kind = "ar1_positive", phi = 0.5, alpha = 2 }
//   run.tasks = ["simulate", "hill"]
//
// Keys are stored fully qualified ("space.kind"). Inline tables flatten into
// their parent key. Values are numbers, quoted strings, true/false, bare words
// (read as strings) and single-line arrays of those.
namespace rvts::config {

struct Value {
  enum class Kind { Number, String, Bool, Array };

  Kind kind = Kind::String;
  double number = 0.0;
  std::string text;  // string payload, or the literal spelling of a number
  bool boolean = false;
  std::vector<Value> items;
  std::size_t line = 0;

  std::string repr() const;
};

class Document {
 public:
  static Document parse(std::string_view text);
  static Document parse_file(const std::string& path);
  // Parses a standalone block such as `{ kind = "euclidean", dim = 2 }` and
  // stores its entries under `prefix`.
  static Document parse_block(std::string_view block, const std::string& prefix);

  // Applies `key=value`; the value uses the same grammar as the file.
  void set_override(std::string_view assignment);
  void set(const std::string& key, Value v) { values_[key] = std::move(v); }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  bool has_section(const std::string& prefix) const;
  const Value& at(const std::string& key) const;

  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key) const;
  std::int64_t integer_or(const std::string& key, std::int64_t fallback) const;
  std::string string(const std::string& key) const;
  std::string string_or(const std::string& key, const std::string& fallback) const;
  bool boolean_or(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::string> strings(const std::string& key) const;

  // Entries whose key starts with `prefix.`, with the prefix stripped.
  Document section(const std::string& prefix) const;
  const std::map<std::string, Value>& entries() const { return values_; }

  // One `key = value` line per entry in key order; hashing this text gives
  // the config hash.
  std::string canonical() const;
  std::uint64_t hash() const;

 private:
  std::map<std::string, Value> values_;
};

// Parses a single value (used for overrides and tests).
Value parse_value(std::string_view text, std::size_t line = 0);

}  // namespace rvts::config
