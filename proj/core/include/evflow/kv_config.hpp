#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evflow {

// Flat `key = value` document. Blank lines and lines starting with '#' are
// ignored; keys are unique (a repeated key is a ParseError).
class KeyValueDoc {
 public:
  static KeyValueDoc parse(std::string_view text);
  static KeyValueDoc load(const std::string& path);

  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  std::optional<std::string> find(const std::string& key) const;

  // The require_* accessors raise MissingField when the key is absent and
  // ParseError when the value does not parse.
  const std::string& require(const std::string& key) const;
  double require_double(const std::string& key) const;
  std::int64_t require_int(const std::string& key) const;
  std::vector<double> require_doubles(const std::string& key, std::size_t count) const;

  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

  std::string to_string() const;

 private:
  std::map<std::string, std::string> entries_;
};

// Whitespace-separated reals, e.g. "0.1 -0.02 0 0".
std::vector<double> parse_doubles(std::string_view text);
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);
std::string_view trim(std::string_view text) noexcept;

}  // namespace evflow
