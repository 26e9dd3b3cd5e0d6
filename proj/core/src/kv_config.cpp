#include "evflow/kv_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "evflow/error.hpp"

namespace evflow {

std::string_view trim(std::string_view text) noexcept {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

double parse_double(std::string_view text) {
  text = trim(text);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    raise(Errc::ParseError, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::int64_t parse_int(std::string_view text) {
  text = trim(text);
  std::int64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    raise(Errc::ParseError, "not an integer: '" + std::string(text) + "'");
  }
  return value;
}

std::vector<double> parse_doubles(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto start = text.find_first_not_of(" \t", pos);
    if (start == std::string_view::npos) break;
    auto stop = text.find_first_of(" \t", start);
    if (stop == std::string_view::npos) stop = text.size();
    out.push_back(parse_double(text.substr(start, stop - start)));
    pos = stop;
  }
  return out;
}

KeyValueDoc KeyValueDoc::parse(std::string_view text) {
  KeyValueDoc doc;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = trim(text.substr(pos, eol - pos));
    ++line_no;
    pos = eol + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      raise(Errc::ParseError, "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) {
      raise(Errc::ParseError, "line " + std::to_string(line_no) + ": empty key");
    }
    if (!doc.entries_.emplace(key, value).second) {
      raise(Errc::ParseError, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return doc;
}

KeyValueDoc KeyValueDoc::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::IoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::optional<std::string> KeyValueDoc::find(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

const std::string& KeyValueDoc::require(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) raise(Errc::MissingField, "missing key '" + key + "'");
  return it->second;
}

double KeyValueDoc::require_double(const std::string& key) const {
  return parse_double(require(key));
}

std::int64_t KeyValueDoc::require_int(const std::string& key) const {
  return parse_int(require(key));
}

std::vector<double> KeyValueDoc::require_doubles(const std::string& key, std::size_t count) const {
  auto values = parse_doubles(require(key));
  if (values.size() != count) {
    raise(Errc::ParseError, "key '" + key + "' expects " + std::to_string(count) +
                                " values, got " + std::to_string(values.size()));
  }
  return values;
}

double KeyValueDoc::get_double(const std::string& key, double fallback) const {
  const auto v = find(key);
  return v ? parse_double(*v) : fallback;
}

std::int64_t KeyValueDoc::get_int(const std::string& key, std::int64_t fallback) const {
  const auto v = find(key);
  return v ? parse_int(*v) : fallback;
}

std::string KeyValueDoc::get_string(const std::string& key, const std::string& fallback) const {
  const auto v = find(key);
  return v ? *v : fallback;
}

std::string KeyValueDoc::to_string() const {
  std::string out;
  for (const auto& [key, value] : entries_) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

}  // namespace evflow
