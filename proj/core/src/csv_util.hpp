#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "evflow/error.hpp"
#include "evflow/kv_config.hpp"

namespace evflow::detail {

// Minimal numeric CSV reader: fixed header, comma-separated, no quoting.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string_view expected_header) : in_(in) {
    std::string header;
    if (!std::getline(in_, header) || trim(header) != expected_header) {
      raise(Errc::ParseError, "expected CSV header '" + std::string(expected_header) + "'");
    }
    columns_ = 1;
    for (char c : expected_header) columns_ += (c == ',');
  }

  // Fills fields with the next non-blank row; false at end of input.
  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      const auto row = trim(line);
      if (row.empty()) continue;
      fields.clear();
      std::size_t start = 0;
      while (true) {
        const auto comma = row.find(',', start);
        fields.emplace_back(trim(row.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      if (fields.size() != columns_) {
        raise(Errc::ParseError, "line " + std::to_string(line_no_) + ": expected " +
                                    std::to_string(columns_) + " fields, got " +
                                    std::to_string(fields.size()));
      }
      return true;
    }
    return false;
  }

  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::istream& in_;
  std::size_t columns_ = 0;
  std::size_t line_no_ = 1;
};

}  // namespace evflow::detail
