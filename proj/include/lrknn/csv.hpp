#pragma once

#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "lrknn/common.hpp"

namespace lrknn {

// Minimal CSV support for the file formats used here: comma separated,
// header row, no quoting. Fields therefore must not contain commas or
// newlines; writers enforce that.

inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r')
    fields.back().pop_back();
  return fields;
}

/// Read all rows. Blank lines are skipped; the first row is returned too
/// (callers treat it as the header).
inline std::vector<std::vector<std::string>> csv_read(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(csv_split(line));
  }
  return rows;
}

inline void csv_check_field(const std::string& field) {
  if (field.find(',') != std::string::npos || field.find('\n') != std::string::npos ||
      field.find('\r') != std::string::npos)
    throw domain_error("csv", "field contains separator or newline: " + field);
}

inline std::string csv_join(const std::vector<std::string>& fields) {
  std::ostringstream out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    csv_check_field(fields[i]);
    if (i) out << ',';
    out << fields[i];
  }
  return out.str();
}

} // namespace lrknn
