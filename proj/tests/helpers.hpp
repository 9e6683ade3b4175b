#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "lrknn/dataset.hpp"

namespace test_helpers {

// Build a case base from rows of {label, v1, v2, ...}; label -1 = unlabeled.
// Ids are c001, c002, ... in row order.
inline lrknn::CaseBase make_base(const std::vector<std::string>& attrs,
                                 const std::vector<std::vector<int>>& rows) {
  lrknn::CaseBase cb;
  for (const auto& a : attrs)
    cb.schema.attributes.push_back({a, lrknn::Provenance::original});
  int i = 0;
  for (const auto& r : rows) {
    lrknn::Case c;
    char id[16];
    std::snprintf(id, sizeof(id), "c%03d", ++i);
    c.id = id;
    if (r[0] >= 0) c.label = static_cast<std::uint8_t>(r[0]);
    for (std::size_t j = 1; j < r.size(); ++j)
      c.values.push_back(static_cast<std::uint8_t>(r[j]));
    cb.cases.push_back(std::move(c));
  }
  return cb;
}

} // namespace test_helpers
