#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "lrknn/common.hpp"

namespace lrknn::detail {

// Mann-Whitney AUC with ties counted half, via rank sums. Doubled average
// ranks keep every intermediate an exact integer, so the result is
// bit-identical to the O(n^2) pairwise definition.
inline double auc_doubled_ranks(const std::vector<double>& scores,
                                const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size())
    throw domain_error("evaluation", "auc: score/label size mismatch");
  if (scores.empty()) throw domain_error("evaluation", "auc: empty input");
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i]))
      throw domain_error("evaluation", "auc: non-finite score");
    n_pos += labels[i] ? 1 : 0;
  }
  const std::size_t n = scores.size();
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw domain_error("evaluation", "auc: both labels must be present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // sum of doubled average ranks over positives
  std::uint64_t doubled_pos_ranks = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const std::uint64_t doubled_rank = static_cast<std::uint64_t>(i + 1 + j); // (i+1) + j
    for (std::size_t r = i; r < j; ++r)
      if (labels[order[r]]) doubled_pos_ranks += doubled_rank;
    i = j;
  }

  const std::uint64_t np = n_pos;
  // 2*U = 2*R_pos - n_pos*(n_pos+1)
  const std::uint64_t doubled_u = doubled_pos_ranks - np * (np + 1);
  return 0.5 * static_cast<double>(doubled_u) /
         (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

} // namespace lrknn::detail
