#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lrknn/common.hpp"
#include "lrknn/csv.hpp"
#include "lrknn/detail/auc_core.hpp"
#include "lrknn/rng.hpp"

namespace lrknn {

struct ScoredSet {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels; // 0/1

  std::size_t size() const noexcept { return scores.size(); }
};

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

struct AucEstimate {
  double point_auc = 0.0;
  double boot_mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t replicates = 0; // successful resamples
  std::uint64_t seed = 0;
  std::vector<double> replicate_aucs; // per successful replicate, index order
};

/// Mann-Whitney AUC, ties counted 0.5. Exactly equal to the pairwise
/// definition (see detail::auc_doubled_ranks).
inline double auc(const ScoredSet& s) { return detail::auc_doubled_ranks(s.scores, s.labels); }

/// ROC staircase: one point per distinct score, scanned from the highest
/// threshold down, starting at (+inf, 0, 0) and ending at (1, 1). The
/// trapezoidal area under the points equals auc().
inline std::vector<RocPoint> roc_points(const ScoredSet& s) {
  if (s.scores.size() != s.labels.size())
    throw domain_error("evaluation", "roc_points: score/label size mismatch");
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s.scores[i]))
      throw domain_error("evaluation", "roc_points: non-finite score");
    n_pos += s.labels[i] ? 1 : 0;
  }
  const std::size_t n_neg = s.size() - n_pos;
  if (s.size() == 0 || n_pos == 0 || n_neg == 0)
    throw domain_error("evaluation", "roc_points: both labels must be present");

  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return s.scores[a] > s.scores[b]; });

  std::vector<RocPoint> points;
  points.push_back(RocPoint{std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < s.size()) {
    const double t = s.scores[order[i]];
    std::size_t j = i;
    while (j < s.size() && s.scores[order[j]] == t) {
      if (s.labels[order[j]])
        ++tp;
      else
        ++fp;
      ++j;
    }
    points.push_back(RocPoint{t, static_cast<double>(fp) / static_cast<double>(n_neg),
                              static_cast<double>(tp) / static_cast<double>(n_pos)});
    i = j;
  }
  return points;
}

namespace detail {

// linear interpolation between order statistics at rank h = (n-1)q + 1
inline double percentile_sorted(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = (static_cast<double>(n) - 1.0) * q + 1.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1]);
}

} // namespace detail

/// Bootstrap the AUC: k resamples with replacement, each scored by auc();
/// single-class resamples are redrawn (up to 100 tries, then dropped).
/// Point estimate, mean of replicate AUCs, and the interpolated 2.5/97.5
/// percentile interval. Deterministic given the seed: each replicate uses
/// its own derived RNG stream and aggregation is in replicate-index order,
/// so the `threads` count never changes the result.
inline AucEstimate bootstrap_auc(const ScoredSet& s, std::size_t k, std::uint64_t seed,
                                 unsigned threads = 1) {
  if (k < 1) throw domain_error("evaluation", "bootstrap_auc: need k >= 1 replicates");
  AucEstimate est;
  est.point_auc = auc(s); // also rejects single-class input
  est.seed = seed;

  const std::size_t n = s.size();
  std::vector<std::optional<double>> slots(k);
  auto run_replicate = [&](std::size_t b) {
    Rng rng(seed, "bootstrap", b);
    ScoredSet resample;
    resample.scores.resize(n);
    resample.labels.resize(n);
    for (int attempt = 0; attempt <= 100; ++attempt) {
      std::size_t n_pos = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = rng.below(n);
        resample.scores[i] = s.scores[j];
        resample.labels[i] = s.labels[j];
        n_pos += s.labels[j] ? 1 : 0;
      }
      if (n_pos > 0 && n_pos < n) {
        slots[b] = auc(resample);
        return;
      }
    }
    // degenerate input: this replicate never held both labels
  };

  if (threads <= 1 || k == 1) {
    for (std::size_t b = 0; b < k; ++b) run_replicate(b);
  } else {
    const unsigned n_threads = std::min<unsigned>(threads, static_cast<unsigned>(k));
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t b = t; b < k; b += n_threads) run_replicate(b);
      });
    }
    for (auto& th : pool) th.join();
  }

  est.replicate_aucs.reserve(k);
  for (std::size_t b = 0; b < k; ++b)
    if (slots[b]) est.replicate_aucs.push_back(*slots[b]);
  est.replicates = est.replicate_aucs.size();
  if (est.replicates == 0)
    throw domain_error("evaluation", "bootstrap_auc: every replicate failed");

  double sum = 0.0;
  for (double v : est.replicate_aucs) sum += v;
  est.boot_mean = sum / static_cast<double>(est.replicates);

  std::vector<double> sorted = est.replicate_aucs;
  std::sort(sorted.begin(), sorted.end());
  est.ci_low = detail::percentile_sorted(sorted, 0.025);
  est.ci_high = detail::percentile_sorted(sorted, 0.975);
  return est;
}

inline nlohmann::json auc_report_json(const AucEstimate& est) {
  return nlohmann::json{{"point_auc", est.point_auc},
                        {"boot_mean", est.boot_mean},
                        {"ci_low", est.ci_low},
                        {"ci_high", est.ci_high},
                        {"replicates", est.replicates},
                        {"seed", est.seed},
                        {"replicate_aucs", est.replicate_aucs}};
}

inline std::string roc_csv(const std::vector<RocPoint>& points) {
  std::string out = "threshold,fpr,tpr\n";
  for (const auto& p : points) {
    out += format_double(p.threshold);
    out += ',';
    out += format_double(p.fpr);
    out += ',';
    out += format_double(p.tpr);
    out += '\n';
  }
  return out;
}

/// Parse a scored set from CSV with a header naming at least `score` and
/// `label` columns (extra columns are carried along untouched).
inline ScoredSet scored_set_from_csv(std::istream& in) {
  auto rows = csv_read(in);
  if (rows.empty()) throw domain_error("evaluation", "scores CSV: empty file");
  const auto& header = rows.front();
  std::size_t score_col = header.size(), label_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "score") score_col = c;
    if (header[c] == "label") label_col = c;
  }
  if (score_col == header.size() || label_col == header.size())
    throw domain_error("evaluation", "scores CSV: header must name score and label columns");
  ScoredSet s;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      throw domain_error("evaluation",
                         "scores CSV: row " + std::to_string(r + 1) + " has wrong cell count");
    try {
      s.scores.push_back(std::stod(row[score_col]));
    } catch (const std::exception&) {
      throw domain_error("evaluation", "scores CSV: bad score in row " + std::to_string(r + 1));
    }
    const std::string& lab = row[label_col];
    if (lab == "0")
      s.labels.push_back(0);
    else if (lab == "1")
      s.labels.push_back(1);
    else
      throw domain_error("evaluation",
                         "scores CSV: label must be 0 or 1 in row " + std::to_string(r + 1));
  }
  if (s.scores.empty()) throw domain_error("evaluation", "scores CSV: no data rows");
  return s;
}

} // namespace lrknn
