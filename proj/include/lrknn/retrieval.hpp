#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrknn/common.hpp"
#include "lrknn/dataset.hpp"
#include "lrknn/detail/auc_core.hpp"
#include "lrknn/weighting.hpp"

namespace lrknn {

struct Neighbor {
  std::string case_id;
  double distance = 0.0;
  std::uint8_t label = 0;
  double raw_case_weight = 1.0;
};

enum class TieRule { ascending_id };
enum class ZeroDistanceRule { analytic_limit };

struct RetrievalConfig {
  std::size_t k = 1;
  std::size_t k_max = 1;
  TieRule tie_rule = TieRule::ascending_id;
  ZeroDistanceRule zero_distance_rule = ZeroDistanceRule::analytic_limit;
};

struct Prediction {
  std::string case_id;
  double score = 0.0;
  std::vector<Neighbor> neighbors;
  // true when every retrieved neighbor sits at (numerically) maximal
  // distance: the query shares nothing with the case base
  bool low_confidence = false;
};

/// Default tuning bound: generous but tractable, never above the pool size.
inline std::size_t default_k_max(std::size_t n_labeled) {
  if (n_labeled == 0) return 1;
  const auto root = static_cast<std::size_t>(std::sqrt(static_cast<double>(n_labeled)));
  std::size_t k = std::min<std::size_t>(50, 3 * root);
  k = std::min(k, n_labeled);
  return std::max<std::size_t>(k, 1);
}

/// Weighted Hamming disagreement: d(p,q) = sum_a w_a * (p_a XOR q_a).
/// In [0,1] whenever the weights sum to 1; 0 iff the vectors agree on
/// every positively weighted attribute.
inline double distance(const std::vector<std::uint8_t>& p, const std::vector<std::uint8_t>& q,
                       const AttributeWeights& w) {
  if (p.size() != w.weights.size() || q.size() != w.weights.size())
    throw domain_error("retrieval", "distance: vectors do not match the weight schema");
  double d = 0.0;
  for (std::size_t a = 0; a < w.weights.size(); ++a)
    if (p[a] != q[a]) d += w.weights[a];
  return d;
}

/// The k labeled cases closest to the query, sorted by (distance, id
/// ascending). Equal distances break by ascending case id so the result
/// never depends on case-list order.
inline std::vector<Neighbor> select_neighbors(const Case& query, const CaseBase& labeled,
                                              const AttributeWeights& w,
                                              const CaseWeights& case_weights, std::size_t k,
                                              TieRule = TieRule::ascending_id) {
  if (k == 0) throw domain_error("retrieval", "select_neighbors: k must be >= 1");
  if (k > labeled.size())
    throw domain_error("retrieval", "select_neighbors: k exceeds the labeled pool size");
  if (case_weights.raw.size() != labeled.size())
    throw domain_error("retrieval", "select_neighbors: case weights not aligned to pool");
  if (labeled.schema.size() != w.weights.size())
    throw domain_error("retrieval", "select_neighbors: weights do not match the pool schema");

  const std::size_t n = labeled.size();
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Case& c = labeled.cases[i];
    if (!c.labeled())
      throw domain_error("retrieval", "select_neighbors: unlabeled case " + c.id);
    dist[i] = distance(query.values, c.values, w);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return labeled.cases[a].id < labeled.cases[b].id;
  });

  std::vector<Neighbor> out;
  out.reserve(k);
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t i = order[r];
    out.push_back(Neighbor{labeled.cases[i].id, dist[i], *labeled.cases[i].label,
                           case_weights.raw[i]});
  }
  return out;
}

/// Inverse-distance, case-weighted label fusion:
///   s = sum(w * d^-1 * y) / sum(w * d^-1)
/// over the neighbor list, summed in the order given. Exact matches take
/// the analytic d^-1 -> inf limit: the score is computed over the
/// zero-distance neighbors alone, weighted by their raw case weights.
inline double fuse(const std::vector<Neighbor>& neighbors,
                   ZeroDistanceRule = ZeroDistanceRule::analytic_limit) {
  if (neighbors.empty()) throw domain_error("retrieval", "fuse: empty neighbor list");
  bool any_zero = false;
  for (const auto& nb : neighbors) {
    if (!(nb.distance >= 0.0) || !std::isfinite(nb.distance))
      throw domain_error("retrieval", "fuse: invalid distance for " + nb.case_id);
    if (!(nb.raw_case_weight > 0.0) || !std::isfinite(nb.raw_case_weight))
      throw domain_error("retrieval", "fuse: invalid case weight for " + nb.case_id);
    if (nb.distance == 0.0) any_zero = true;
  }
  double num = 0.0, den = 0.0;
  if (any_zero) {
    for (const auto& nb : neighbors) {
      if (nb.distance != 0.0) continue;
      num += nb.raw_case_weight * static_cast<double>(nb.label);
      den += nb.raw_case_weight;
    }
  } else {
    for (const auto& nb : neighbors) {
      const double iw = nb.raw_case_weight / nb.distance;
      num += iw * static_cast<double>(nb.label);
      den += iw;
    }
  }
  return std::clamp(num / den, 0.0, 1.0);
}

/// select_neighbors then fuse, with a low-confidence note when even the
/// nearest neighbor disagrees (numerically) everywhere.
inline Prediction predict(const Case& query, const CaseBase& labeled,
                          const AttributeWeights& w_a, const CaseWeights& w_p,
                          const RetrievalConfig& cfg) {
  if (cfg.k < 1 || cfg.k > cfg.k_max || cfg.k_max > labeled.size())
    throw domain_error("retrieval", "predict: need 1 <= k <= k_max <= pool size");
  Prediction p;
  p.case_id = query.id;
  p.neighbors = select_neighbors(query, labeled, w_a, w_p, cfg.k, cfg.tie_rule);
  p.score = fuse(p.neighbors, cfg.zero_distance_rule);
  double min_d = p.neighbors.front().distance;
  for (const auto& nb : p.neighbors) min_d = std::min(min_d, nb.distance);
  p.low_confidence = min_d >= 1.0 - 1e-9;
  return p;
}

struct TuneResult {
  std::size_t k = 1;
  std::vector<double> auc_by_k; // metric value for K = 1..k_max
};

namespace detail {

// index of the first value within `tol` of the maximum
inline std::size_t smallest_argmax(const std::vector<double>& values, double tol) {
  double best = values.front();
  for (double v : values) best = std::max(best, v);
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] > best - tol) return i;
  return 0; // unreachable
}

} // namespace detail

/// Pick the smallest K in 1..k_max maximizing AUC over the setting set,
/// scoring every setting case against the labeled pool. Ties within 1e-12
/// of the maximum go to the smaller K. Scores per K are built by extending
/// the fusion sums one neighbor at a time, which reproduces fuse() on the
/// first K neighbors bit for bit.
inline TuneResult tune_k(const CaseBase& labeled, const CaseBase& setting,
                         const AttributeWeights& w_a, const CaseWeights& w_p,
                         std::size_t k_max) {
  if (setting.cases.empty()) throw domain_error("retrieval", "tune_k: empty setting set");
  if (k_max < 1 || k_max > labeled.size())
    throw domain_error("retrieval", "tune_k: need 1 <= k_max <= pool size");

  const std::size_t n_s = setting.size();
  std::vector<std::uint8_t> setting_labels(n_s);
  for (std::size_t q = 0; q < n_s; ++q) {
    if (!setting.cases[q].labeled())
      throw domain_error("retrieval", "tune_k: unlabeled setting case " + setting.cases[q].id);
    setting_labels[q] = *setting.cases[q].label;
  }

  // scores[K-1][q] = fuse(first K neighbors of setting case q)
  std::vector<std::vector<double>> scores(k_max, std::vector<double>(n_s));
  for (std::size_t q = 0; q < n_s; ++q) {
    auto nbs = select_neighbors(setting.cases[q], labeled, w_a, w_p, labeled.size());
    double num = 0.0, den = 0.0;        // inverse-distance sums
    double znum = 0.0, zden = 0.0;      // zero-distance sums
    bool any_zero = false;
    for (std::size_t r = 0; r < k_max; ++r) {
      const Neighbor& nb = nbs[r];
      if (!(nb.raw_case_weight > 0.0) || !std::isfinite(nb.raw_case_weight))
        throw domain_error("retrieval", "tune_k: invalid case weight for " + nb.case_id);
      if (nb.distance == 0.0) {
        any_zero = true;
        znum += nb.raw_case_weight * static_cast<double>(nb.label);
        zden += nb.raw_case_weight;
      } else {
        const double iw = nb.raw_case_weight / nb.distance;
        num += iw * static_cast<double>(nb.label);
        den += iw;
      }
      scores[r][q] = any_zero ? std::clamp(znum / zden, 0.0, 1.0)
                              : std::clamp(num / den, 0.0, 1.0);
    }
  }

  TuneResult result;
  result.auc_by_k.resize(k_max);
  for (std::size_t r = 0; r < k_max; ++r)
    result.auc_by_k[r] = detail::auc_doubled_ranks(scores[r], setting_labels);
  result.k = detail::smallest_argmax(result.auc_by_k, 1e-12) + 1;
  return result;
}

/// Prediction export: case_id, score and, when known, the true label.
inline std::string predictions_csv(const std::vector<Prediction>& preds,
                                   const std::vector<std::optional<std::uint8_t>>& labels) {
  if (labels.size() != preds.size())
    throw domain_error("retrieval", "predictions_csv: label column misaligned");
  std::string out = "case_id,score,label\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out += preds[i].case_id;
    out += ',';
    out += format_double(preds[i].score);
    out += ',';
    if (labels[i]) out += std::to_string(static_cast<int>(*labels[i]));
    out += '\n';
  }
  return out;
}

/// Per-query neighbor trace for explainability.
inline nlohmann::json neighbor_trace_json(const Prediction& p) {
  nlohmann::json nbs = nlohmann::json::array();
  for (const auto& nb : p.neighbors)
    nbs.push_back({{"case_id", nb.case_id},
                   {"distance", nb.distance},
                   {"label", static_cast<int>(nb.label)},
                   {"raw_case_weight", nb.raw_case_weight}});
  return nlohmann::json{{"case_id", p.case_id},
                        {"score", p.score},
                        {"low_confidence", p.low_confidence},
                        {"neighbors", std::move(nbs)}};
}

} // namespace lrknn
