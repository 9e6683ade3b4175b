#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "lrknn/common.hpp"
#include "lrknn/dataset.hpp"
#include "lrknn/math.hpp"

namespace lrknn {

/// Per-attribute retrieval weights, aligned to a schema. Always sums to 1;
/// attributes dropped upstream carry weight 0 so distances ignore them.
struct AttributeWeights {
  std::vector<double> weights; // one per schema attribute
  std::string source;          // "wald" or "uniform"
};

/// Per-case retrieval weights, aligned to the labeled case order. Stored
/// unnormalized: every use divides one weight by a sum of weights, so any
/// global normalization cancels.
struct CaseWeights {
  std::vector<double> raw; // one per labeled case
  std::string source;      // "pearson" or "uniform"
};

/// omega_a = Wald_a / sum(Wald); attributes missing from the map get 0.
/// The result is renormalized by its own sum so it adds up to 1 exactly.
inline AttributeWeights attribute_weights_from_wald(const std::map<std::string, double>& wald,
                                                    const AttributeSchema& schema) {
  AttributeWeights out;
  out.source = "wald";
  out.weights.assign(schema.size(), 0.0);
  double total = 0.0;
  for (const auto& [name, stat] : wald) {
    const std::size_t idx = schema.index_of(name);
    if (idx == AttributeSchema::npos)
      throw domain_error("weighting", "unknown attribute in Wald map: " + name);
    if (!(stat >= 0.0) || !std::isfinite(stat))
      throw domain_error("weighting", "invalid Wald statistic for " + name);
    out.weights[idx] = stat;
    total += stat;
  }
  if (total <= 0.0) throw domain_error("weighting", "all Wald statistics are zero");
  for (auto& w : out.weights) w /= total;
  double sum = 0.0;
  for (double w : out.weights) sum += w;
  for (auto& w : out.weights) w /= sum;
  return out;
}

/// omega_a = 1/|A| everywhere.
inline AttributeWeights uniform_attribute_weights(const AttributeSchema& schema) {
  if (schema.size() == 0) throw domain_error("weighting", "empty schema");
  AttributeWeights out;
  out.source = "uniform";
  out.weights.assign(schema.size(), 1.0 / static_cast<double>(schema.size()));
  return out;
}

/// Uniform weights restricted to a subset: 1/|subset| on the named
/// attributes, 0 elsewhere. Supports running unweighted retrieval over a
/// reduced attribute set.
inline AttributeWeights uniform_attribute_weights(const AttributeSchema& schema,
                                                  const std::vector<std::string>& subset) {
  if (subset.empty()) throw domain_error("weighting", "empty attribute subset");
  AttributeWeights out;
  out.source = "uniform";
  out.weights.assign(schema.size(), 0.0);
  for (const auto& name : subset) {
    const std::size_t idx = schema.index_of(name);
    if (idx == AttributeSchema::npos)
      throw domain_error("weighting", "unknown attribute in subset: " + name);
    if (out.weights[idx] != 0.0)
      throw domain_error("weighting", "duplicate attribute in subset: " + name);
    out.weights[idx] = 1.0 / static_cast<double>(subset.size());
  }
  return out;
}

/// raw_p = phi(|eps_p|), the standard normal density of the Pearson
/// residual: cases the logistic model explains best weigh the most.
/// Floored at the smallest normal double; the density underflows to 0 for
/// |eps| above ~38, and a zero weight would break the strictly-positive
/// weight contract while the intent is "negligible influence".
inline CaseWeights case_weights_from_residuals(const std::vector<double>& residuals) {
  if (residuals.empty()) throw domain_error("weighting", "no residuals");
  CaseWeights out;
  out.source = "pearson";
  out.raw.reserve(residuals.size());
  for (double eps : residuals) {
    if (!std::isfinite(eps)) throw domain_error("weighting", "non-finite residual");
    out.raw.push_back(std::max(normal_pdf(eps), std::numeric_limits<double>::min()));
  }
  return out;
}

/// All raw weights 1; fusion then degrades to pure inverse-distance voting.
inline CaseWeights uniform_case_weights(const CaseBase& labeled) {
  if (labeled.cases.empty()) throw domain_error("weighting", "empty case base");
  CaseWeights out;
  out.source = "uniform";
  out.raw.assign(labeled.size(), 1.0);
  return out;
}

/// Weight table as CSV: attribute, weight, source.
inline std::string attribute_weights_csv(const AttributeSchema& schema,
                                         const AttributeWeights& w) {
  if (w.weights.size() != schema.size())
    throw domain_error("weighting", "weights not aligned to schema");
  std::string out = "attribute,weight,source\n";
  for (std::size_t i = 0; i < schema.size(); ++i) {
    out += schema.attributes[i].name;
    out += ',';
    out += format_double(w.weights[i]);
    out += ',';
    out += w.source;
    out += '\n';
  }
  return out;
}

} // namespace lrknn
