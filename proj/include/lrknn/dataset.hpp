#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include "lrknn/common.hpp"
#include "lrknn/csv.hpp"
#include "lrknn/math.hpp"
#include "lrknn/rng.hpp"

namespace lrknn {

enum class Provenance { original, injected_random };

/// Ordered attribute list. The order is stable and defines column order
/// everywhere (CSV columns, value vectors, weight vectors).
struct AttributeSchema {
  struct Attribute {
    std::string name;
    Provenance provenance = Provenance::original;
  };

  std::vector<Attribute> attributes;

  std::size_t size() const { return attributes.size(); }

  /// Index of an attribute name, or npos.
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < attributes.size(); ++i)
      if (attributes[i].name == name) return i;
    return npos;
  }

  void check_unique() const {
    std::unordered_set<std::string> seen;
    for (const auto& a : attributes) {
      if (a.name.empty()) throw domain_error("dataset", "empty attribute name");
      if (!seen.insert(a.name).second)
        throw domain_error("dataset", "duplicate attribute name: " + a.name);
    }
  }
};

/// One case: binary attribute values plus an optional binary label.
struct Case {
  std::string id;
  std::vector<std::uint8_t> values;
  std::optional<std::uint8_t> label;

  bool labeled() const { return label.has_value(); }
};

struct CaseBase {
  AttributeSchema schema;
  std::vector<Case> cases;

  std::size_t size() const { return cases.size(); }

  void check_consistent() const {
    schema.check_unique();
    std::unordered_set<std::string> ids;
    for (const auto& c : cases) {
      if (c.values.size() != schema.size())
        throw domain_error("dataset", "case " + c.id + " has wrong value count");
      for (auto v : c.values)
        if (v != 0 && v != 1) throw domain_error("dataset", "non-binary value in case " + c.id);
      if (c.label && *c.label != 0 && *c.label != 1)
        throw domain_error("dataset", "non-binary label in case " + c.id);
      if (!ids.insert(c.id).second) throw domain_error("dataset", "duplicate case id: " + c.id);
    }
  }
};

/// Disjoint training / setting / evaluation partition of one case base.
struct TriSplit {
  CaseBase training;   // fits the logistic model
  CaseBase setting;    // tunes K
  CaseBase evaluation; // scored and compared against held-out labels
  std::uint64_t seed = 0;
};

struct InformativeAttribute {
  std::string name;
  double prevalence = 0.5;
  double coefficient = 0.0;
};

/// Recipe for a seeded synthetic case base: Bernoulli attributes and a
/// logistic label model, plus pure-noise attributes with zero effect.
struct SyntheticSpec {
  std::size_t n_cases = 0;
  std::vector<InformativeAttribute> informative;
  double intercept = 0.0;
  std::size_t noise_attributes = 0;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

/// Parse the case-base CSV format: header `id,label,<attr>...`, label cells
/// `0`, `1`, or empty (unlabeled), attribute cells `0`/`1`.
inline CaseBase load_case_base(std::istream& in) {
  auto rows = csv_read(in);
  if (rows.empty()) throw domain_error("dataset", "empty input: missing header row");
  const auto& header = rows.front();
  if (header.size() < 2 || header[0] != "id" || header[1] != "label")
    throw domain_error("dataset", "malformed header: expected `id,label,...`");

  CaseBase cb;
  for (std::size_t i = 2; i < header.size(); ++i)
    cb.schema.attributes.push_back({header[i], Provenance::original});
  cb.schema.check_unique();

  std::unordered_set<std::string> ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      throw domain_error("dataset", "row " + std::to_string(r + 1) + ": expected " +
                                        std::to_string(header.size()) + " cells, got " +
                                        std::to_string(row.size()));
    Case c;
    c.id = row[0];
    if (c.id.empty()) throw domain_error("dataset", "row " + std::to_string(r + 1) + ": empty id");
    if (!ids.insert(c.id).second) throw domain_error("dataset", "duplicate id: " + c.id);
    if (!row[1].empty()) {
      if (row[1] == "0")
        c.label = 0;
      else if (row[1] == "1")
        c.label = 1;
      else
        throw domain_error("dataset", "non-binary label for id " + c.id + ": " + row[1]);
    }
    c.values.reserve(cb.schema.size());
    for (std::size_t i = 2; i < row.size(); ++i) {
      if (row[i] == "0")
        c.values.push_back(0);
      else if (row[i] == "1")
        c.values.push_back(1);
      else
        throw domain_error("dataset", "non-binary value for id " + c.id + ", attribute " +
                                          cb.schema.attributes[i - 2].name + ": " + row[i]);
    }
    cb.cases.push_back(std::move(c));
  }
  return cb;
}

inline void save_case_base(const CaseBase& cb, std::ostream& out) {
  std::vector<std::string> header = {"id", "label"};
  for (const auto& a : cb.schema.attributes) header.push_back(a.name);
  out << csv_join(header) << '\n';
  for (const auto& c : cb.cases) {
    std::vector<std::string> row;
    row.reserve(header.size());
    row.push_back(c.id);
    row.push_back(c.label ? std::to_string(static_cast<int>(*c.label)) : std::string());
    for (auto v : c.values) row.push_back(v ? "1" : "0");
    out << csv_join(row) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ValidationFinding {
  enum class Severity { info, fatal };
  Severity severity = Severity::info;
  std::string message;
};

struct ValidationReport {
  std::size_t case_count = 0;
  std::size_t labeled_count = 0;
  std::size_t attribute_count = 0;
  std::optional<double> label_prevalence;
  std::vector<std::string> constant_attributes;
  std::vector<ValidationFinding> findings;

  bool fatal() const {
    for (const auto& f : findings)
      if (f.severity == ValidationFinding::Severity::fatal) return true;
    return false;
  }
};

/// Report-only inspection: counts, label prevalence, and constant attributes
/// (all-0 or all-1 among labeled cases). A constant attribute is fatal for
/// fitting since its standard error is undefined.
inline ValidationReport validate(const CaseBase& cb) {
  ValidationReport rep;
  rep.case_count = cb.size();
  rep.attribute_count = cb.schema.size();
  if (cb.cases.empty()) {
    rep.findings.push_back({ValidationFinding::Severity::info, "no cases"});
    return rep;
  }

  std::size_t positives = 0;
  std::vector<std::size_t> ones(cb.schema.size(), 0);
  for (const auto& c : cb.cases) {
    if (!c.labeled()) continue;
    ++rep.labeled_count;
    positives += *c.label;
    for (std::size_t a = 0; a < c.values.size(); ++a) ones[a] += c.values[a];
  }
  if (rep.labeled_count > 0) {
    rep.label_prevalence = static_cast<double>(positives) / static_cast<double>(rep.labeled_count);
    for (std::size_t a = 0; a < cb.schema.size(); ++a) {
      if (ones[a] == 0 || ones[a] == rep.labeled_count) {
        rep.constant_attributes.push_back(cb.schema.attributes[a].name);
        rep.findings.push_back({ValidationFinding::Severity::fatal,
                                "constant attribute: " + cb.schema.attributes[a].name});
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Tri-split and homogeneity check
// ---------------------------------------------------------------------------

/// Uniformly random partition into (training, setting, evaluation) of the
/// given sizes. Deterministic for a given seed.
inline TriSplit random_split(const CaseBase& cb, std::size_t n_train, std::size_t n_setting,
                             std::size_t n_eval, std::uint64_t seed) {
  if (n_train + n_setting + n_eval != cb.size())
    throw domain_error("dataset", "split sizes do not sum to the case count");
  for (const auto& c : cb.cases)
    if (!c.labeled()) throw domain_error("dataset", "unlabeled case in split input: " + c.id);

  std::vector<std::size_t> order(cb.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed, "split");
  rng.shuffle(order);

  TriSplit split;
  split.seed = seed;
  split.training.schema = cb.schema;
  split.setting.schema = cb.schema;
  split.evaluation.schema = cb.schema;
  for (std::size_t i = 0; i < order.size(); ++i) {
    CaseBase& part = i < n_train                ? split.training
                     : i < n_train + n_setting ? split.setting
                                                : split.evaluation;
    part.cases.push_back(cb.cases[order[i]]);
  }
  return split;
}

struct ChiSquareRow {
  std::string name; // attribute name, or "label" for the label row
  double statistic = 0.0;
  double p_value = 1.0;
  bool flagged = false;
  bool degenerate = false; // zero expected count with nonzero observed: test skipped
};

struct ChiSquareReport {
  double alpha = 0.05;
  std::vector<ChiSquareRow> rows; // one per attribute, then the label row
};

namespace detail {

// Pearson chi-square on a 3x2 table: parts x {ones, zeros}, df = 2.
inline ChiSquareRow chi_square_3x2(const std::string& name, const std::size_t part_sizes[3],
                                   const std::size_t part_ones[3], double alpha) {
  ChiSquareRow row;
  row.name = name;
  const double total =
      static_cast<double>(part_sizes[0]) + part_sizes[1] + part_sizes[2];
  const double col_ones =
      static_cast<double>(part_ones[0]) + part_ones[1] + part_ones[2];
  const double col_zeros = total - col_ones;

  double stat = 0.0;
  for (int p = 0; p < 3; ++p) {
    const double n = static_cast<double>(part_sizes[p]);
    const double observed[2] = {static_cast<double>(part_ones[p]),
                                n - static_cast<double>(part_ones[p])};
    const double expected[2] = {n * col_ones / total, n * col_zeros / total};
    for (int c = 0; c < 2; ++c) {
      if (expected[c] == 0.0) {
        if (observed[c] != 0.0) {
          row.degenerate = true;
          return row;
        }
        continue; // 0 observed, 0 expected: contributes nothing
      }
      const double d = observed[c] - expected[c];
      stat += d * d / expected[c];
    }
  }
  row.statistic = stat;
  row.p_value = chi_square_upper_tail(stat, 2.0);
  row.flagged = row.p_value < alpha;
  return row;
}

} // namespace detail

/// Per-attribute 3x2 homogeneity test across the three split parts, plus a
/// label-distribution row. df = 2; p-values from the upper regularized
/// incomplete gamma function.
inline ChiSquareReport chi_square_homogeneity(const TriSplit& split, double alpha) {
  const CaseBase* parts[3] = {&split.training, &split.setting, &split.evaluation};
  for (const auto* p : parts)
    if (p->cases.empty()) throw domain_error("dataset", "chi-square check: empty split part");

  ChiSquareReport report;
  report.alpha = alpha;
  const AttributeSchema& schema = split.training.schema;

  std::size_t sizes[3];
  for (int p = 0; p < 3; ++p) sizes[p] = parts[p]->size();

  for (std::size_t a = 0; a < schema.size(); ++a) {
    std::size_t ones[3] = {0, 0, 0};
    for (int p = 0; p < 3; ++p)
      for (const auto& c : parts[p]->cases) ones[p] += c.values[a];
    report.rows.push_back(detail::chi_square_3x2(schema.attributes[a].name, sizes, ones, alpha));
  }

  std::size_t label_ones[3] = {0, 0, 0};
  for (int p = 0; p < 3; ++p)
    for (const auto& c : parts[p]->cases) label_ones[p] += c.label.value_or(0);
  report.rows.push_back(detail::chi_square_3x2("label", sizes, label_ones, alpha));
  return report;
}

// ---------------------------------------------------------------------------
// Random attributes and synthetic generation
// ---------------------------------------------------------------------------

/// Append `count` Bernoulli(0.5) attributes named rnd_001, rnd_002, ...
/// Existing columns are untouched.
inline CaseBase inject_random_attributes(const CaseBase& cb, std::size_t count,
                                         std::uint64_t seed) {
  CaseBase out = cb;
  Rng rng(seed, "inject");
  for (std::size_t j = 0; j < count; ++j) {
    char name[32];
    std::snprintf(name, sizeof(name), "rnd_%03zu", j + 1);
    if (out.schema.index_of(name) != AttributeSchema::npos)
      throw domain_error("dataset", std::string("injected attribute name collides: ") + name);
    out.schema.attributes.push_back({name, Provenance::injected_random});
    for (auto& c : out.cases) c.values.push_back(rng.bernoulli(0.5) ? 1 : 0);
  }
  return out;
}

/// Seeded synthetic case base: attributes i.i.d. Bernoulli(prevalence),
/// label Bernoulli(sigmoid(intercept + sum of coefficients over set
/// attributes)). Noise attributes are Bernoulli(0.5) with zero effect.
inline CaseBase generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_cases < 1) throw domain_error("dataset", "synthetic spec: n_cases must be >= 1");
  for (const auto& attr : spec.informative)
    if (!(attr.prevalence > 0.0 && attr.prevalence < 1.0))
      throw domain_error("dataset",
                         "synthetic spec: prevalence outside (0,1) for " + attr.name);

  CaseBase cb;
  for (const auto& attr : spec.informative)
    cb.schema.attributes.push_back({attr.name, Provenance::original});
  for (std::size_t j = 0; j < spec.noise_attributes; ++j) {
    char name[32];
    std::snprintf(name, sizeof(name), "noise_%03zu", j + 1);
    cb.schema.attributes.push_back({name, Provenance::original});
  }
  cb.schema.check_unique();

  const int id_width = std::max<int>(4, static_cast<int>(std::to_string(spec.n_cases).size()));
  Rng rng(spec.seed, "synth");
  cb.cases.reserve(spec.n_cases);
  for (std::size_t i = 0; i < spec.n_cases; ++i) {
    Case c;
    char id[32];
    std::snprintf(id, sizeof(id), "c%0*zu", id_width, i + 1);
    c.id = id;
    c.values.reserve(cb.schema.size());
    double eta = spec.intercept;
    for (const auto& attr : spec.informative) {
      const std::uint8_t v = rng.bernoulli(attr.prevalence) ? 1 : 0;
      c.values.push_back(v);
      if (v) eta += attr.coefficient;
    }
    for (std::size_t j = 0; j < spec.noise_attributes; ++j)
      c.values.push_back(rng.bernoulli(0.5) ? 1 : 0);
    c.label = rng.bernoulli(sigmoid(eta)) ? 1 : 0;
    cb.cases.push_back(std::move(c));
  }
  return cb;
}

} // namespace lrknn
