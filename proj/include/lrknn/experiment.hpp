#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrknn/common.hpp"
#include "lrknn/dataset.hpp"
#include "lrknn/evaluation.hpp"
#include "lrknn/logistic.hpp"
#include "lrknn/retrieval.hpp"
#include "lrknn/rng.hpp"
#include "lrknn/weighting.hpp"

namespace lrknn {

// ---------------------------------------------------------------------------
// Variants and modes
// ---------------------------------------------------------------------------

/// The five decision algorithms: plain logistic scoring, plain soft K-NN,
/// and K-NN with attribute weights, case weights, or both.
enum class VariantId { lr, cbr, cbr_wa, cbr_wp, cbr_wa_wp };

inline const std::vector<VariantId>& all_variants() {
  static const std::vector<VariantId> v{VariantId::lr, VariantId::cbr, VariantId::cbr_wa,
                                        VariantId::cbr_wp, VariantId::cbr_wa_wp};
  return v;
}

inline std::string variant_name(VariantId v) {
  switch (v) {
    case VariantId::lr: return "LR";
    case VariantId::cbr: return "CBR";
    case VariantId::cbr_wa: return "CBR+WA";
    case VariantId::cbr_wp: return "CBR+WP";
    case VariantId::cbr_wa_wp: return "CBR+WA+WP";
  }
  throw domain_error("experiment", "unreachable variant");
}

inline VariantId parse_variant(const std::string& name) {
  for (VariantId v : all_variants())
    if (variant_name(v) == name) return v;
  throw domain_error("experiment", "unknown variant: " + name);
}

enum class AttributeMode { all, selected };

inline std::string mode_name(AttributeMode m) {
  return m == AttributeMode::all ? "all" : "selected";
}

inline AttributeMode parse_mode(const std::string& name) {
  if (name == "all") return AttributeMode::all;
  if (name == "selected") return AttributeMode::selected;
  throw domain_error("experiment", "unknown attribute mode: " + name);
}

// ---------------------------------------------------------------------------
// Plan
// ---------------------------------------------------------------------------

struct ExperimentPlan {
  std::string data_path;                  // CSV case base; empty when synthetic
  std::optional<SyntheticSpec> synthetic; // generated case base
  bool synth_seed_explicit = false;       // spec pinned its own seed
  std::size_t n_train = 0, n_setting = 0, n_eval = 0;
  std::uint64_t seed = 1;
  std::vector<std::size_t> noise_levels{0}; // injected-attribute counts (scenarios)
  std::vector<AttributeMode> modes{AttributeMode::all};
  std::vector<VariantId> variants = all_variants();
  std::size_t k_max = 0; // 0: default rule from the pool size
  std::size_t replicates = 500;
};

inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j, bool* seed_explicit) {
  SyntheticSpec spec;
  try {
    spec.n_cases = j.at("n_cases").get<std::size_t>();
    spec.intercept = j.value("intercept", 0.0);
    spec.noise_attributes = j.value("noise_attributes", std::size_t{0});
    for (const auto& a : j.at("informative")) {
      InformativeAttribute attr;
      attr.name = a.at("name").get<std::string>();
      attr.prevalence = a.at("prevalence").get<double>();
      attr.coefficient = a.at("coefficient").get<double>();
      spec.informative.push_back(std::move(attr));
    }
    if (j.contains("seed")) {
      spec.seed = j.at("seed").get<std::uint64_t>();
      if (seed_explicit) *seed_explicit = true;
    } else if (seed_explicit) {
      *seed_explicit = false;
    }
  } catch (const nlohmann::json::exception& e) {
    throw domain_error("experiment", std::string("synthetic spec JSON: ") + e.what());
  }
  return spec;
}

inline nlohmann::json synthetic_spec_to_json(const SyntheticSpec& spec) {
  nlohmann::json informative = nlohmann::json::array();
  for (const auto& a : spec.informative)
    informative.push_back(
        {{"name", a.name}, {"prevalence", a.prevalence}, {"coefficient", a.coefficient}});
  return nlohmann::json{{"n_cases", spec.n_cases},
                        {"intercept", spec.intercept},
                        {"informative", std::move(informative)},
                        {"noise_attributes", spec.noise_attributes},
                        {"seed", spec.seed}};
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(s);
  while (std::getline(in, field, ',')) {
    field = trim(field);
    if (!field.empty()) out.push_back(field);
  }
  return out;
}

inline std::size_t parse_size(const std::string& s, const std::string& key) {
  try {
    const long long v = std::stoll(s);
    if (v < 0) throw std::out_of_range("negative");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw domain_error("experiment", "plan: bad integer for " + key + ": " + s);
  }
}

} // namespace detail

/// Parse the key=value plan document. Keys: data (CSV path or synth:SPEC.json),
/// sizes (train,setting,eval), seed, noise, modes, variants, k_max,
/// replicates. Blank lines and #-comments are skipped. Relative paths are
/// resolved against `base_dir`.
inline ExperimentPlan parse_plan(std::istream& in, const std::string& base_dir = ".") {
  ExperimentPlan plan;
  bool have_data = false, have_sizes = false;
  auto resolve = [&](const std::string& p) {
    if (p.empty() || p.front() == '/') return p;
    return base_dir + "/" + p;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw domain_error("experiment", "plan line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));

    if (key == "data") {
      have_data = true;
      if (value.rfind("synth:", 0) == 0) {
        const std::string spec_path = resolve(value.substr(6));
        std::ifstream f(spec_path);
        if (!f) throw domain_error("experiment", "plan: cannot open synthetic spec " + spec_path);
        nlohmann::json j;
        try {
          f >> j;
        } catch (const nlohmann::json::exception& e) {
          throw domain_error("experiment", "plan: synthetic spec " + spec_path + ": " + e.what());
        }
        plan.synthetic = synthetic_spec_from_json(j, &plan.synth_seed_explicit);
      } else {
        plan.data_path = resolve(value);
      }
    } else if (key == "sizes") {
      const auto parts = detail::split_list(value);
      if (parts.size() != 3)
        throw domain_error("experiment", "plan: sizes needs train,setting,eval");
      plan.n_train = detail::parse_size(parts[0], "sizes");
      plan.n_setting = detail::parse_size(parts[1], "sizes");
      plan.n_eval = detail::parse_size(parts[2], "sizes");
      have_sizes = true;
    } else if (key == "seed") {
      plan.seed = static_cast<std::uint64_t>(detail::parse_size(value, "seed"));
    } else if (key == "noise") {
      plan.noise_levels.clear();
      for (const auto& p : detail::split_list(value))
        plan.noise_levels.push_back(detail::parse_size(p, "noise"));
      if (plan.noise_levels.empty())
        throw domain_error("experiment", "plan: noise list is empty");
    } else if (key == "modes") {
      plan.modes.clear();
      for (const auto& p : detail::split_list(value)) plan.modes.push_back(parse_mode(p));
      if (plan.modes.empty()) throw domain_error("experiment", "plan: modes list is empty");
    } else if (key == "variants") {
      plan.variants.clear();
      for (const auto& p : detail::split_list(value)) plan.variants.push_back(parse_variant(p));
      if (plan.variants.empty()) throw domain_error("experiment", "plan: variants list is empty");
    } else if (key == "k_max") {
      plan.k_max = detail::parse_size(value, "k_max");
    } else if (key == "replicates") {
      plan.replicates = detail::parse_size(value, "replicates");
    } else {
      throw domain_error("experiment", "plan: unknown key: " + key);
    }
  }
  if (!have_data) throw domain_error("experiment", "plan: missing data");
  if (!have_sizes) throw domain_error("experiment", "plan: missing sizes");
  return plan;
}

inline ExperimentPlan load_plan(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw domain_error("experiment", "cannot open plan file " + path);
  std::string dir = ".";
  const std::size_t slash = path.find_last_of('/');
  if (slash != std::string::npos) dir = path.substr(0, slash);
  return parse_plan(f, dir);
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

/// Per-(scenario, mode) artifacts shared by that group's variant rows.
struct CellGroup {
  std::size_t noise = 0;
  AttributeMode mode = AttributeMode::all;
  std::vector<std::string> attribute_names; // augmented schema, in order
  bool fit_failed = false;
  std::string fit_error;
  LogisticModel model;
  std::vector<double> wald_weights; // aligned to attribute_names; empty if unavailable
  std::string wald_error;           // why, when empty
};

struct ResultRow {
  std::size_t noise = 0;
  AttributeMode mode = AttributeMode::all;
  VariantId variant = VariantId::lr;
  bool failed = false;
  std::string error;
  AucEstimate auc;
  std::size_t chosen_k = 0;                // 0 for LR
  std::vector<double> attribute_weights;   // the w_a this variant retrieved with
  double runtime_seconds = 0.0;            // informational; never written to reports
};

struct ResultTable {
  ExperimentPlan plan;
  std::uint64_t split_seed = 0;
  std::uint64_t synth_seed = 0; // 0 when data came from a file
  std::vector<CellGroup> groups;
  std::vector<ResultRow> rows;
};

struct VariantRun {
  ScoredSet scored; // over the evaluation set
  std::size_t chosen_k = 0;
  AttributeWeights w_a;
};

/// Score the evaluation set under one algorithm variant. The attribute
/// mode lives in the model: retrieval only sees the model's selected
/// attributes (others get weight 0). K-NN variants tune K on the setting
/// set with the same weights they evaluate with.
inline VariantRun run_variant(VariantId v, const TriSplit& split, const LogisticModel& model,
                              std::size_t k_max) {
  VariantRun run;
  const CaseBase& train = split.training;
  const CaseBase& eval_set = split.evaluation;

  run.scored.labels.reserve(eval_set.size());
  for (const auto& c : eval_set.cases) {
    if (!c.labeled()) throw domain_error("experiment", "unlabeled evaluation case " + c.id);
    run.scored.labels.push_back(*c.label);
  }

  if (v == VariantId::lr) {
    run.scored.scores = predict_probabilities(model, eval_set);
    return run;
  }

  const bool wants_wald = v == VariantId::cbr_wa || v == VariantId::cbr_wa_wp;
  const bool wants_pearson = v == VariantId::cbr_wp || v == VariantId::cbr_wa_wp;

  if (wants_wald) {
    run.w_a = attribute_weights_from_wald(wald_statistics(model), train.schema);
  } else {
    run.w_a = uniform_attribute_weights(train.schema, model.selected_attributes);
  }
  CaseWeights w_p = wants_pearson
                        ? case_weights_from_residuals(pearson_residuals(model, train))
                        : uniform_case_weights(train);

  std::size_t bound = k_max == 0 ? default_k_max(train.size()) : k_max;
  bound = std::min(bound, train.size());
  TuneResult tuned = tune_k(train, split.setting, run.w_a, w_p, bound);
  run.chosen_k = tuned.k;

  RetrievalConfig cfg;
  cfg.k = tuned.k;
  cfg.k_max = bound;
  run.scored.scores.reserve(eval_set.size());
  for (const auto& c : eval_set.cases)
    run.scored.scores.push_back(predict(c, train, run.w_a, w_p, cfg).score);
  return run;
}

namespace detail {

// same id partition as `split`, re-cut from an augmented base
inline TriSplit subset_by_ids(const CaseBase& augmented, const TriSplit& split) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < augmented.size(); ++i) index[augmented.cases[i].id] = i;
  auto take = [&](const CaseBase& part) {
    CaseBase out;
    out.schema = augmented.schema;
    out.cases.reserve(part.size());
    for (const auto& c : part.cases) {
      auto it = index.find(c.id);
      if (it == index.end())
        throw domain_error("experiment", "augmented base lost case " + c.id);
      out.cases.push_back(augmented.cases[it->second]);
    }
    return out;
  };
  TriSplit out;
  out.training = take(split.training);
  out.setting = take(split.setting);
  out.evaluation = take(split.evaluation);
  out.seed = split.seed;
  return out;
}

} // namespace detail

/// Run the full scenario x mode x variant grid. One id-partition is drawn
/// once from the base and reused everywhere; each noise scenario augments
/// the same base with its own injected attributes. A failed cell is
/// recorded in its row and the run continues.
inline ResultTable run_matrix(const ExperimentPlan& plan) {
  if (plan.variants.empty()) throw domain_error("experiment", "plan has no variants");
  if (plan.modes.empty()) throw domain_error("experiment", "plan has no modes");
  if (plan.noise_levels.empty()) throw domain_error("experiment", "plan has no noise levels");
  if (plan.replicates < 1) throw domain_error("experiment", "plan needs replicates >= 1");
  if (plan.data_path.empty() == !plan.synthetic.has_value())
    throw domain_error("experiment", "plan needs exactly one data source");

  ResultTable table;
  table.plan = plan;

  CaseBase base;
  if (plan.synthetic) {
    SyntheticSpec spec = *plan.synthetic;
    if (!plan.synth_seed_explicit) spec.seed = derive_seed(plan.seed, "synth");
    table.synth_seed = spec.seed;
    base = generate_synthetic(spec);
  } else {
    std::ifstream f(plan.data_path);
    if (!f) throw domain_error("experiment", "cannot open data file " + plan.data_path);
    base = load_case_base(f);
  }

  table.split_seed = derive_seed(plan.seed, "split");
  const TriSplit split = random_split(base, plan.n_train, plan.n_setting, plan.n_eval,
                                      table.split_seed);

  for (std::size_t noise : plan.noise_levels) {
    CaseBase augmented =
        noise == 0 ? base : inject_random_attributes(base, noise, derive_seed(plan.seed, "inject", noise));
    const TriSplit scenario_split = detail::subset_by_ids(augmented, split);

    for (AttributeMode mode : plan.modes) {
      CellGroup group;
      group.noise = noise;
      group.mode = mode;
      for (const auto& a : augmented.schema.attributes) group.attribute_names.push_back(a.name);

      try {
        group.model = mode == AttributeMode::all ? fit(scenario_split.training)
                                                 : stepwise_select(scenario_split.training);
        try {
          AttributeWeights w =
              attribute_weights_from_wald(wald_statistics(group.model), augmented.schema);
          group.wald_weights = w.weights;
        } catch (const domain_error& e) {
          group.wald_error = e.what();
        }
      } catch (const domain_error& e) {
        group.fit_failed = true;
        group.fit_error = e.what();
      }

      for (VariantId v : plan.variants) {
        ResultRow row;
        row.noise = noise;
        row.mode = mode;
        row.variant = v;
        const auto t0 = std::chrono::steady_clock::now();
        if (group.fit_failed) {
          row.failed = true;
          row.error = group.fit_error;
        } else {
          try {
            VariantRun run = run_variant(v, scenario_split, group.model, plan.k_max);
            row.chosen_k = run.chosen_k;
            row.attribute_weights = run.w_a.weights;
            const std::string cell_tag = "cell:" + std::to_string(noise) + ":" +
                                         mode_name(mode) + ":" + variant_name(v);
            row.auc = bootstrap_auc(run.scored, plan.replicates,
                                    derive_seed(plan.seed, cell_tag));
          } catch (const domain_error& e) {
            row.failed = true;
            row.error = e.what();
          }
        }
        row.runtime_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        table.rows.push_back(std::move(row));
      }
      table.groups.push_back(std::move(group));
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace detail {

inline std::string sanitize_csv_field(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

} // namespace detail

/// Write the report bundle: one attribute-weight CSV per (scenario, mode),
/// one variant AUC CSV per (scenario, mode), and a manifest.json with the
/// seeds and configuration. File bytes depend only on the plan and seed.
inline std::vector<std::string> emit_reports(const ResultTable& table, const std::string& out_dir) {
  if (table.rows.empty()) throw domain_error("experiment", "emit_reports: empty table");
  std::vector<std::string> written;

  for (const auto& group : table.groups) {
    const std::string stem =
        "noise" + std::to_string(group.noise) + "_" + mode_name(group.mode);
    std::string csv = "attribute,weight,source\n";
    if (!group.wald_weights.empty()) {
      for (std::size_t i = 0; i < group.attribute_names.size(); ++i) {
        csv += group.attribute_names[i];
        csv += ',';
        csv += format_double(group.wald_weights[i]);
        csv += ",wald\n";
      }
    }
    const std::string path = out_dir + "/weights_" + stem + ".csv";
    write_file_atomic(path, csv);
    written.push_back(path);
  }

  for (const auto& group : table.groups) {
    const std::string stem =
        "noise" + std::to_string(group.noise) + "_" + mode_name(group.mode);
    std::string csv =
        "variant,chosen_k,point_auc,boot_mean,ci_low,ci_high,replicates,status\n";
    for (const auto& row : table.rows) {
      if (row.noise != group.noise || row.mode != group.mode) continue;
      csv += variant_name(row.variant);
      csv += ',';
      csv += std::to_string(row.chosen_k);
      csv += ',';
      if (row.failed) {
        csv += ",,,,,";
        csv += detail::sanitize_csv_field(row.error);
      } else {
        csv += format_double(row.auc.point_auc);
        csv += ',';
        csv += format_double(row.auc.boot_mean);
        csv += ',';
        csv += format_double(row.auc.ci_low);
        csv += ',';
        csv += format_double(row.auc.ci_high);
        csv += ',';
        csv += std::to_string(row.auc.replicates);
        csv += ",ok";
      }
      csv += '\n';
    }
    const std::string path = out_dir + "/auc_" + stem + ".csv";
    write_file_atomic(path, csv);
    written.push_back(path);
  }

  nlohmann::json plan_json{{"sizes", {table.plan.n_train, table.plan.n_setting, table.plan.n_eval}},
                           {"seed", table.plan.seed},
                           {"noise", table.plan.noise_levels},
                           {"k_max", table.plan.k_max},
                           {"replicates", table.plan.replicates}};
  {
    std::vector<std::string> names;
    for (AttributeMode m : table.plan.modes) names.push_back(mode_name(m));
    plan_json["modes"] = names;
    names.clear();
    for (VariantId v : table.plan.variants) names.push_back(variant_name(v));
    plan_json["variants"] = names;
    if (table.plan.synthetic)
      plan_json["data"] = {{"synthetic", synthetic_spec_to_json(*table.plan.synthetic)}};
    else
      plan_json["data"] = {{"path", table.plan.data_path}};
  }

  nlohmann::json cells = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json cell{{"noise", row.noise},
                        {"mode", mode_name(row.mode)},
                        {"variant", variant_name(row.variant)},
                        {"chosen_k", row.chosen_k}};
    if (row.failed)
      cell["error"] = row.error;
    else
      cell["replicates"] = row.auc.replicates;
    cells.push_back(std::move(cell));
  }

  nlohmann::json manifest{{"version", std::string(version)},
                          {"plan", std::move(plan_json)},
                          {"split_seed", table.split_seed},
                          {"synth_seed", table.synth_seed},
                          {"cells", std::move(cells)}};
  const std::string manifest_path = out_dir + "/manifest.json";
  write_file_atomic(manifest_path, manifest.dump(2) + "\n");
  written.push_back(manifest_path);
  return written;
}

} // namespace lrknn
