// lrknn command-line front end: synth, split, fit, weights, tune-k, predict,
// eval, experiment. Exit codes: 0 ok, 1 domain error, 2 usage error. Errors
// go to stderr twice: one JSON object (for scripts) and one human line.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lrknn/lrknn.hpp"

namespace {

using nlohmann::json;

struct GlobalOpts {
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string out;
  std::string format = "json";
};

// `message` is the full what() text (already module-prefixed for domain errors)
void emit_error(const std::string& module, const std::string& message) {
  std::cerr << json{{"error", {{"module", module}, {"message", message}}}}.dump() << "\n";
  std::cerr << "error: " << message << "\n";
}

// output helper: --out writes atomically, otherwise stdout
void deliver(const GlobalOpts& g, const std::string& content) {
  if (g.out.empty())
    std::cout << content;
  else
    lrknn::write_file_atomic(g.out, content);
}

lrknn::CaseBase load_case_base_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw lrknn::domain_error("cli", "cannot open " + path);
  return lrknn::load_case_base(f);
}

lrknn::LogisticModel load_model_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw lrknn::domain_error("cli", "cannot open " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw lrknn::domain_error("cli", path + ": " + e.what());
  }
  return lrknn::model_from_json(j);
}

void check_same_schema(const lrknn::CaseBase& a, const lrknn::CaseBase& b,
                       const std::string& what) {
  bool same = a.schema.size() == b.schema.size();
  for (std::size_t i = 0; same && i < a.schema.size(); ++i)
    same = a.schema.attributes[i].name == b.schema.attributes[i].name;
  if (!same) throw lrknn::domain_error("cli", "schema mismatch: " + what);
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ','))
    out.push_back(static_cast<std::size_t>(std::stoull(part)));
  if (out.size() != 3)
    throw lrknn::domain_error("cli", "--sizes wants train,setting,eval");
  return out;
}

json chi_report_json(const lrknn::ChiSquareReport& rep) {
  json rows = json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"name", r.name},
                    {"statistic", r.statistic},
                    {"p_value", r.p_value},
                    {"flagged", r.flagged},
                    {"degenerate", r.degenerate}});
  return json{{"alpha", rep.alpha}, {"rows", std::move(rows)}};
}

std::string chi_report_csv(const lrknn::ChiSquareReport& rep) {
  std::string out = "name,statistic,p_value,flagged,degenerate\n";
  for (const auto& r : rep.rows) {
    out += r.name;
    out += ',';
    out += lrknn::format_double(r.statistic);
    out += ',';
    out += lrknn::format_double(r.p_value);
    out += ',';
    out += r.flagged ? "1" : "0";
    out += ',';
    out += r.degenerate ? "1" : "0";
    out += '\n';
  }
  return out;
}

// weight selection shared by tune-k and predict
struct WeightChoice {
  std::string attribute = "wald";  // wald | uniform
  std::string cases = "pearson";   // pearson | uniform
};

struct RetrievalInputs {
  lrknn::AttributeWeights w_a;
  lrknn::CaseWeights w_p;
};

RetrievalInputs make_weights(const lrknn::CaseBase& train, const WeightChoice& choice,
                             const std::optional<lrknn::LogisticModel>& model) {
  RetrievalInputs in;
  const bool needs_model = choice.attribute == "wald" || choice.cases == "pearson";
  if (needs_model && !model)
    throw lrknn::domain_error("cli", "--model is required for wald/pearson weights");

  if (choice.attribute == "wald")
    in.w_a = lrknn::attribute_weights_from_wald(lrknn::wald_statistics(*model), train.schema);
  else if (model)
    in.w_a = lrknn::uniform_attribute_weights(train.schema, model->selected_attributes);
  else
    in.w_a = lrknn::uniform_attribute_weights(train.schema);

  if (choice.cases == "pearson")
    in.w_p = lrknn::case_weights_from_residuals(lrknn::pearson_residuals(*model, train));
  else
    in.w_p = lrknn::uniform_case_weights(train);
  return in;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Logistic-weighted soft K-NN classifier pipeline"};
  app.require_subcommand(1);

  GlobalOpts g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Master random seed")->capture_default_str();
  app.add_option("--out", g.out, "Output file (or directory where noted); default stdout");
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic case base CSV");
  std::string synth_spec_path;
  synth->add_option("--spec", synth_spec_path, "Synthetic spec JSON")->required();
  synth->fallthrough();

  // split
  auto* split_cmd = app.add_subcommand(
      "split", "Random training/setting/evaluation split plus homogeneity check");
  std::string split_data, split_sizes;
  double split_alpha = 0.05;
  split_cmd->add_option("--data", split_data, "Case base CSV")->required();
  split_cmd->add_option("--sizes", split_sizes, "train,setting,eval sizes")->required();
  split_cmd->add_option("--alpha", split_alpha, "Chi-square flag level")->capture_default_str();
  split_cmd->fallthrough();

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit the logistic model (optionally stepwise)");
  std::string fit_train;
  bool fit_stepwise = false;
  lrknn::FitConfig fit_cfg;
  fit_cmd->add_option("--train", fit_train, "Training CSV")->required();
  fit_cmd->add_flag("--stepwise", fit_stepwise, "Bidirectional AIC attribute selection");
  fit_cmd->add_option("--tolerance", fit_cfg.tolerance, "Coefficient-change stop threshold")
      ->capture_default_str();
  fit_cmd->add_option("--max-iterations", fit_cfg.max_iterations, "Newton iteration cap")
      ->capture_default_str();
  fit_cmd->add_option("--clamp", fit_cfg.probability_clamp, "Probability clamp")
      ->capture_default_str();
  fit_cmd->add_option("--divergence-bound", fit_cfg.divergence_bound,
                      "|coefficient| limit before declaring separation")
      ->capture_default_str();
  fit_cmd->fallthrough();

  // weights
  auto* weights_cmd =
      app.add_subcommand("weights", "Attribute weights (or case weights) from a fitted model");
  std::string weights_model, weights_data, weights_kind = "wald";
  weights_cmd->add_option("--model", weights_model, "Model JSON (needed for wald/pearson)");
  weights_cmd->add_option("--data", weights_data, "Case base CSV giving the schema/cases")
      ->required();
  weights_cmd->add_option("--kind", weights_kind, "Weight family")
      ->check(CLI::IsMember({"wald", "uniform", "pearson", "uniform-cases"}))
      ->capture_default_str();
  weights_cmd->fallthrough();

  // tune-k
  auto* tune_cmd = app.add_subcommand("tune-k", "Pick K on the setting set");
  std::string tune_train, tune_setting, tune_model;
  std::size_t tune_k_max = 0;
  WeightChoice tune_choice;
  tune_cmd->add_option("--train", tune_train, "Labeled pool CSV")->required();
  tune_cmd->add_option("--setting", tune_setting, "Setting-set CSV")->required();
  tune_cmd->add_option("--model", tune_model, "Model JSON");
  tune_cmd->add_option("--k-max", tune_k_max, "Largest K to try (0 = default rule)")
      ->capture_default_str();
  tune_cmd->add_option("--attribute-weights", tune_choice.attribute, "wald or uniform")
      ->check(CLI::IsMember({"wald", "uniform"}))
      ->capture_default_str();
  tune_cmd->add_option("--case-weights", tune_choice.cases, "pearson or uniform")
      ->check(CLI::IsMember({"pearson", "uniform"}))
      ->capture_default_str();
  tune_cmd->fallthrough();

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Score query cases against a labeled pool");
  std::string predict_train, predict_query, predict_model;
  std::size_t predict_k = 0;
  bool predict_trace = false;
  WeightChoice predict_choice;
  predict_cmd->add_option("--train", predict_train, "Labeled pool CSV")->required();
  predict_cmd->add_option("--query", predict_query, "Query cases CSV")->required();
  predict_cmd->add_option("--model", predict_model, "Model JSON");
  predict_cmd->add_option("--k", predict_k, "Neighbor count")->required();
  predict_cmd->add_option("--attribute-weights", predict_choice.attribute, "wald or uniform")
      ->check(CLI::IsMember({"wald", "uniform"}))
      ->capture_default_str();
  predict_cmd->add_option("--case-weights", predict_choice.cases, "pearson or uniform")
      ->check(CLI::IsMember({"pearson", "uniform"}))
      ->capture_default_str();
  predict_cmd->add_flag("--trace", predict_trace,
                        "JSON neighbor trace per query instead of score CSV");
  predict_cmd->fallthrough();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Bootstrap AUC report from a scores CSV");
  std::string eval_scores;
  std::size_t eval_replicates = 500;
  unsigned eval_threads = 1;
  eval_cmd->add_option("--scores", eval_scores, "CSV with score and label columns")->required();
  eval_cmd->add_option("--replicates", eval_replicates, "Bootstrap resample count")
      ->capture_default_str();
  eval_cmd->add_option("--threads", eval_threads, "Worker threads (result is identical)")
      ->capture_default_str();
  eval_cmd->fallthrough();

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "Run a scenario/mode/variant plan");
  std::string exp_plan;
  exp_cmd->add_option("--plan", exp_plan, "Plan file (key=value)")->required();
  exp_cmd->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("cli", e.what());
    return 2;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    if (*synth) {
      std::ifstream f(synth_spec_path);
      if (!f) throw lrknn::domain_error("cli", "cannot open " + synth_spec_path);
      json j;
      try {
        f >> j;
      } catch (const json::exception& e) {
        throw lrknn::domain_error("cli", synth_spec_path + ": " + e.what());
      }
      bool spec_has_seed = false;
      lrknn::SyntheticSpec spec = lrknn::synthetic_spec_from_json(j, &spec_has_seed);
      if (g.seed_given || !spec_has_seed) spec.seed = g.seed;
      lrknn::CaseBase cb = lrknn::generate_synthetic(spec);
      std::ostringstream out;
      lrknn::save_case_base(cb, out);
      deliver(g, out.str());
    } else if (*split_cmd) {
      if (g.out.empty())
        throw lrknn::domain_error("cli", "split needs --out DIR for the three part files");
      lrknn::CaseBase cb = load_case_base_file(split_data);
      const auto sizes = parse_sizes(split_sizes);
      lrknn::TriSplit split = lrknn::random_split(cb, sizes[0], sizes[1], sizes[2], g.seed);
      const lrknn::ChiSquareReport rep = lrknn::chi_square_homogeneity(split, split_alpha);
      const std::pair<const char*, const lrknn::CaseBase*> parts[3] = {
          {"train.csv", &split.training},
          {"setting.csv", &split.setting},
          {"eval.csv", &split.evaluation}};
      for (const auto& [name, part] : parts) {
        std::ostringstream out;
        lrknn::save_case_base(*part, out);
        lrknn::write_file_atomic(g.out + "/" + name, out.str());
      }
      json manifest{{"seed", g.seed},
                    {"sizes", {sizes[0], sizes[1], sizes[2]}},
                    {"chi_square", chi_report_json(rep)}};
      lrknn::write_file_atomic(g.out + "/manifest.json", manifest.dump(2) + "\n");
      if (g.format == "json")
        std::cout << chi_report_json(rep).dump(2) << "\n";
      else
        std::cout << chi_report_csv(rep);
    } else if (*fit_cmd) {
      lrknn::CaseBase train = load_case_base_file(fit_train);
      lrknn::LogisticModel model =
          fit_stepwise ? lrknn::stepwise_select(train, fit_cfg) : lrknn::fit(train, fit_cfg);
      if (!model.separation_excluded.empty()) {
        std::string names;
        for (const auto& n : model.separation_excluded) names += " " + n;
        std::cerr << "warning: excluded separating attribute(s):" << names << "\n";
      }
      deliver(g, lrknn::model_to_json(model).dump(2) + "\n");
    } else if (*weights_cmd) {
      lrknn::CaseBase data = load_case_base_file(weights_data);
      std::optional<lrknn::LogisticModel> model;
      if (!weights_model.empty()) model = load_model_file(weights_model);
      if (weights_kind == "wald" || weights_kind == "pearson") {
        if (!model)
          throw lrknn::domain_error("cli", "--model is required for " + weights_kind);
      }
      if (weights_kind == "wald" || weights_kind == "uniform") {
        lrknn::AttributeWeights w;
        if (weights_kind == "wald")
          w = lrknn::attribute_weights_from_wald(lrknn::wald_statistics(*model), data.schema);
        else if (model)
          w = lrknn::uniform_attribute_weights(data.schema, model->selected_attributes);
        else
          w = lrknn::uniform_attribute_weights(data.schema);
        deliver(g, lrknn::attribute_weights_csv(data.schema, w));
      } else {
        lrknn::CaseWeights w =
            weights_kind == "pearson"
                ? lrknn::case_weights_from_residuals(lrknn::pearson_residuals(*model, data))
                : lrknn::uniform_case_weights(data);
        std::string out = "case_id,raw_weight,source\n";
        for (std::size_t i = 0; i < data.size(); ++i) {
          out += data.cases[i].id;
          out += ',';
          out += lrknn::format_double(w.raw[i]);
          out += ',';
          out += w.source;
          out += '\n';
        }
        deliver(g, out);
      }
    } else if (*tune_cmd) {
      lrknn::CaseBase train = load_case_base_file(tune_train);
      lrknn::CaseBase setting = load_case_base_file(tune_setting);
      check_same_schema(train, setting, "setting set vs pool");
      std::optional<lrknn::LogisticModel> model;
      if (!tune_model.empty()) model = load_model_file(tune_model);
      RetrievalInputs in = make_weights(train, tune_choice, model);
      std::size_t bound = tune_k_max == 0 ? lrknn::default_k_max(train.size()) : tune_k_max;
      bound = std::min(bound, train.size());
      lrknn::TuneResult tuned = lrknn::tune_k(train, setting, in.w_a, in.w_p, bound);
      if (g.format == "json") {
        deliver(g, json{{"k", tuned.k}, {"auc_by_k", tuned.auc_by_k}}.dump(2) + "\n");
      } else {
        std::string out = "k,auc\n";
        for (std::size_t i = 0; i < tuned.auc_by_k.size(); ++i) {
          out += std::to_string(i + 1);
          out += ',';
          out += lrknn::format_double(tuned.auc_by_k[i]);
          out += '\n';
        }
        deliver(g, out);
      }
    } else if (*predict_cmd) {
      lrknn::CaseBase train = load_case_base_file(predict_train);
      lrknn::CaseBase query = load_case_base_file(predict_query);
      check_same_schema(train, query, "query set vs pool");
      std::optional<lrknn::LogisticModel> model;
      if (!predict_model.empty()) model = load_model_file(predict_model);
      RetrievalInputs in = make_weights(train, predict_choice, model);
      lrknn::RetrievalConfig cfg;
      cfg.k = predict_k;
      cfg.k_max = std::max(predict_k, std::size_t{1});
      std::vector<lrknn::Prediction> preds;
      std::vector<std::optional<std::uint8_t>> labels;
      preds.reserve(query.size());
      for (const auto& c : query.cases) {
        preds.push_back(lrknn::predict(c, train, in.w_a, in.w_p, cfg));
        labels.push_back(c.label);
      }
      if (predict_trace) {
        json out = json::array();
        for (const auto& p : preds) out.push_back(lrknn::neighbor_trace_json(p));
        deliver(g, out.dump(2) + "\n");
      } else {
        deliver(g, lrknn::predictions_csv(preds, labels));
      }
    } else if (*eval_cmd) {
      std::ifstream f(eval_scores);
      if (!f) throw lrknn::domain_error("cli", "cannot open " + eval_scores);
      lrknn::ScoredSet s = lrknn::scored_set_from_csv(f);
      lrknn::AucEstimate est = lrknn::bootstrap_auc(s, eval_replicates, g.seed, eval_threads);
      if (g.format == "json") {
        deliver(g, lrknn::auc_report_json(est).dump(2) + "\n");
      } else {
        deliver(g, lrknn::roc_csv(lrknn::roc_points(s)));
      }
    } else if (*exp_cmd) {
      if (g.out.empty())
        throw lrknn::domain_error("cli", "experiment needs --out DIR for report files");
      lrknn::ExperimentPlan plan = lrknn::load_plan(exp_plan);
      if (g.seed_given) plan.seed = g.seed;
      lrknn::ResultTable table = lrknn::run_matrix(plan);
      std::filesystem::create_directories(g.out);
      lrknn::emit_reports(table, g.out);
      // short human summary on stdout
      for (const auto& row : table.rows) {
        std::cout << "noise=" << row.noise << " mode=" << lrknn::mode_name(row.mode) << " "
                  << lrknn::variant_name(row.variant);
        if (row.failed)
          std::cout << " FAILED: " << row.error << "\n";
        else
          std::cout << " k=" << row.chosen_k
                    << " auc=" << lrknn::format_double(row.auc.point_auc) << " ci=["
                    << lrknn::format_double(row.auc.ci_low) << ", "
                    << lrknn::format_double(row.auc.ci_high) << "]\n";
      }
    }
  } catch (const lrknn::domain_error& e) {
    emit_error(e.module(), e.what());
    return 1;
  } catch (const std::exception& e) {
    emit_error("cli", e.what());
    return 1;
  }
  return 0;
}
