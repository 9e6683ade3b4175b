#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrknn/common.hpp"
#include "lrknn/dataset.hpp"
#include "lrknn/linalg.hpp"
#include "lrknn/math.hpp"

namespace lrknn {

/// Maximum-likelihood logistic model on a subset of binary attributes.
struct LogisticModel {
  std::vector<std::string> selected_attributes;
  std::vector<double> coefficients; // one per selected attribute
  double intercept = 0.0;
  std::vector<double> std_errors; // one per selected attribute
  double log_likelihood = 0.0;
  double aic = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  double probability_clamp = 1e-6; // clamp used at fit time, reused for residuals
  std::vector<std::string> separation_excluded; // dropped before a stepwise search
};

struct FitConfig {
  double tolerance = 1e-8;       // max absolute coefficient change
  std::size_t max_iterations = 50;
  double probability_clamp = 1e-6;
  double divergence_bound = 30.0; // |beta| beyond this means separation
};

/// Separation: some attribute perfectly predicts the label and the MLE
/// diverges. Carries the offending attribute names.
class separation_error : public domain_error {
public:
  separation_error(std::vector<std::string> attributes, const std::string& message)
      : domain_error("logistic", message), attributes_(std::move(attributes)) {}
  const std::vector<std::string>& attributes() const noexcept { return attributes_; }

private:
  std::vector<std::string> attributes_;
};

namespace detail {

inline void check_fit_preconditions(const CaseBase& train, const FitConfig& config) {
  if (train.cases.empty()) throw domain_error("logistic", "fit: empty training set");
  for (const auto& c : train.cases)
    if (!c.labeled()) throw domain_error("logistic", "fit: unlabeled case " + c.id);
  std::size_t positives = 0;
  for (const auto& c : train.cases) positives += *c.label;
  if (positives == 0 || positives == train.size())
    throw separation_error({"(intercept)"},
                           "fit: all labels identical; the intercept diverges");
  if (!(config.tolerance > 0.0)) throw domain_error("logistic", "fit: tolerance must be > 0");
  if (config.max_iterations < 1) throw domain_error("logistic", "fit: max_iterations must be >= 1");
  if (!(config.probability_clamp > 0.0 && config.probability_clamp < 0.5))
    throw domain_error("logistic", "fit: probability_clamp must be in (0, 0.5)");
}

// Newton/IRLS on the columns named by `indices`. Parameter vector is
// [beta_1..beta_m, beta_0].
inline LogisticModel fit_on_indices(const CaseBase& train, const std::vector<std::size_t>& indices,
                                    const FitConfig& config) {
  const std::size_t n = train.size();
  const std::size_t m = indices.size();
  const std::size_t dim = m + 1;

  // compact design matrix, row per case
  std::vector<std::uint8_t> x(n * m);
  std::vector<std::uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Case& c = train.cases[i];
    y[i] = *c.label;
    for (std::size_t j = 0; j < m; ++j) x[i * m + j] = c.values[indices[j]];
  }

  {
    std::vector<std::string> constant;
    for (std::size_t j = 0; j < m; ++j) {
      std::size_t ones = 0;
      for (std::size_t i = 0; i < n; ++i) ones += x[i * m + j];
      if (ones == 0 || ones == n)
        constant.push_back(train.schema.attributes[indices[j]].name);
    }
    if (!constant.empty()) {
      std::string msg = "fit: constant attribute(s):";
      for (const auto& a : constant) msg += " " + a;
      throw domain_error("logistic", msg);
    }
  }

  std::vector<double> beta(dim, 0.0);
  std::vector<double> eta(n, 0.0), mu(n), w(n);
  const double clamp_lo = config.probability_clamp;
  const double clamp_hi = 1.0 - config.probability_clamp;

  auto compute_eta = [&](const std::vector<double>& b) {
    for (std::size_t i = 0; i < n; ++i) {
      double e = b[m];
      const std::uint8_t* row = &x[i * m];
      for (std::size_t j = 0; j < m; ++j)
        if (row[j]) e += b[j];
      eta[i] = e;
    }
  };
  auto log_likelihood_at = [&](const std::vector<double>& b) {
    compute_eta(b);
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) ll += y[i] * eta[i] - log1pexp(eta[i]);
    return ll;
  };

  double ll = log_likelihood_at(beta);
  bool converged = false;
  std::size_t iter = 0;

  while (iter < config.max_iterations) {
    for (std::size_t i = 0; i < n; ++i) {
      mu[i] = std::clamp(sigmoid(eta[i]), clamp_lo, clamp_hi);
      w[i] = mu[i] * (1.0 - mu[i]);
    }

    // score vector and observed information X^T W X
    std::vector<double> grad(dim, 0.0);
    SquareMatrix info(dim);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = static_cast<double>(y[i]) - sigmoid(eta[i]);
      const double wi = w[i];
      const std::uint8_t* row = &x[i * m];
      for (std::size_t j = 0; j < m; ++j) {
        if (!row[j]) continue;
        grad[j] += r;
        for (std::size_t k = 0; k <= j; ++k)
          if (row[k]) info.at(j, k) += wi;
        info.at(m, j) += wi; // intercept column is all ones
      }
      grad[m] += r;
      info.at(m, m) += wi;
    }
    for (std::size_t j = 0; j < dim; ++j)
      for (std::size_t k = j + 1; k < dim; ++k) info.at(j, k) = info.at(k, j);

    auto chol = cholesky(info);
    if (!chol) throw domain_error("logistic", "singular information matrix");
    std::vector<double> delta = cholesky_solve(*chol, grad);

    // step halving: never accept a step that lowers the log-likelihood
    double step = 1.0;
    std::vector<double> candidate(dim);
    double ll_new = ll;
    bool accepted = false;
    for (int halving = 0; halving <= 10; ++halving) {
      for (std::size_t j = 0; j < dim; ++j) candidate[j] = beta[j] + step * delta[j];
      ll_new = log_likelihood_at(candidate);
      if (ll_new >= ll) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      compute_eta(beta); // restore state for the final covariance pass
      break;
    }

    double max_change = 0.0;
    for (std::size_t j = 0; j < dim; ++j)
      max_change = std::max(max_change, std::fabs(step * delta[j]));
    beta = candidate;
    ll = ll_new;
    ++iter;

    {
      std::vector<std::string> diverged;
      for (std::size_t j = 0; j < m; ++j)
        if (std::fabs(beta[j]) > config.divergence_bound)
          diverged.push_back(train.schema.attributes[indices[j]].name);
      if (std::fabs(beta[m]) > config.divergence_bound) diverged.push_back("(intercept)");
      if (!diverged.empty()) {
        std::string msg = "separation detected; diverging attribute(s):";
        for (const auto& a : diverged) msg += " " + a;
        throw separation_error(std::move(diverged), msg);
      }
    }

    if (max_change < config.tolerance) {
      converged = true;
      break;
    }
  }

  // covariance from the information matrix at the optimum
  SquareMatrix info(dim);
  for (std::size_t i = 0; i < n; ++i) {
    const double mui = std::clamp(sigmoid(eta[i]), clamp_lo, clamp_hi);
    const double wi = mui * (1.0 - mui);
    const std::uint8_t* row = &x[i * m];
    for (std::size_t j = 0; j < m; ++j) {
      if (!row[j]) continue;
      for (std::size_t k = 0; k <= j; ++k)
        if (row[k]) info.at(j, k) += wi;
      info.at(m, j) += wi;
    }
    info.at(m, m) += wi;
  }
  for (std::size_t j = 0; j < dim; ++j)
    for (std::size_t k = j + 1; k < dim; ++k) info.at(j, k) = info.at(k, j);
  auto chol = cholesky(info);
  if (!chol) throw domain_error("logistic", "singular information matrix");
  SquareMatrix cov = cholesky_inverse(*chol);

  LogisticModel model;
  model.selected_attributes.reserve(m);
  for (auto idx : indices) model.selected_attributes.push_back(train.schema.attributes[idx].name);
  model.coefficients.assign(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(m));
  model.intercept = beta[m];
  model.std_errors.resize(m);
  for (std::size_t j = 0; j < m; ++j) model.std_errors[j] = std::sqrt(cov.at(j, j));
  model.log_likelihood = ll;
  model.aic = 2.0 * static_cast<double>(m + 1) - 2.0 * ll;
  model.converged = converged;
  model.iterations = iter;
  model.probability_clamp = config.probability_clamp;
  return model;
}

} // namespace detail

/// Fit on every schema attribute. Throws separation_error when the MLE
/// diverges, domain_error for constant attributes or a singular
/// information matrix.
inline LogisticModel fit(const CaseBase& train, const FitConfig& config = {}) {
  detail::check_fit_preconditions(train, config);
  std::vector<std::size_t> indices(train.schema.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  return detail::fit_on_indices(train, indices, config);
}

/// P(y=1) for one case under the model. `values` is laid out per `schema`,
/// which must cover every selected attribute.
inline double predict_probability(const LogisticModel& model, const AttributeSchema& schema,
                                  const std::vector<std::uint8_t>& values) {
  double eta = model.intercept;
  for (std::size_t j = 0; j < model.selected_attributes.size(); ++j) {
    const std::size_t idx = schema.index_of(model.selected_attributes[j]);
    if (idx == AttributeSchema::npos || idx >= values.size())
      throw domain_error("logistic",
                         "missing attribute value: " + model.selected_attributes[j]);
    if (values[idx]) eta += model.coefficients[j];
  }
  return sigmoid(eta);
}

/// Batch prediction over a case base (resolves the attribute mapping once).
inline std::vector<double> predict_probabilities(const LogisticModel& model, const CaseBase& cb) {
  std::vector<std::size_t> idx(model.selected_attributes.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    idx[j] = cb.schema.index_of(model.selected_attributes[j]);
    if (idx[j] == AttributeSchema::npos)
      throw domain_error("logistic",
                         "missing attribute value: " + model.selected_attributes[j]);
  }
  std::vector<double> out;
  out.reserve(cb.size());
  for (const auto& c : cb.cases) {
    double eta = model.intercept;
    for (std::size_t j = 0; j < idx.size(); ++j)
      if (c.values[idx[j]]) eta += model.coefficients[j];
    out.push_back(sigmoid(eta));
  }
  return out;
}

/// Wald_a = beta_a^2 / sigma_a^2 per selected attribute (intercept excluded).
inline std::map<std::string, double> wald_statistics(const LogisticModel& model) {
  if (!model.converged)
    throw domain_error("logistic", "wald_statistics: model did not converge");
  std::map<std::string, double> wald;
  for (std::size_t j = 0; j < model.selected_attributes.size(); ++j) {
    const double b = model.coefficients[j];
    const double s = model.std_errors[j];
    wald[model.selected_attributes[j]] = (b * b) / (s * s);
  }
  return wald;
}

/// Pearson residual (y - yhat)/sqrt(yhat (1-yhat)) per labeled case, with
/// yhat clamped away from 0/1 so the denominator stays finite.
inline std::vector<double> pearson_residuals(const LogisticModel& model, const CaseBase& labeled) {
  std::vector<std::size_t> idx(model.selected_attributes.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    idx[j] = labeled.schema.index_of(model.selected_attributes[j]);
    if (idx[j] == AttributeSchema::npos)
      throw domain_error("logistic",
                         "missing attribute value: " + model.selected_attributes[j]);
  }
  std::vector<double> residuals;
  residuals.reserve(labeled.size());
  for (const auto& c : labeled.cases) {
    if (!c.labeled())
      throw domain_error("logistic", "pearson_residuals: unlabeled case " + c.id);
    double eta = model.intercept;
    for (std::size_t j = 0; j < idx.size(); ++j)
      if (c.values[idx[j]]) eta += model.coefficients[j];
    const double yhat =
        std::clamp(sigmoid(eta), model.probability_clamp, 1.0 - model.probability_clamp);
    residuals.push_back((static_cast<double>(*c.label) - yhat) /
                        std::sqrt(yhat * (1.0 - yhat)));
  }
  return residuals;
}

/// Bidirectional stepwise selection on AIC, starting from the full model.
/// Each round tries every single-attribute deletion and re-addition and
/// applies the best move; ties within 1e-9 go to the smaller model.
/// Attributes whose full-model fit diverges are excluded up front and
/// reported through separation_excluded.
inline LogisticModel stepwise_select(const CaseBase& train, const FitConfig& config = {}) {
  detail::check_fit_preconditions(train, config);
  constexpr double aic_tie = 1e-9;

  std::vector<std::size_t> current(train.schema.size());
  for (std::size_t i = 0; i < current.size(); ++i) current[i] = i;
  std::vector<std::string> excluded_names;

  LogisticModel model;
  for (;;) {
    try {
      model = detail::fit_on_indices(train, current, config);
      break;
    } catch (const separation_error& e) {
      std::vector<std::size_t> next;
      for (auto idx : current) {
        const std::string& name = train.schema.attributes[idx].name;
        if (std::find(e.attributes().begin(), e.attributes().end(), name) !=
            e.attributes().end()) {
          excluded_names.push_back(name);
        } else {
          next.push_back(idx);
        }
      }
      if (next.size() == current.size()) throw; // only the intercept diverged
      current = std::move(next);
    }
  }

  auto is_excluded = [&](std::size_t idx) {
    const std::string& name = train.schema.attributes[idx].name;
    return std::find(excluded_names.begin(), excluded_names.end(), name) != excluded_names.end();
  };

  for (;;) {
    struct Move {
      std::vector<std::size_t> indices;
      double aic;
    };
    std::optional<Move> best;
    auto consider = [&](std::vector<std::size_t> indices) {
      try {
        LogisticModel candidate = detail::fit_on_indices(train, indices, config);
        if (!best || candidate.aic < best->aic - aic_tie ||
            (std::fabs(candidate.aic - best->aic) <= aic_tie &&
             indices.size() < best->indices.size()))
          best = Move{std::move(indices), candidate.aic};
      } catch (const domain_error&) {
        // separation or a singular fit disqualifies the move
      }
    };

    for (std::size_t drop = 0; drop < current.size(); ++drop) {
      std::vector<std::size_t> indices;
      indices.reserve(current.size() - 1);
      for (std::size_t j = 0; j < current.size(); ++j)
        if (j != drop) indices.push_back(current[j]);
      consider(std::move(indices));
    }
    for (std::size_t idx = 0; idx < train.schema.size(); ++idx) {
      if (is_excluded(idx)) continue;
      if (std::find(current.begin(), current.end(), idx) != current.end()) continue;
      std::vector<std::size_t> indices = current;
      indices.insert(std::upper_bound(indices.begin(), indices.end(), idx), idx);
      consider(std::move(indices));
    }

    if (!best) break;
    const bool improves = best->aic < model.aic - aic_tie;
    const bool tie_to_smaller =
        std::fabs(best->aic - model.aic) <= aic_tie && best->indices.size() < current.size();
    if (!improves && !tie_to_smaller) break;
    current = best->indices;
    model = detail::fit_on_indices(train, current, config);
  }

  model = detail::fit_on_indices(train, current, config);
  model.separation_excluded = excluded_names;
  return model;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json model_to_json(const LogisticModel& model) {
  return nlohmann::json{{"attributes", model.selected_attributes},
                        {"coefficients", model.coefficients},
                        {"std_errors", model.std_errors},
                        {"intercept", model.intercept},
                        {"log_likelihood", model.log_likelihood},
                        {"aic", model.aic},
                        {"converged", model.converged},
                        {"iterations", model.iterations},
                        {"probability_clamp", model.probability_clamp},
                        {"separation_excluded", model.separation_excluded}};
}

inline LogisticModel model_from_json(const nlohmann::json& j) {
  LogisticModel model;
  try {
    model.selected_attributes = j.at("attributes").get<std::vector<std::string>>();
    model.coefficients = j.at("coefficients").get<std::vector<double>>();
    model.std_errors = j.at("std_errors").get<std::vector<double>>();
    model.intercept = j.at("intercept").get<double>();
    model.log_likelihood = j.at("log_likelihood").get<double>();
    model.aic = j.at("aic").get<double>();
    model.converged = j.at("converged").get<bool>();
    model.iterations = j.at("iterations").get<std::size_t>();
    model.probability_clamp = j.at("probability_clamp").get<double>();
    if (j.contains("separation_excluded"))
      model.separation_excluded = j.at("separation_excluded").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw domain_error("logistic", std::string("model JSON: ") + e.what());
  }
  if (model.coefficients.size() != model.selected_attributes.size() ||
      model.std_errors.size() != model.selected_attributes.size())
    throw domain_error("logistic", "model JSON: mismatched array lengths");
  return model;
}

} // namespace lrknn
