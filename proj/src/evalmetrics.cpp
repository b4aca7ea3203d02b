#include "specloop/evalmetrics.hpp"

#include <algorithm>
#include <cmath>

#include "specloop/common.hpp"

namespace specloop {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ArgumentError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("quantile level must lie in [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> values, double p) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, p);
}

double ci_deviation(std::span<const double> draws, double truth) {
  if (draws.size() < kMinCiDraws)
    throw ArgumentError("ci_deviation needs at least " + std::to_string(kMinCiDraws) + " draws");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = quantile_sorted(sorted, 0.025);
  const double hi = quantile_sorted(sorted, 0.975);
  return std::max(std::abs(truth - lo), std::abs(truth - hi));
}

double sigma_ci_deviation(std::span<const double> sigma_draws, double sigma_truth) {
  if (!(sigma_truth > 0.0)) throw DataError("sigma_ci_deviation: true sigma must be > 0");
  std::vector<double> u;
  u.reserve(sigma_draws.size());
  for (double s : sigma_draws) {
    if (!(s > 0.0)) throw DataError("sigma_ci_deviation: non-positive sigma draw");
    u.push_back(1.0 / (s * s));
  }
  return ci_deviation(u, 1.0 / (sigma_truth * sigma_truth));
}

std::vector<CiDeviation> parameter_deviations(const std::vector<std::vector<double>>& draws,
                                              std::span<const double> truth,
                                              std::span<const std::string> names,
                                              std::span<const ParamTransform> transforms) {
  const std::size_t dim = truth.size();
  if (names.size() != dim || transforms.size() != dim)
    throw ArgumentError("parameter_deviations: names and transforms must match the truth dimension");
  std::vector<CiDeviation> out;
  std::vector<double> column(draws.size());
  for (std::size_t p = 0; p < dim; ++p) {
    for (std::size_t d = 0; d < draws.size(); ++d) {
      if (draws[d].size() != dim) throw ArgumentError("parameter_deviations: draw has the wrong dimension");
      column[d] = draws[d][p];
    }
    const double W = transforms[p] == ParamTransform::InverseSquare ? sigma_ci_deviation(column, truth[p])
                                                                    : ci_deviation(column, truth[p]);
    out.push_back({names[p], W});
  }
  return out;
}

BoxplotStats boxplot_stats(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  BoxplotStats b;
  b.median = quantile_sorted(v, 0.5);
  b.q1 = quantile_sorted(v, 0.25);
  b.q3 = quantile_sorted(v, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr;
  const double hi_fence = b.q3 + 1.5 * iqr;
  b.whisker_low = b.q1;
  b.whisker_high = b.q3;
  for (double x : v) {
    if (x < lo_fence || x > hi_fence) {
      b.outliers.push_back(x);
      continue;
    }
    b.whisker_low = std::min(b.whisker_low, x);
    b.whisker_high = std::max(b.whisker_high, x);
  }
  return b;
}

std::vector<double> TrialSummary::column(const std::string& parameter) const {
  const auto it = std::find(parameters.begin(), parameters.end(), parameter);
  if (it == parameters.end()) throw ArgumentError("unknown parameter " + parameter);
  const auto p = static_cast<std::size_t>(it - parameters.begin());
  std::vector<double> out;
  for (const auto& row : W) out.push_back(row[p]);
  return out;
}

TrialSummary summarize_trials(std::span<const TrialEvaluation> trials) {
  if (trials.empty()) throw ArgumentError("summarize_trials: no trials");
  TrialSummary s;
  const auto& first = trials.front();
  s.problem = first.problem;
  s.parameters = first.parameters;
  s.models = first.models;
  s.best_counts.assign(s.models.size(), 0);
  for (const auto& t : trials) {
    if (t.problem != s.problem || t.parameters != s.parameters || t.models != s.models)
      throw ArgumentError("summarize_trials: trials do not share a schema");
    if (t.W.size() != s.parameters.size() || t.probabilities.size() != s.models.size())
      throw ArgumentError("summarize_trials: trial row has the wrong width");
    s.W.push_back(t.W);
    s.probabilities.push_back(t.probabilities);
    s.T_sum.push_back(t.T_sum);
    s.focus_fraction.push_back(t.focus_fraction);
    if (!t.probabilities.empty()) {
      const auto best = std::max_element(t.probabilities.begin(), t.probabilities.end());
      ++s.best_counts[static_cast<std::size_t>(best - t.probabilities.begin())];
    }
  }
  for (const auto& name : s.parameters) {
    const auto col = s.column(name);
    s.boxplots.push_back(boxplot_stats(col));
  }
  return s;
}

nlohmann::json to_json(const TrialEvaluation& t) {
  return {{"problem", t.problem},   {"strategy", t.strategy},         {"parameters", t.parameters},
          {"W", t.W},               {"models", t.models},             {"probabilities", t.probabilities},
          {"T_sum", t.T_sum},       {"focus_fraction", t.focus_fraction}};
}

TrialEvaluation trial_from_json(const nlohmann::json& j) {
  TrialEvaluation t;
  try {
    t.problem = j.at("problem").get<std::string>();
    t.strategy = j.at("strategy").get<std::string>();
    t.parameters = j.at("parameters").get<std::vector<std::string>>();
    t.W = j.at("W").get<std::vector<double>>();
    t.models = j.at("models").get<std::vector<std::string>>();
    t.probabilities = j.at("probabilities").get<std::vector<double>>();
    t.T_sum = j.at("T_sum").get<double>();
    t.focus_fraction = j.at("focus_fraction").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed trial metrics: ") + e.what());
  }
  return t;
}

nlohmann::json to_json(const TrialSummary& s) {
  nlohmann::json params = nlohmann::json::object();
  for (std::size_t p = 0; p < s.parameters.size(); ++p) {
    const auto& b = s.boxplots[p];
    params[s.parameters[p]] = {{"W", s.column(s.parameters[p])},
                               {"median", b.median},
                               {"q1", b.q1},
                               {"q3", b.q3},
                               {"whisker_low", b.whisker_low},
                               {"whisker_high", b.whisker_high},
                               {"outliers", b.outliers}};
  }
  nlohmann::json table = nlohmann::json::array();
  for (const auto& row : s.probabilities) {
    nlohmann::json r = nlohmann::json::object();
    for (std::size_t m = 0; m < s.models.size(); ++m) r["P(" + s.models[m] + "|D)"] = row[m];
    table.push_back(r);
  }
  nlohmann::json best = nlohmann::json::object();
  for (std::size_t m = 0; m < s.models.size(); ++m) best[s.models[m]] = s.best_counts[m];
  return {{"problem", s.problem},
          {"trials", s.trials()},
          {"parameters", params},
          {"model_probabilities", table},
          {"best_model_counts", best},
          {"T_sum", s.T_sum},
          {"focus_fraction", s.focus_fraction}};
}

}  // namespace specloop
