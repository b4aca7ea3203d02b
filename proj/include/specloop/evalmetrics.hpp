#pragma once

// Credible-interval deviation indices (W) and multi-trial summaries.

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace specloop {

/// Empirical quantile with linear interpolation between order statistics
/// (h = (n - 1) p). `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::span<const double> values, double p);

inline constexpr std::size_t kMinCiDraws = 100;

/// max(|truth - q_0.025|, |truth - q_0.975|).
double ci_deviation(std::span<const double> draws, double truth);

/// ci_deviation in u = 1 / sigma^2.
double sigma_ci_deviation(std::span<const double> sigma_draws, double sigma_truth);

enum class ParamTransform { Identity, InverseSquare };

struct CiDeviation {
  std::string parameter;
  double W = 0.0;
};

/// W for every component of theta. Columns are read from `draws`
/// (each of dimension truth.size()); transforms select W_sigma style indices.
std::vector<CiDeviation> parameter_deviations(const std::vector<std::vector<double>>& draws,
                                              std::span<const double> truth,
                                              std::span<const std::string> names,
                                              std::span<const ParamTransform> transforms);

struct BoxplotStats {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;   // smallest value >= q1 - 1.5 IQR
  double whisker_high = 0.0;  // largest value <= q3 + 1.5 IQR
  std::vector<double> outliers;
};

BoxplotStats boxplot_stats(std::span<const double> values);

/// What one campaign contributes to a summary.
struct TrialEvaluation {
  std::string problem;
  std::string strategy;
  std::vector<std::string> parameters;
  std::vector<double> W;
  std::vector<std::string> models;
  std::vector<double> probabilities;
  double T_sum = 0.0;
  double focus_fraction = 0.0;
};

struct TrialSummary {
  std::string problem;
  std::vector<std::string> parameters;
  std::vector<std::string> models;
  std::vector<std::vector<double>> W;              // [trial][parameter]
  std::vector<std::vector<double>> probabilities;  // [trial][model]
  std::vector<double> T_sum;
  std::vector<double> focus_fraction;
  std::vector<BoxplotStats> boxplots;              // per parameter
  std::vector<std::size_t> best_counts;            // per model, trials where it has max probability

  [[nodiscard]] std::size_t trials() const { return W.size(); }
  [[nodiscard]] std::vector<double> column(const std::string& parameter) const;
};

TrialSummary summarize_trials(std::span<const TrialEvaluation> trials);

nlohmann::json to_json(const TrialEvaluation& trial);
TrialEvaluation trial_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrialSummary& summary);

}  // namespace specloop
