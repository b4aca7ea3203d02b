#pragma once

// The closed measurement loop: a simulated Poisson oracle, sequential design
// driven by the posterior-expected KL scores, the GP baseline, and static
// equal-exposure experiments.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "specloop/acquisition.hpp"
#include "specloop/evalmetrics.hpp"
#include "specloop/gp.hpp"
#include "specloop/probmodel.hpp"
#include "specloop/remc.hpp"

namespace specloop {

enum class Problem { Deconvolution, Hamiltonian };
enum class CandidatePolicy { PeaksSliding, FixedPair, SingleModel };
enum class Strategy { Parametric, Gp, Static };

std::string to_string(Problem p);
std::string to_string(CandidatePolicy p);
std::string to_string(Strategy s);

struct GridSpec {
  double start = 0.0;
  double step = 1.0;
  std::size_t count = 2;

  [[nodiscard]] std::vector<double> points() const;
};

struct SamplerSettings {
  std::size_t replicas = 16;
  double beta_min = 1e-3;
  std::size_t burnin = 500;
  std::size_t samples = 1000;
  std::size_t thin = 1;
  /// Burn-in used when a model is warm-started from the previous round.
  std::size_t burnin_warm = 200;
  /// Acquisition uses every draw_stride-th retained draw.
  std::size_t draw_stride = 1;
  /// Start each round from the previous round's final replica states.
  bool warm_start = false;

  [[nodiscard]] SamplerConfig to_config(std::uint64_t seed) const;
  void validate() const;
};

struct CampaignConfig {
  std::string name = "custom";
  Problem problem = Problem::Deconvolution;
  GridSpec grid;
  double T_unit = 1.0;
  std::size_t n = 10;
  std::size_t k = 0;
  /// Truth model index (peak count, or 2/3 for H2/H3) and its parameters.
  int truth_model = 3;
  std::vector<double> truth;
  CandidatePolicy candidate_policy = CandidatePolicy::PeaksSliding;
  std::vector<int> initial_models;
  std::vector<int> evaluation_models;
  SamplerSettings sampler;
  SamplerSettings eval_sampler;
  Strategy strategy = Strategy::Parametric;
  double T_static = 1.0;
  /// Exposure fraction inside [focus_lo, focus_hi] is reported per run.
  double focus_lo = 0.0;
  double focus_hi = 0.0;
  bool dump_acquisition = false;
  int gp_restarts = 8;
  std::uint64_t seed = 1;

  void validate() const;
  /// T_sum the configuration implies.
  [[nodiscard]] double planned_T_sum() const;
};

nlohmann::json to_json(const CampaignConfig& c);
CampaignConfig config_from_json(const nlohmann::json& j);

std::vector<std::string> preset_names();
CampaignConfig preset(const std::string& name);

/// Model "M<index>" for the problem.
ModelSpec make_model(Problem problem, int index);
std::string model_label(int index);

/// Poisson draw with mean rate * T; a zero mean always gives 0.
std::int64_t simulate_measurement(double rate, double T, Rng& rng);
std::int64_t simulate_measurement(const ModelSpec& truth_model, std::span<const double> truth, double x, double T,
                                  Rng& rng);

/// {1, 2} for K_hat = 1, else {K_hat - 1, K_hat, K_hat + 1}.
std::vector<int> update_candidate_set(int K_hat);

struct RoundRecord {
  std::size_t round = 0;
  std::vector<std::string> models;
  std::vector<double> log_evidence;
  std::vector<double> probability;
  std::string best;
  std::string second;
  std::vector<double> map;  // MAP of the best model
  std::vector<double> selected;
  std::optional<GpHyper> gp_hyper;
  std::vector<std::string> warnings;
  AcquisitionScores scores;  // not part of the JSON record
};

nlohmann::json to_json(const RoundRecord& r);

struct FinalEvaluation {
  std::vector<std::string> models;
  std::vector<double> log_evidence;
  std::vector<double> probability;
  std::vector<CiDeviation> deviations;  // W for the truth model's parameters
  std::vector<double> map;              // MAP of the truth model
};

struct CampaignHistory {
  CampaignConfig config;
  std::vector<RoundRecord> rounds;
  std::vector<std::size_t> dataset_sizes;  // after the initial sweep and after each round
  Dataset dataset;
  double T_sum = 0.0;
  std::optional<FinalEvaluation> final_evaluation;
  bool aborted = false;
  std::string abort_reason;
  std::size_t remc_runs = 0;

  [[nodiscard]] TrialEvaluation trial() const;
};

/// Fraction of total exposure spent at lo <= x <= hi.
double exposure_fraction(const Dataset& data, double lo, double hi);

CampaignHistory run_sequential(const CampaignConfig& config);
CampaignHistory run_static(const CampaignConfig& config);
/// Dispatches on config.strategy.
CampaignHistory run_campaign(const CampaignConfig& config);

/// REMC pass over the evaluation models and W indices for the truth model.
FinalEvaluation evaluate_final(const CampaignConfig& config, const Dataset& data, std::size_t* remc_runs = nullptr);

/// config.json, dataset.csv, rounds.jsonl, metrics.json and (if enabled)
/// acquisition/round_NNNN.csv, each written atomically.
void write_history(const std::filesystem::path& dir, const CampaignHistory& history);

}  // namespace specloop
