#pragma once

// Replica-exchange Monte Carlo over the tempered family p(D|theta)^beta p(theta).
// The beta = 1 replica gives posterior draws; the full ladder gives the
// log-evidence by stepping-stone sampling.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specloop/probmodel.hpp"

namespace specloop {

struct ReplicaLadder {
  std::vector<double> betas;  // strictly increasing, betas.front() == 0, betas.back() == 1

  [[nodiscard]] std::size_t size() const { return betas.size(); }
  void validate() const;
};

/// beta_1 = 0, then L-1 values geometric from beta_min to 1.
ReplicaLadder beta_ladder(std::size_t L, double beta_min);

struct SamplerConfig {
  ReplicaLadder ladder = beta_ladder(32, 1e-4);
  std::size_t sweeps_burnin = 10000;
  std::size_t sweeps_sample = 20000;
  std::size_t thin = 1;
  /// Initial proposal widths in sampling coordinates; empty picks them from the prior.
  std::vector<double> step_scales;
  /// Optional per-rung widths, flattened rung-major (L x dim); overrides step_scales.
  std::vector<double> rung_step_scales;
  std::uint64_t seed = 1;
  bool adapt = true;
  bool exchange = true;
  /// Optional starting states, one per ladder rung (warm start).
  std::vector<std::vector<double>> initial_states;

  void validate() const;
};

struct AcceptanceStats {
  std::vector<double> metropolis;  // per rung, over retained sweeps
  std::vector<double> exchange;    // per adjacent pair (l, l+1), over all sweeps
  bool stuck = false;              // some rung rejected every burn-in proposal
  std::vector<std::string> warnings;
};

struct PosteriorSamples {
  std::vector<double> betas;
  std::vector<std::vector<double>> theta_draws;     // retained beta = 1 draws
  std::vector<std::vector<double>> loglike_traces;  // [rung][retained sweep]
  AcceptanceStats acc_stats;
  std::vector<std::vector<double>> final_states;    // per rung, for warm starts
  std::vector<double> final_step_scales;            // per rung x param, flattened
};

struct ModelPosterior {
  std::vector<std::string> labels;
  std::vector<double> log_evidence;
  std::vector<double> prior_mass;
  std::vector<double> probability;

  [[nodiscard]] std::size_t best() const;
  /// Index of the most probable model other than best(); equals best() for a single model.
  [[nodiscard]] std::size_t second() const;
};

using LogLikelihoodFn = std::function<double(std::span<const double> theta)>;

/// Replica state kept in sampling coordinates alongside the model parameters.
struct ReplicaState {
  std::vector<double> theta;
  std::vector<double> coords;  // sampling coordinates of theta
  double loglike = 0.0;
  double logprior = 0.0;

  static ReplicaState from_theta(const ModelSpec& model, std::vector<double> theta, const LogLikelihoodFn& loglike);
};

struct SweepResult {
  std::vector<bool> accepted;  // per coordinate
  [[nodiscard]] std::size_t count() const;
};

/// One single-site Gaussian random-walk sweep at inverse temperature beta.
/// At beta == 0 the state is replaced by an independent prior draw.
SweepResult mh_sweep(ReplicaState& state, double beta, const ModelSpec& model, const LogLikelihoodFn& loglike,
                     std::span<const double> step_scales, Rng& rng);

/// Swaps states between rungs (l, l+1) for l of the given parity. Returns,
/// per pair index l, -1 if not attempted, else 0/1 for rejected/accepted.
std::vector<int> exchange_sweep(std::vector<ReplicaState>& states, std::span<const double> betas, int parity,
                                Rng& rng);

/// Probability that an exchange between (beta_lo, ll_lo) and (beta_hi, ll_hi) is accepted.
double exchange_acceptance(double beta_lo, double ll_lo, double beta_hi, double ll_hi);

PosteriorSamples run_remc(const ModelSpec& model, const Dataset& data, const SamplerConfig& config);
PosteriorSamples run_remc(const ModelSpec& model, const LogLikelihoodFn& loglike, const SamplerConfig& config);

/// Retained beta = 1 draw maximizing log-likelihood + log-prior (earliest on ties).
std::vector<double> map_estimate(const PosteriorSamples& samples, const ModelSpec& model, const Dataset& data);

/// Stepping-stone estimate of log p(D|M).
double log_evidence(const PosteriorSamples& samples, const ReplicaLadder& ladder);

ModelPosterior model_posterior(std::span<const double> log_evidences, std::span<const double> prior_mass,
                               std::vector<std::string> labels = {});

void write_posterior_dump(const std::string& csv_path, const std::string& meta_path, const PosteriorSamples& samples,
                          const SamplerConfig& config);

}  // namespace specloop
