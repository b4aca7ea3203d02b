#include "specloop/remc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "specloop/io.hpp"

namespace specloop {

namespace {

constexpr std::size_t kAdaptWindow = 50;
constexpr double kTargetLow = 0.2;
constexpr double kTargetHigh = 0.5;

double log_mean_exp(std::span<const double> v, double scale) {
  double m = kLogZero;
  for (double x : v) m = std::max(m, scale * x);
  if (m == kLogZero) return kLogZero;
  double s = 0.0;
  for (double x : v) s += std::exp(scale * x - m);
  return m + std::log(s / static_cast<double>(v.size()));
}

double metropolis_log_ratio(double beta, double ll_new, double ll_old, double lp_new, double lp_old) {
  double dl = 0.0;
  if (beta > 0.0) {
    if (ll_new == kLogZero) return kLogZero;
    dl = ll_old == kLogZero ? kInfinity : beta * (ll_new - ll_old);
  }
  return dl + (lp_new - lp_old);
}

}  // namespace

void ReplicaLadder::validate() const {
  if (betas.size() < 2) throw ArgumentError("ladder needs at least 2 rungs");
  if (betas.front() != 0.0 || betas.back() != 1.0) throw ArgumentError("ladder must start at 0 and end at 1");
  for (std::size_t i = 1; i < betas.size(); ++i)
    if (!(betas[i] > betas[i - 1])) throw ArgumentError("ladder must be strictly increasing");
}

ReplicaLadder beta_ladder(std::size_t L, double beta_min) {
  if (L < 2) throw ArgumentError("beta_ladder: L must be >= 2");
  if (!(beta_min > 0.0 && beta_min < 1.0)) throw ArgumentError("beta_ladder: beta_min must lie in (0, 1)");
  ReplicaLadder ladder;
  ladder.betas.push_back(0.0);
  if (L == 2) {
    ladder.betas.push_back(1.0);
    return ladder;
  }
  const std::size_t n = L - 1;  // nonzero rungs
  const double log_min = std::log(beta_min);
  for (std::size_t i = 0; i + 1 < n; ++i)
    ladder.betas.push_back(std::exp(log_min * (1.0 - static_cast<double>(i) / static_cast<double>(n - 1))));
  ladder.betas.push_back(1.0);
  return ladder;
}

void SamplerConfig::validate() const {
  ladder.validate();
  if (sweeps_burnin == 0 || sweeps_sample == 0 || thin == 0)
    throw ArgumentError("sampler sweep counts and thinning must be > 0");
  for (double s : step_scales)
    if (!(s > 0.0)) throw ArgumentError("sampler step scales must be > 0");
  if (!initial_states.empty() && initial_states.size() != ladder.size())
    throw ArgumentError("warm-start states must have one entry per rung");
}

std::size_t ModelPosterior::best() const {
  return static_cast<std::size_t>(std::max_element(probability.begin(), probability.end()) - probability.begin());
}

std::size_t ModelPosterior::second() const {
  const std::size_t b = best();
  if (probability.size() < 2) return b;
  std::size_t s = b == 0 ? 1 : 0;
  for (std::size_t i = 0; i < probability.size(); ++i)
    if (i != b && probability[i] > probability[s]) s = i;
  return s;
}

ReplicaState ReplicaState::from_theta(const ModelSpec& model, std::vector<double> theta,
                                      const LogLikelihoodFn& loglike) {
  if (theta.size() != model.dim()) throw ArgumentError("replica state has wrong dimension");
  ReplicaState s;
  s.coords.resize(theta.size());
  s.logprior = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    s.coords[i] = model.prior[i].to_sampling(theta[i]);
    s.logprior += model.prior[i].log_density_sampling(s.coords[i]);
  }
  s.theta = std::move(theta);
  s.loglike = loglike(s.theta);
  return s;
}

std::size_t SweepResult::count() const {
  return static_cast<std::size_t>(std::count(accepted.begin(), accepted.end(), true));
}

SweepResult mh_sweep(ReplicaState& state, double beta, const ModelSpec& model, const LogLikelihoodFn& loglike,
                     std::span<const double> step_scales, Rng& rng) {
  const std::size_t dim = model.dim();
  SweepResult result;
  result.accepted.assign(dim, false);
  if (beta == 0.0) {
    state = ReplicaState::from_theta(model, sample_prior(model, rng), loglike);
    result.accepted.assign(dim, true);
    return result;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::size_t i = 0; i < dim; ++i) {
    const auto& prior = model.prior[i];
    const double old_coord = state.coords[i];
    const double old_theta = state.theta[i];
    const double new_coord = old_coord + step_scales[i] * normal(rng);
    const double lp_old = prior.log_density_sampling(old_coord);
    const double lp_new = prior.log_density_sampling(new_coord);
    const double u = uniform(rng);
    if (lp_new == kLogZero) continue;
    state.theta[i] = prior.from_sampling(new_coord);
    const double ll_new = loglike(state.theta);
    double ratio = metropolis_log_ratio(beta, ll_new, state.loglike, lp_new, lp_old);
    if (std::isnan(ratio)) ratio = lp_new - lp_old;
    if (std::log(u) < ratio) {
      state.coords[i] = new_coord;
      state.loglike = ll_new;
      state.logprior += lp_new - lp_old;
      result.accepted[i] = true;
    } else {
      state.theta[i] = old_theta;
    }
  }
  return result;
}

double exchange_acceptance(double beta_lo, double ll_lo, double beta_hi, double ll_hi) {
  if (ll_lo == ll_hi) return 1.0;
  const double e = (beta_hi - beta_lo) * (ll_lo - ll_hi);
  if (std::isnan(e)) return 1.0;
  return e >= 0.0 ? 1.0 : std::exp(e);
}

std::vector<int> exchange_sweep(std::vector<ReplicaState>& states, std::span<const double> betas, int parity,
                                Rng& rng) {
  std::vector<int> outcome(states.size() > 0 ? states.size() - 1 : 0, -1);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::size_t l = static_cast<std::size_t>(parity & 1); l + 1 < states.size(); l += 2) {
    const double p = exchange_acceptance(betas[l], states[l].loglike, betas[l + 1], states[l + 1].loglike);
    const bool accept = uniform(rng) < p;
    if (accept) std::swap(states[l], states[l + 1]);
    outcome[l] = accept ? 1 : 0;
  }
  return outcome;
}

PosteriorSamples run_remc(const ModelSpec& model, const Dataset& data, const SamplerConfig& config) {
  const PoissonObjective objective(data);
  return run_remc(model, [&](std::span<const double> theta) { return objective(model, theta); }, config);
}

PosteriorSamples run_remc(const ModelSpec& model, const LogLikelihoodFn& loglike, const SamplerConfig& config) {
  config.validate();
  const std::size_t L = config.ladder.size();
  const std::size_t dim = model.dim();
  const auto& betas = config.ladder.betas;
  if (!config.step_scales.empty() && config.step_scales.size() != dim)
    throw ArgumentError("step_scales must have one entry per parameter");
  if (!config.rung_step_scales.empty() && config.rung_step_scales.size() != L * dim)
    throw ArgumentError("rung_step_scales must have ladder size x dimension entries");

  std::vector<Rng> rngs;
  rngs.reserve(L);
  for (std::size_t l = 0; l < L; ++l) rngs.push_back(make_stream(config.seed, "replica", l));
  Rng exchange_rng = make_stream(config.seed, "exchange");

  std::vector<double> max_step(dim);
  std::vector<std::vector<double>> steps(L, std::vector<double>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    const double scale = model.prior[i].sampling_scale();
    max_step[i] = 10.0 * scale;
    const double init = config.step_scales.empty() ? 0.5 * scale : config.step_scales[i];
    for (std::size_t l = 0; l < L; ++l)
      steps[l][i] = config.rung_step_scales.empty() ? init : config.rung_step_scales[l * dim + i];
  }

  std::vector<ReplicaState> states;
  states.reserve(L);
  for (std::size_t l = 0; l < L; ++l) {
    std::vector<double> theta = config.initial_states.empty() ? sample_prior(model, rngs[l]) : config.initial_states[l];
    states.push_back(ReplicaState::from_theta(model, std::move(theta), loglike));
  }

  PosteriorSamples out;
  out.betas = betas;
  out.loglike_traces.assign(L, {});
  std::vector<std::size_t> window_acc(L * dim, 0);
  std::vector<std::size_t> burnin_acc(L, 0);
  std::vector<std::size_t> sample_acc(L, 0);
  std::vector<std::size_t> ex_acc(L - 1, 0), ex_try(L - 1, 0);

  const std::size_t total = config.sweeps_burnin + config.sweeps_sample;
  for (std::size_t sweep = 0; sweep < total; ++sweep) {
    const bool burning = sweep < config.sweeps_burnin;
    for (std::size_t l = 0; l < L; ++l) {
      const SweepResult r = mh_sweep(states[l], betas[l], model, loglike, steps[l], rngs[l]);
      const std::size_t n = r.count();
      if (burning) {
        burnin_acc[l] += n;
        for (std::size_t i = 0; i < dim; ++i) window_acc[l * dim + i] += r.accepted[i] ? 1 : 0;
      } else {
        sample_acc[l] += n;
      }
    }
    if (config.exchange) {
      const auto ex = exchange_sweep(states, betas, static_cast<int>(sweep % 2), exchange_rng);
      for (std::size_t p = 0; p < ex.size(); ++p) {
        if (ex[p] < 0) continue;
        ++ex_try[p];
        ex_acc[p] += static_cast<std::size_t>(ex[p]);
      }
    }
    if (burning && config.adapt && (sweep + 1) % kAdaptWindow == 0) {
      for (std::size_t l = 1; l < L; ++l) {
        for (std::size_t i = 0; i < dim; ++i) {
          const double rate = static_cast<double>(window_acc[l * dim + i]) / static_cast<double>(kAdaptWindow);
          double& s = steps[l][i];
          if (rate < kTargetLow) s *= rate < 0.05 ? 0.5 : 0.75;
          else if (rate > kTargetHigh) s *= rate > 0.8 ? 2.0 : 1.3;
          s = std::clamp(s, 1e-12 * max_step[i], max_step[i]);
        }
      }
      std::fill(window_acc.begin(), window_acc.end(), 0);
    }
    if (!burning && (sweep - config.sweeps_burnin) % config.thin == 0) {
      out.theta_draws.push_back(states[L - 1].theta);
      for (std::size_t l = 0; l < L; ++l) out.loglike_traces[l].push_back(states[l].loglike);
    }
  }

  auto& acc = out.acc_stats;
  const double proposals = static_cast<double>(config.sweeps_sample * dim);
  for (std::size_t l = 0; l < L; ++l) {
    acc.metropolis.push_back(static_cast<double>(sample_acc[l]) / proposals);
    if (betas[l] > 0.0 && burnin_acc[l] == 0) {
      acc.stuck = true;
      acc.warnings.push_back("rung " + std::to_string(l) + " (beta=" + format_double(betas[l]) +
                             ") rejected every burn-in proposal");
    }
  }
  for (std::size_t p = 0; p + 1 < L; ++p)
    acc.exchange.push_back(ex_try[p] ? static_cast<double>(ex_acc[p]) / static_cast<double>(ex_try[p]) : 0.0);
  for (const auto& s : states) out.final_states.push_back(s.theta);
  for (const auto& s : steps) out.final_step_scales.insert(out.final_step_scales.end(), s.begin(), s.end());
  return out;
}

std::vector<double> map_estimate(const PosteriorSamples& samples, const ModelSpec& model, const Dataset& data) {
  if (samples.theta_draws.empty()) throw StateError("map_estimate: no retained draws");
  const PoissonObjective objective(data);
  std::size_t best = 0;
  double best_value = kLogZero;
  for (std::size_t i = 0; i < samples.theta_draws.size(); ++i) {
    const auto& theta = samples.theta_draws[i];
    const double v = objective(model, theta) + log_prior(model, theta);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  return samples.theta_draws[best];
}

double log_evidence(const PosteriorSamples& samples, const ReplicaLadder& ladder) {
  ladder.validate();
  if (samples.loglike_traces.size() != ladder.size())
    throw StateError("log_evidence: expected one log-likelihood trace per rung");
  for (const auto& t : samples.loglike_traces)
    if (t.empty()) throw StateError("log_evidence: empty log-likelihood trace");
  double log_z = 0.0;
  for (std::size_t l = 0; l + 1 < ladder.size(); ++l)
    log_z += log_mean_exp(samples.loglike_traces[l], ladder.betas[l + 1] - ladder.betas[l]);
  return log_z;
}

ModelPosterior model_posterior(std::span<const double> log_evidences, std::span<const double> prior_mass,
                               std::vector<std::string> labels) {
  if (log_evidences.empty()) throw ArgumentError("model_posterior: empty model set");
  if (prior_mass.size() != log_evidences.size()) throw ArgumentError("model_posterior: prior size mismatch");
  const double mass = std::accumulate(prior_mass.begin(), prior_mass.end(), 0.0);
  if (std::abs(mass - 1.0) > 1e-9) throw ArgumentError("model_posterior: model prior must sum to 1");
  ModelPosterior mp;
  mp.log_evidence.assign(log_evidences.begin(), log_evidences.end());
  mp.prior_mass.assign(prior_mass.begin(), prior_mass.end());
  if (labels.empty())
    for (std::size_t i = 0; i < log_evidences.size(); ++i) labels.push_back("model" + std::to_string(i));
  mp.labels = std::move(labels);

  std::vector<double> logw(log_evidences.size());
  for (std::size_t i = 0; i < logw.size(); ++i)
    logw[i] = prior_mass[i] > 0.0 ? log_evidences[i] + std::log(prior_mass[i]) : kLogZero;
  const double m = *std::max_element(logw.begin(), logw.end());
  if (!std::isfinite(m)) throw NumericalError("model_posterior: no model has finite evidence");
  double s = 0.0;
  for (double w : logw) s += std::exp(w - m);
  for (double w : logw) mp.probability.push_back(std::exp(w - m) / s);
  return mp;
}

void write_posterior_dump(const std::string& csv_path, const std::string& meta_path, const PosteriorSamples& samples,
                          const SamplerConfig& config) {
  std::string csv = "replica_beta,draw_index";
  const std::size_t dim = samples.theta_draws.empty() ? 0 : samples.theta_draws.front().size();
  for (std::size_t i = 0; i < dim; ++i) csv += ",param_" + std::to_string(i);
  csv += '\n';
  for (std::size_t d = 0; d < samples.theta_draws.size(); ++d) {
    csv += "1," + std::to_string(d);
    for (double v : samples.theta_draws[d]) csv += ',' + format_double(v);
    csv += '\n';
  }
  write_file_atomic(csv_path, csv);

  nlohmann::ordered_json meta;
  meta["seed"] = config.seed;
  meta["betas"] = config.ladder.betas;
  meta["sweeps_burnin"] = config.sweeps_burnin;
  meta["sweeps_sample"] = config.sweeps_sample;
  meta["thin"] = config.thin;
  meta["adapt"] = config.adapt;
  meta["metropolis_acceptance"] = samples.acc_stats.metropolis;
  meta["exchange_acceptance"] = samples.acc_stats.exchange;
  meta["stuck"] = samples.acc_stats.stuck;
  meta["warnings"] = samples.acc_stats.warnings;
  write_file_atomic(meta_path, meta.dump(2) + "\n");
}

}  // namespace specloop
