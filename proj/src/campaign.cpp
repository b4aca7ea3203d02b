#include "specloop/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "specloop/anderson.hpp"
#include "specloop/io.hpp"
#include "specloop/parallel.hpp"
#include "specloop/peaks.hpp"

namespace specloop {

using nlohmann::json;

std::string to_string(Problem p) { return p == Problem::Deconvolution ? "deconvolution" : "hamiltonian"; }

std::string to_string(CandidatePolicy p) {
  switch (p) {
    case CandidatePolicy::PeaksSliding: return "peaks_sliding";
    case CandidatePolicy::FixedPair: return "fixed_pair";
    case CandidatePolicy::SingleModel: return "single_model";
  }
  return "?";
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Parametric: return "parametric";
    case Strategy::Gp: return "gp";
    case Strategy::Static: return "static";
  }
  return "?";
}

namespace {

Problem parse_problem(const std::string& s) {
  if (s == "deconvolution") return Problem::Deconvolution;
  if (s == "hamiltonian") return Problem::Hamiltonian;
  throw ArgumentError("unknown problem '" + s + "'");
}

CandidatePolicy parse_policy(const std::string& s) {
  if (s == "peaks_sliding") return CandidatePolicy::PeaksSliding;
  if (s == "fixed_pair") return CandidatePolicy::FixedPair;
  if (s == "single_model") return CandidatePolicy::SingleModel;
  throw ArgumentError("unknown candidate_policy '" + s + "'");
}

Strategy parse_strategy(const std::string& s) {
  if (s == "parametric") return Strategy::Parametric;
  if (s == "gp") return Strategy::Gp;
  if (s == "static") return Strategy::Static;
  throw ArgumentError("unknown strategy '" + s + "'");
}

json sampler_json(const SamplerSettings& s) {
  return {{"replicas", s.replicas}, {"beta_min", s.beta_min},       {"burnin", s.burnin},
          {"samples", s.samples},   {"thin", s.thin},               {"burnin_warm", s.burnin_warm},
          {"draw_stride", s.draw_stride}, {"warm_start", s.warm_start}};
}

template <typename T>
void overlay(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

SamplerSettings sampler_from_json(const json& j, SamplerSettings s) {
  static const std::vector<std::string> keys{"replicas", "beta_min",    "burnin",     "samples",
                                             "thin",     "burnin_warm", "draw_stride", "warm_start"};
  for (const auto& [k, v] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ArgumentError("unknown sampler key '" + k + "'");
  overlay(j, "replicas", s.replicas);
  overlay(j, "beta_min", s.beta_min);
  overlay(j, "burnin", s.burnin);
  overlay(j, "samples", s.samples);
  overlay(j, "thin", s.thin);
  overlay(j, "burnin_warm", s.burnin_warm);
  overlay(j, "draw_stride", s.draw_stride);
  overlay(j, "warm_start", s.warm_start);
  return s;
}

bool is_sigma(const std::string& name) { return name.rfind("sigma", 0) == 0; }

struct WarmStart {
  std::vector<std::vector<double>> states;
  std::vector<double> step_scales;
};

}  // namespace

std::vector<double> GridSpec::points() const {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = start + step * static_cast<double>(i);
  return out;
}

SamplerConfig SamplerSettings::to_config(std::uint64_t seed) const {
  SamplerConfig c;
  c.ladder = beta_ladder(replicas, beta_min);
  c.sweeps_burnin = burnin;
  c.sweeps_sample = samples;
  c.thin = thin;
  c.seed = seed;
  return c;
}

void SamplerSettings::validate() const {
  if (replicas < 2) throw ArgumentError("sampler.replicas must be >= 2");
  if (!(beta_min > 0.0 && beta_min < 1.0)) throw ArgumentError("sampler.beta_min must lie in (0, 1)");
  if (samples == 0 || thin == 0 || draw_stride == 0)
    throw ArgumentError("sampler.samples, thin and draw_stride must be >= 1");
}

void CampaignConfig::validate() const {
  if (grid.count < 2) throw ArgumentError("grid.count must be >= 2");
  if (!(grid.step > 0.0) || !std::isfinite(grid.start)) throw ArgumentError("grid must be strictly increasing");
  if (!(T_unit > 0.0)) throw ArgumentError("T_unit must be > 0");
  if (n % 2 != 0) throw ArgumentError("n must be even");
  if (strategy == Strategy::Static && !(T_static > 0.0)) throw ArgumentError("T_static must be > 0");
  if (initial_models.empty() || evaluation_models.empty())
    throw ArgumentError("initial_models and evaluation_models must be non-empty");
  if (std::find(evaluation_models.begin(), evaluation_models.end(), truth_model) == evaluation_models.end())
    throw ArgumentError("evaluation_models must contain truth_model");
  for (int m : initial_models) (void)make_model(problem, m);
  for (int m : evaluation_models) (void)make_model(problem, m);
  if (make_model(problem, truth_model).dim() != truth.size())
    throw ArgumentError("truth has the wrong dimension for truth_model");
  if (candidate_policy == CandidatePolicy::SingleModel && initial_models.size() != 1)
    throw ArgumentError("single_model policy needs exactly one initial model");
  if (candidate_policy == CandidatePolicy::PeaksSliding && problem != Problem::Deconvolution)
    throw ArgumentError("peaks_sliding applies to deconvolution only");
  sampler.validate();
  eval_sampler.validate();
  if (eval_sampler.samples < kMinCiDraws) throw ArgumentError("eval_sampler.samples must be >= 100");
}

double CampaignConfig::planned_T_sum() const {
  const auto N = static_cast<double>(grid.count);
  if (strategy == Strategy::Static) return N * T_static;
  return N * T_unit + static_cast<double>(n) * static_cast<double>(k) * T_unit;
}

json to_json(const CampaignConfig& c) {
  return {{"name", c.name},
          {"problem", to_string(c.problem)},
          {"grid", {{"start", c.grid.start}, {"step", c.grid.step}, {"count", c.grid.count}}},
          {"T_unit", c.T_unit},
          {"n", c.n},
          {"k", c.k},
          {"truth_model", c.truth_model},
          {"truth", c.truth},
          {"candidate_policy", to_string(c.candidate_policy)},
          {"initial_models", c.initial_models},
          {"evaluation_models", c.evaluation_models},
          {"sampler", sampler_json(c.sampler)},
          {"eval_sampler", sampler_json(c.eval_sampler)},
          {"strategy", to_string(c.strategy)},
          {"T_static", c.T_static},
          {"focus_region", {c.focus_lo, c.focus_hi}},
          {"dump_acquisition", c.dump_acquisition},
          {"gp_restarts", c.gp_restarts},
          {"seed", c.seed}};
}

CampaignConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ArgumentError("config must be a JSON object");
  static const std::vector<std::string> keys{
      "preset",  "name",         "problem",          "grid",        "T_unit",           "n",
      "k",       "truth_model",  "truth",            "candidate_policy", "initial_models", "evaluation_models",
      "sampler", "eval_sampler", "strategy",         "T_static",    "focus_region",     "dump_acquisition",
      "gp_restarts", "seed"};
  for (const auto& [k, v] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ArgumentError("unknown config key '" + k + "'");
  CampaignConfig c = j.contains("preset") ? preset(j.at("preset").get<std::string>()) : CampaignConfig{};
  try {
    overlay(j, "name", c.name);
    if (j.contains("problem")) c.problem = parse_problem(j.at("problem").get<std::string>());
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      overlay(g, "start", c.grid.start);
      overlay(g, "step", c.grid.step);
      overlay(g, "count", c.grid.count);
    }
    overlay(j, "T_unit", c.T_unit);
    overlay(j, "n", c.n);
    overlay(j, "k", c.k);
    overlay(j, "truth_model", c.truth_model);
    overlay(j, "truth", c.truth);
    if (j.contains("candidate_policy")) c.candidate_policy = parse_policy(j.at("candidate_policy").get<std::string>());
    overlay(j, "initial_models", c.initial_models);
    overlay(j, "evaluation_models", c.evaluation_models);
    if (j.contains("sampler")) c.sampler = sampler_from_json(j.at("sampler"), c.sampler);
    if (j.contains("eval_sampler")) c.eval_sampler = sampler_from_json(j.at("eval_sampler"), c.eval_sampler);
    if (j.contains("strategy")) c.strategy = parse_strategy(j.at("strategy").get<std::string>());
    overlay(j, "T_static", c.T_static);
    if (j.contains("focus_region")) {
      const auto r = j.at("focus_region").get<std::vector<double>>();
      if (r.size() != 2) throw ArgumentError("focus_region must be [lo, hi]");
      c.focus_lo = r[0];
      c.focus_hi = r[1];
    }
    overlay(j, "dump_acquisition", c.dump_acquisition);
    overlay(j, "gp_restarts", c.gp_restarts);
    overlay(j, "seed", c.seed);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<std::string> preset_names() { return {"deconv-sec3", "hamiltonian-sec4", "deconv-desk", "hamiltonian-desk"}; }

CampaignConfig preset(const std::string& name) {
  CampaignConfig c;
  c.name = name;
  c.n = 10;
  if (name == "deconv-sec3" || name == "deconv-desk") {
    const PeakParams t = deconvolution_truth();
    c.problem = Problem::Deconvolution;
    c.truth_model = 3;
    c.truth = t.to_theta();
    c.candidate_policy = CandidatePolicy::PeaksSliding;
    c.initial_models = {1, 2};
    c.evaluation_models = {2, 3, 4};
    c.focus_lo = t.mu.front() - 3.0 * t.sigma.front();
    c.focus_hi = t.mu.back() + 3.0 * t.sigma.back();
    c.T_unit = 1.0;
    if (name == "deconv-sec3") {
      c.grid = {157.0, 0.025, 400};
      c.k = 160;
      c.T_static = 5.0;
      c.sampler = {32, 1e-4, 2000, 4000, 1, 1000, 4};
      c.eval_sampler = {32, 1e-4, 4000, 8000, 1, 4000, 1};
    } else {
      c.grid = {157.0, 0.1, 100};
      c.k = 20;
      c.T_static = 3.0;
      c.sampler = {16, 1e-3, 600, 800, 1, 300, 2};
      c.eval_sampler = {20, 1e-3, 1500, 2000, 1, 1500, 1};
    }
  } else if (name == "hamiltonian-sec4" || name == "hamiltonian-desk") {
    const HamiltonianParams t = hamiltonian_truth();
    c.problem = Problem::Hamiltonian;
    c.truth_model = 3;
    c.truth = hamiltonian_theta(t);
    c.candidate_policy = CandidatePolicy::FixedPair;
    c.initial_models = {2, 3};
    c.evaluation_models = {2, 3};
    const SpectrumLines lines = spectrum_lines(t);
    double lo = kInfinity, hi = -kInfinity;
    for (const auto& l : lines.lines) {
      lo = std::min(lo, l.energy - lines.ground_energy + t.b);
      hi = std::max(hi, l.energy - lines.ground_energy + t.b);
    }
    c.focus_lo = lo - 3.0 * t.Gamma;
    c.focus_hi = hi + 3.0 * t.Gamma;
    c.T_unit = 6.0;
    if (name == "hamiltonian-sec4") {
      c.grid = {-30.0, 0.125, 400};
      c.k = 160;
      c.T_static = 30.0;
      c.sampler = {32, 1e-4, 2000, 4000, 1, 1000, 4};
      c.eval_sampler = {32, 1e-4, 4000, 8000, 1, 4000, 1};
    } else {
      c.grid = {-30.0, 0.5, 100};
      c.k = 20;
      c.T_static = 18.0;
      c.sampler = {16, 1e-3, 600, 800, 1, 300, 2};
      c.eval_sampler = {20, 1e-3, 1500, 2000, 1, 1500, 1};
    }
  } else {
    throw ArgumentError("unknown preset '" + name + "'");
  }
  return c;
}

std::string model_label(int index) { return "M" + std::to_string(index); }

ModelSpec make_model(Problem problem, int index) {
  if (problem == Problem::Deconvolution) {
    if (index < 1) throw ArgumentError("peak models need K >= 1");
    return make_peak_model(index);
  }
  if (index == 2) return make_hamiltonian_model(HamiltonianKind::H2);
  if (index == 3) return make_hamiltonian_model(HamiltonianKind::H3);
  throw ArgumentError("Hamiltonian models are M2 and M3 only");
}

std::int64_t simulate_measurement(double rate, double T, Rng& rng) {
  if (!(T > 0.0)) throw ArgumentError("simulate_measurement: T must be > 0");
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw EvaluationError("simulate_measurement: invalid rate");
  const double mean = rate * T;
  if (mean == 0.0) return 0;
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(rng);
}

std::int64_t simulate_measurement(const ModelSpec& truth_model, std::span<const double> truth, double x, double T,
                                  Rng& rng) {
  return simulate_measurement(truth_model.rate(truth, x), T, rng);
}

std::vector<int> update_candidate_set(int K_hat) {
  if (K_hat < 1) throw ArgumentError("update_candidate_set: K_hat must be >= 1");
  if (K_hat == 1) return {1, 2};
  return {K_hat - 1, K_hat, K_hat + 1};
}

json to_json(const RoundRecord& r) {
  json j = {{"round", r.round},
            {"models", r.models},
            {"log_evidence", r.log_evidence},
            {"probability", r.probability},
            {"best", r.best},
            {"second", r.second},
            {"map", r.map},
            {"selected", r.selected},
            {"warnings", r.warnings}};
  if (r.gp_hyper)
    j["gp_hyper"] = {{"theta1", r.gp_hyper->theta1}, {"theta2", r.gp_hyper->theta2}, {"xi", r.gp_hyper->xi}};
  return j;
}

double exposure_fraction(const Dataset& data, double lo, double hi) {
  double inside = 0.0, total = 0.0;
  for (const auto& r : data.records()) {
    total += r.exposure;
    if (r.x >= lo && r.x <= hi) inside += r.exposure;
  }
  return total > 0.0 ? inside / total : 0.0;
}

TrialEvaluation CampaignHistory::trial() const {
  if (!final_evaluation) throw StateError("campaign has no final evaluation");
  TrialEvaluation t;
  t.problem = to_string(config.problem);
  t.strategy = to_string(config.strategy);
  for (const auto& d : final_evaluation->deviations) {
    t.parameters.push_back(d.parameter);
    t.W.push_back(d.W);
  }
  t.models = final_evaluation->models;
  t.probabilities = final_evaluation->probability;
  t.T_sum = T_sum;
  t.focus_fraction = exposure_fraction(dataset, config.focus_lo, config.focus_hi);
  return t;
}

FinalEvaluation evaluate_final(const CampaignConfig& config, const Dataset& data, std::size_t* remc_runs) {
  const auto& ids = config.evaluation_models;
  std::vector<ModelSpec> models;
  for (int m : ids) models.push_back(make_model(config.problem, m));
  std::vector<PosteriorSamples> samples(ids.size());
  parallel_for(ids.size(), [&](std::size_t i) {
    const SamplerConfig sc = config.eval_sampler.to_config(derive_seed(config.seed, "eval", static_cast<std::uint64_t>(ids[i])));
    samples[i] = run_remc(models[i], data, sc);
  });
  if (remc_runs) *remc_runs += ids.size();

  FinalEvaluation out;
  const ReplicaLadder ladder = beta_ladder(config.eval_sampler.replicas, config.eval_sampler.beta_min);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out.models.push_back(model_label(ids[i]));
    out.log_evidence.push_back(log_evidence(samples[i], ladder));
  }
  const std::vector<double> mass(ids.size(), 1.0 / static_cast<double>(ids.size()));
  out.probability = model_posterior(out.log_evidence, mass, out.models).probability;

  const auto t = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), config.truth_model) - ids.begin());
  const ModelSpec& truth_model = models[t];
  auto draws = samples[t].theta_draws;
  std::vector<double> truth = config.truth;
  std::vector<ParamTransform> transforms(truth.size(), ParamTransform::Identity);
  if (config.problem == Problem::Deconvolution) {
    for (auto& d : draws) canonicalize_peaks(d);
    canonicalize_peaks(truth);
    for (std::size_t p = 0; p < truth.size(); ++p)
      if (is_sigma(truth_model.param_names[p])) transforms[p] = ParamTransform::InverseSquare;
  }
  out.deviations = parameter_deviations(draws, truth, truth_model.param_names, transforms);
  out.map = map_estimate(samples[t], truth_model, data);
  if (config.problem == Problem::Deconvolution) canonicalize_peaks(out.map);
  return out;
}

namespace {

void parametric_round(const CampaignConfig& config, const Dataset& data, std::span<const double> grid,
                      std::vector<int>& candidates, std::map<int, WarmStart>& warm, RoundRecord& rec,
                      std::size_t& remc_runs) {
  std::vector<ModelSpec> models;
  for (int m : candidates) models.push_back(make_model(config.problem, m));
  std::vector<PosteriorSamples> samples(models.size());
  parallel_for(models.size(), [&](std::size_t i) {
    SamplerConfig sc = config.sampler.to_config(
        derive_seed(config.seed, "sampler", rec.round * 1024 + static_cast<std::size_t>(candidates[i])));
    if (const auto it = warm.find(candidates[i]); config.sampler.warm_start && it != warm.end()) {
      sc.initial_states = it->second.states;
      sc.rung_step_scales = it->second.step_scales;
      sc.sweeps_burnin = config.sampler.burnin_warm;
    }
    samples[i] = run_remc(models[i], data, sc);
  });
  remc_runs += models.size();

  const ReplicaLadder ladder = beta_ladder(config.sampler.replicas, config.sampler.beta_min);
  for (std::size_t i = 0; i < models.size(); ++i) {
    rec.models.push_back(model_label(candidates[i]));
    rec.log_evidence.push_back(log_evidence(samples[i], ladder));
    warm[candidates[i]] = {samples[i].final_states, samples[i].final_step_scales};
    for (const auto& w : samples[i].acc_stats.warnings) rec.warnings.push_back(rec.models.back() + ": " + w);
  }
  const std::vector<double> mass(models.size(), 1.0 / static_cast<double>(models.size()));
  const ModelPosterior mp = model_posterior(rec.log_evidence, mass, rec.models);
  rec.probability = mp.probability;
  const std::size_t b = mp.best();
  const std::size_t s = mp.second();
  rec.best = rec.models[b];
  rec.second = rec.models[s];
  rec.map = map_estimate(samples[b], models[b], data);

  std::vector<double> f_hat(grid.size());
  models[b].forward(rec.map, grid, f_hat);
  const std::size_t stride = config.sampler.draw_stride;
  rec.scores.grid.assign(grid.begin(), grid.end());
  rec.scores.g_best = uncertainty_scores(samples[b], f_hat, models[b], grid, 1.0, stride);
  // With a single candidate the second-best model is the best one.
  rec.scores.g_second = s == b ? rec.scores.g_best
                               : uncertainty_scores(samples[s], f_hat, models[s], grid, 1.0, stride);
  rec.selected = select_points(rec.scores, config.n);

  if (config.candidate_policy == CandidatePolicy::PeaksSliding) candidates = update_candidate_set(candidates[b]);
}

void gp_round(const CampaignConfig& config, const Dataset& data, std::span<const double> grid, RoundRecord& rec) {
  const auto agg = aggregate(data, grid);
  const GpFit fit = gp_fit(agg, derive_seed(config.seed, "gp", rec.round), config.gp_restarts);
  std::vector<double> xs, ys;
  for (const auto& p : agg) {
    xs.push_back(p.x);
    ys.push_back(p.y_bar);
  }
  const GpPosterior post(xs, ys, fit.hyper, fit.mu0);
  std::vector<double> vars(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) vars[i] = post.predict(grid[i]).second;
  rec.gp_hyper = fit.hyper;
  if (fit.degenerate) rec.warnings.push_back("degenerate GP data; default hyperparameters used");
  rec.scores.grid.assign(grid.begin(), grid.end());
  rec.scores.g_best = vars;
  rec.selected = gp_select(vars, grid, config.n);
}

}  // namespace

CampaignHistory run_sequential(const CampaignConfig& config) {
  config.validate();
  if (config.strategy == Strategy::Static) throw ArgumentError("run_sequential needs a sequential strategy");
  CampaignHistory h;
  h.config = config;
  const std::vector<double> grid = config.grid.points();
  const ModelSpec truth_model = make_model(config.problem, config.truth_model);
  Rng oracle = make_stream(config.seed, "oracle");
  auto measure = [&](double x) {
    h.dataset.append({x, simulate_measurement(truth_model, config.truth, x, config.T_unit, oracle), config.T_unit});
  };

  for (double x : grid) measure(x);
  h.dataset_sizes.push_back(h.dataset.size());

  std::vector<int> candidates = config.initial_models;
  std::map<int, WarmStart> warm;
  try {
    for (std::size_t r = 1; r <= config.k; ++r) {
      RoundRecord rec;
      rec.round = r;
      if (config.strategy == Strategy::Gp) {
        gp_round(config, h.dataset, grid, rec);
      } else {
        parametric_round(config, h.dataset, grid, candidates, warm, rec, h.remc_runs);
      }
      // The photon energy can only be swept upwards within a round.
      std::sort(rec.selected.begin(), rec.selected.end());
      for (double x : rec.selected) measure(x);
      h.dataset_sizes.push_back(h.dataset.size());
      h.rounds.push_back(std::move(rec));
    }
  } catch (const std::exception& e) {
    h.aborted = true;
    h.abort_reason = "round " + std::to_string(h.rounds.size() + 1) + ": " + e.what();
  }
  h.T_sum = h.dataset.total_exposure();
  if (!h.aborted) {
    try {
      h.final_evaluation = evaluate_final(config, h.dataset, &h.remc_runs);
    } catch (const std::exception& e) {
      h.aborted = true;
      h.abort_reason = std::string("final evaluation: ") + e.what();
    }
  }
  return h;
}

CampaignHistory run_static(const CampaignConfig& config) {
  config.validate();
  CampaignHistory h;
  h.config = config;
  h.config.strategy = Strategy::Static;
  const ModelSpec truth_model = make_model(config.problem, config.truth_model);
  Rng oracle = make_stream(config.seed, "oracle");
  for (double x : config.grid.points())
    h.dataset.append({x, simulate_measurement(truth_model, config.truth, x, config.T_static, oracle), config.T_static});
  h.dataset_sizes.push_back(h.dataset.size());
  h.T_sum = h.dataset.total_exposure();
  try {
    h.final_evaluation = evaluate_final(config, h.dataset, &h.remc_runs);
  } catch (const std::exception& e) {
    h.aborted = true;
    h.abort_reason = std::string("final evaluation: ") + e.what();
  }
  return h;
}

CampaignHistory run_campaign(const CampaignConfig& config) {
  return config.strategy == Strategy::Static ? run_static(config) : run_sequential(config);
}

void write_history(const std::filesystem::path& dir, const CampaignHistory& h) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "config.json", to_json(h.config).dump(2) + "\n");

  std::ostringstream ds;
  write_dataset_csv(ds, h.dataset);
  write_file_atomic(dir / "dataset.csv", ds.str());

  std::string rounds;
  for (const auto& r : h.rounds) rounds += to_json(r).dump() + "\n";
  write_file_atomic(dir / "rounds.jsonl", rounds);

  if (h.config.dump_acquisition && !h.rounds.empty()) {
    const auto acq = dir / "acquisition";
    std::filesystem::create_directories(acq);
    for (const auto& r : h.rounds) {
      std::ostringstream os;
      write_scores_csv(os, r.scores);
      char name[32];
      std::snprintf(name, sizeof name, "round_%04zu.csv", r.round);
      write_file_atomic(acq / name, os.str());
    }
  }

  json metrics = {{"aborted", h.aborted},
                  {"T_sum", h.T_sum},
                  {"planned_T_sum", h.config.planned_T_sum()},
                  {"dataset_sizes", h.dataset_sizes},
                  {"remc_runs", h.remc_runs}};
  if (h.aborted) metrics["abort_reason"] = h.abort_reason;
  if (h.final_evaluation) {
    const auto& f = *h.final_evaluation;
    metrics["trial"] = to_json(h.trial());
    metrics["final_evaluation"] = {
        {"models", f.models}, {"log_evidence", f.log_evidence}, {"probability", f.probability}, {"map", f.map}};
  }
  write_file_atomic(dir / "metrics.json", metrics.dump(2) + "\n");
}

}  // namespace specloop
