#include "specloop/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "specloop/campaign.hpp"
#include "specloop/evalmetrics.hpp"
#include "specloop/io.hpp"
#include "specloop/parallel.hpp"

namespace specloop {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t trials = 1;
  std::optional<double> t_static;
  std::optional<std::size_t> rounds;
  bool dump_acquisition = false;
  bool force = false;
};

struct AnalyzeOptions {
  std::vector<std::string> runs;
  std::string out;
  std::optional<std::size_t> trials;
  bool force = false;
};

void prepare_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw UsageError("--out " + dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir) && !force)
      throw UsageError("--out " + dir.string() + " is not empty (use --force to overwrite)");
  }
  fs::create_directories(dir);
}

CampaignConfig load_config(const RunOptions& o) {
  if (!o.config_path.empty() && !o.preset_name.empty()) throw UsageError("--config and --preset are exclusive");
  if (o.config_path.empty() && o.preset_name.empty()) throw UsageError("one of --config or --preset is required");
  CampaignConfig c;
  if (!o.preset_name.empty()) {
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), o.preset_name) == names.end())
      throw UsageError("unknown preset '" + o.preset_name + "'");
    c = preset(o.preset_name);
  } else {
    json j;
    try {
      j = json::parse(read_file(o.config_path));
    } catch (const json::exception& e) {
      throw DataError("cannot parse " + o.config_path + ": " + e.what());
    }
    c = config_from_json(j);
  }
  if (o.seed) c.seed = *o.seed;
  if (o.t_static) c.T_static = *o.t_static;
  if (o.rounds) c.k = *o.rounds;
  if (o.dump_acquisition) c.dump_acquisition = true;
  return c;
}

void add_run_options(CLI::App* sub, RunOptions& o, bool with_t_static) {
  sub->add_option("--config", o.config_path, "Campaign configuration (JSON)");
  sub->add_option("--preset", o.preset_name, "Built-in configuration (see `presets`)");
  sub->add_option("--seed", o.seed, "64-bit master seed (overrides the configuration)");
  sub->add_option("--out", o.out, "Output directory")->required();
  sub->add_option("--trials", o.trials, "Independent trials with seeds seed, seed+1, ...")
      ->check(CLI::PositiveNumber);
  if (with_t_static) sub->add_option("--t-static", o.t_static, "Exposure per grid point")->check(CLI::PositiveNumber);
  if (!with_t_static) sub->add_option("--rounds", o.rounds, "Number of sequential rounds k");
  if (!with_t_static) sub->add_flag("--dump-acquisition", o.dump_acquisition, "Write per-round score CSVs");
  sub->add_flag("--force", o.force, "Allow a non-empty output directory");
}

int do_run(const std::string& command, Strategy strategy, const RunOptions& o, std::ostream& out,
           std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  CampaignConfig base = load_config(o);
  base.strategy = strategy;
  base.validate();
  const fs::path dir(o.out);
  prepare_out_dir(dir, o.force);

  std::vector<CampaignHistory> histories(o.trials);
  std::vector<fs::path> dirs(o.trials);
  parallel_for(o.trials, [&](std::size_t t) {
    CampaignConfig c = base;
    c.seed = base.seed + t;
    dirs[t] = o.trials == 1 ? dir : dir / ("trial_" + std::to_string(t + 1));
    histories[t] = run_campaign(c);
    write_history(dirs[t], histories[t]);
  });

  bool aborted = false;
  json trials = json::array();
  for (std::size_t t = 0; t < o.trials; ++t) {
    const auto& h = histories[t];
    if (h.aborted) {
      aborted = true;
      err << "specloop: " << dirs[t].string() << ": campaign aborted: " << h.abort_reason << "\n";
    }
    trials.push_back({{"dir", dirs[t].string()}, {"seed", h.config.seed}, {"T_sum", h.T_sum}, {"aborted", h.aborted}});
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json manifest = {{"command", command},
                   {"config", o.config_path},
                   {"preset", o.preset_name},
                   {"out", o.out},
                   {"seed", base.seed},
                   {"trials", trials},
                   {"T_sum", histories.front().T_sum},
                   {"version", std::string(kVersion)},
                   {"duration_seconds", seconds}};
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  out << command << ": " << o.trials << " trial(s), T_sum = " << format_double(histories.front().T_sum) << ", output in "
      << dir.string() << "\n";
  return aborted ? kExitRuntime : kExitOk;
}

std::vector<fs::path> collect_runs(const std::vector<std::string>& roots) {
  std::vector<fs::path> runs;
  for (const auto& r : roots) {
    const fs::path p(r);
    if (fs::exists(p / "metrics.json")) {
      runs.push_back(p);
      continue;
    }
    if (!fs::is_directory(p)) throw DataError(r + " is not a run directory");
    std::vector<fs::path> found;
    for (const auto& e : fs::directory_iterator(p))
      if (e.is_directory() && fs::exists(e.path() / "metrics.json")) found.push_back(e.path());
    if (found.empty()) throw DataError(r + " contains no run directories");
    std::sort(found.begin(), found.end(), [](const fs::path& a, const fs::path& b) {
      const auto na = a.filename().string(), nb = b.filename().string();
      return na.size() != nb.size() ? na.size() < nb.size() : na < nb;
    });
    runs.insert(runs.end(), found.begin(), found.end());
  }
  return runs;
}

int do_analyze(const AnalyzeOptions& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const auto runs = collect_runs(o.runs);
  if (o.trials && *o.trials != runs.size())
    throw UsageError("--trials " + std::to_string(*o.trials) + " but " + std::to_string(runs.size()) +
                     " run directories were found");
  std::vector<TrialEvaluation> trials;
  for (const auto& r : runs) {
    json m;
    try {
      m = json::parse(read_file(r / "metrics.json"));
    } catch (const json::exception& e) {
      throw DataError("cannot parse " + (r / "metrics.json").string() + ": " + e.what());
    }
    if (!m.contains("trial")) throw DataError(r.string() + " has no final evaluation (aborted run?)");
    trials.push_back(trial_from_json(m.at("trial")));
  }
  const TrialSummary summary = summarize_trials(trials);
  const fs::path dir(o.out);
  prepare_out_dir(dir, o.force);
  json metrics = to_json(summary);
  json sources = json::array();
  for (const auto& r : runs) sources.push_back(r.string());
  metrics["runs"] = sources;
  write_file_atomic(dir / "metrics.json", metrics.dump(2) + "\n");
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json manifest = {{"command", "analyze"},
                   {"out", o.out},
                   {"runs", sources},
                   {"version", std::string(kVersion)},
                   {"duration_seconds", seconds}};
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");

  out << "analyze: " << summary.trials() << " trial(s) of " << summary.problem << "\n";
  for (std::size_t p = 0; p < summary.parameters.size(); ++p)
    out << "  W_" << summary.parameters[p] << " median " << format_double(summary.boxplots[p].median) << "\n";
  for (std::size_t m = 0; m < summary.models.size(); ++m)
    out << "  " << summary.models[m] << " most probable in " << summary.best_counts[m] << " trial(s)\n";
  return kExitOk;
}

void print_presets(std::ostream& out) {
  for (const auto& name : preset_names()) {
    const CampaignConfig c = preset(name);
    CampaignConfig s = c;
    s.strategy = Strategy::Static;
    out << name << ": " << to_string(c.problem) << ", N=" << c.grid.count << " from " << format_double(c.grid.start)
        << " step " << format_double(c.grid.step) << ", T_unit=" << format_double(c.T_unit) << ", n=" << c.n
        << ", k=" << c.k << ", T_sum=" << format_double(c.planned_T_sum()) << "; static T=" << format_double(c.T_static)
        << ", T_sum=" << format_double(s.planned_T_sum()) << "\n";
  }
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sequential experimental design for Bayesian spectral deconvolution and Hamiltonian selection",
               "specloop"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  RunOptions seq, stat, gp;
  AnalyzeOptions an;
  auto* run_seq = app.add_subcommand("run-sequential", "Run the adaptive (posterior KL) measurement campaign");
  add_run_options(run_seq, seq, false);
  auto* run_static_cmd = app.add_subcommand("run-static", "Measure every grid point with equal exposure");
  add_run_options(run_static_cmd, stat, true);
  auto* run_gp = app.add_subcommand("run-gp", "Run the Gaussian-process variance baseline");
  add_run_options(run_gp, gp, false);
  auto* analyze = app.add_subcommand("analyze", "Summarize W indices and model probabilities over runs");
  analyze->add_option("runs", an.runs, "Run directories, or parents of trial_* directories")->required();
  analyze->add_option("--out", an.out, "Output directory")->required();
  analyze->add_option("--trials", an.trials, "Expected number of runs");
  analyze->add_flag("--force", an.force, "Allow a non-empty output directory");
  auto* presets = app.add_subcommand("presets", "List built-in configurations");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "specloop: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (run_seq->parsed()) return do_run("run-sequential", Strategy::Parametric, seq, out, err);
    if (run_static_cmd->parsed()) return do_run("run-static", Strategy::Static, stat, out, err);
    if (run_gp->parsed()) return do_run("run-gp", Strategy::Gp, gp, out, err);
    if (analyze->parsed()) return do_analyze(an, out);
    if (presets->parsed()) {
      print_presets(out);
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "specloop: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ArgumentError& e) {
    err << "specloop: invalid configuration: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "specloop: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace specloop
