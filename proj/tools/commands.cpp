#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "flapfoil/config.hpp"
#include "flapfoil/errors.hpp"
#include "flapfoil/harness.hpp"
#include "flapfoil/stats.hpp"

namespace fs = std::filesystem;

namespace flapfoil::cli {

namespace {

struct CommonOpts {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("-c,--config", o.config, "JSON run configuration (defaults if omitted)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", o.sets, "Override a config field, e.g. --set reward.k=8")
      ->allow_extra_args(false);
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("-o,--out", o.out, "Output directory");
  cmd->add_option("--workers", o.workers, "Concurrent workers (1 keeps outputs reproducible)")
      ->check(CLI::PositiveNumber);
}

std::string join(const std::vector<int>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s + "]";
}

std::string num(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string join(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
  return s + "]";
}

// Precedence, lowest first: defaults, config file, FLAPFOIL_SEED /
// FLAPFOIL_OUT, --set, dedicated flags.
RunConfig resolve(const CommonOpts& o, std::vector<std::string> flag_overrides) {
  std::vector<std::string> overrides;
  if (const char* seed = std::getenv("FLAPFOIL_SEED")) {
    const std::string s = seed;
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError("FLAPFOIL_SEED must be a non-negative integer, got '" + s + "'");
    overrides.push_back("master_seed=" + s);
  }
  if (const char* out = std::getenv("FLAPFOIL_OUT"))
    overrides.push_back(std::string("output_dir=\"") + out + "\"");
  overrides.insert(overrides.end(), o.sets.begin(), o.sets.end());
  if (o.seed) overrides.push_back("master_seed=" + std::to_string(*o.seed));
  if (o.out) overrides.push_back("output_dir=\"" + *o.out + "\"");
  if (o.workers) overrides.push_back("suite.workers=" + std::to_string(*o.workers));
  overrides.insert(overrides.end(), flag_overrides.begin(), flag_overrides.end());
  if (o.config.empty()) return parse_run_config("{}", "<defaults>", overrides);
  return load_run_config(o.config, overrides);
}

int cmd_train(const CommonOpts& o, std::optional<int> seeds, std::optional<int> episodes,
              const std::vector<int>& ks, std::ostream& out, std::ostream& err) {
  std::vector<std::string> flags;
  if (seeds) flags.push_back("suite.seeds=" + std::to_string(*seeds));
  if (episodes) flags.push_back("suite.episodes=" + std::to_string(*episodes));
  if (!ks.empty()) flags.push_back("suite.k_values=" + join(ks));
  const RunConfig cfg = resolve(o, flags);
  fs::create_directories(cfg.output_dir);
  const auto res = run_training_suite(cfg, cfg.output_dir,
                                      [&](const std::string& m) { err << m << '\n'; });
  out << "runs: " << res.records.size() << " ok: " << res.succeeded()
      << " output: " << cfg.output_dir << '\n';
  return res.succeeded() > 0 || res.records.empty() ? kOk : kRuntimeFailure;
}

int cmd_sweep(const CommonOpts& o, const std::vector<double>& amps,
              const std::vector<double>& sts, std::optional<int> repeats,
              std::optional<double> duration, std::ostream& out) {
  std::vector<std::string> flags;
  if (!amps.empty()) flags.push_back("sweep.amps_deg=" + join(amps));
  if (!sts.empty()) flags.push_back("sweep.st_values=" + join(sts));
  if (repeats) flags.push_back("sweep.repeats=" + std::to_string(*repeats));
  if (duration) flags.push_back("sweep.duration_s=" + num(*duration));
  const RunConfig cfg = resolve(o, flags);
  check_sweep_grid(cfg);
  const auto points = run_sinusoidal_sweep(cfg, cfg.suite.workers);
  fs::create_directories(cfg.output_dir);
  const auto path = (fs::path(cfg.output_dir) / "sweep.csv").string();
  write_sweep_csv(points, path);
  std::size_t flagged = 0;
  const SweepPoint* best = nullptr;
  for (const auto& p : points) {
    flagged += p.flagged ? 1 : 0;
    if (!std::isnan(p.eta_mean) && (!best || p.eta_mean > best->eta_mean)) best = &p;
  }
  out << "points: " << points.size() << " flagged: " << flagged << '\n';
  if (best)
    out << "peak eta " << best->eta_mean << " at amp " << best->amp_deg << " deg, St "
        << best->st << '\n';
  out << "wrote " << path << '\n';
  return kOk;
}

int cmd_mismatch(const CommonOpts& o, std::optional<int> episodes, const std::vector<int>& ks,
                 std::optional<double> duration, std::ostream& out) {
  std::vector<std::string> flags;
  if (episodes) flags.push_back("mismatch.episodes=" + std::to_string(*episodes));
  if (!ks.empty()) flags.push_back("mismatch.k_list=" + join(ks));
  if (duration) flags.push_back("mismatch.duration_s=" + num(*duration));
  const RunConfig cfg = resolve(o, flags);
  const auto table = run_mismatch(cfg, cfg.master_seed);
  fs::create_directories(cfg.output_dir);
  const auto path = (fs::path(cfg.output_dir) / "mismatch.csv").string();
  write_mismatch_csv(table, path);
  for (const auto& b : table.blocks)
    out << "k=" << b.k << " R^2=" << b.r_squared << (b.degenerate ? " (degenerate)" : "")
        << '\n';
  out << "wrote " << path << '\n';
  return kOk;
}

int cmd_stats(const std::string& dir, int chunk, std::ostream& out) {
  const auto run_dirs = find_run_dirs(dir);
  std::vector<RunRecord> records;
  std::optional<RunConfig> cfg;
  for (const auto& rd : run_dirs) {
    auto rec = load_run_record(rd);
    if (!cfg) cfg = load_run_config((fs::path(rd) / "config.json").string());
    const auto chunks = learning_path_stats(rec, static_cast<std::size_t>(chunk));
    write_path_csv(chunks, (fs::path(rd) / "learning_path.csv").string());
    out << rec.run_id << '\n';
    out << "  chunk  episodes   amp_median amp_iqr   freq_median freq_iqr\n";
    for (const auto& c : chunks) {
      char line[160];
      std::snprintf(line, sizeof(line), "  %5zu  %4zu-%-4zu  %10.3f %7.3f   %11.4f %8.4f\n",
                    c.chunk, c.first_episode, c.last_episode, c.amp_deg.median,
                    c.amp_deg.iqr(), c.freq_hz.median, c.freq_hz.iqr());
      out << line;
    }
    records.push_back(std::move(rec));
  }
  const auto gaits = final_gait_summary(records, cfg->model());
  const auto gait_path = (fs::path(dir) / "final_gait.csv").string();
  write_gait_csv(gaits, gait_path);
  out << "final gait (median over last episode)\n";
  for (const auto& g : gaits) {
    char line[160];
    std::snprintf(line, sizeof(line), "  %-16s ep %4zu  amp %6.2f deg  f %6.3f Hz  St %.3f\n",
                  g.run_id.c_str(), g.episode, g.median_amp_deg, g.median_freq_hz, g.st);
    out << line;
  }
  out << "wrote " << gait_path << '\n';
  return kOk;
}

int cmd_replay(const std::string& run_dir, std::size_t episode, std::ostream& out,
               std::ostream& err) {
  const auto res = replay_episode(run_dir, episode,
                                  [&](const std::string& m) { err << m << '\n'; });
  out << (res.match ? "MATCH" : "MISMATCH") << ": " << res.detail << '\n';
  return res.match ? kOk : kRuntimeFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flapping-foil reinforcement learning workbench", "flapfoil"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  CommonOpts train_o, sweep_o, mism_o;
  std::optional<int> train_seeds, train_episodes, sweep_repeats, mism_episodes;
  std::vector<int> train_k, mism_k;
  std::vector<double> sweep_amps, sweep_st;
  std::optional<double> sweep_duration, mism_duration;
  std::string stats_dir, replay_dir;
  int stats_chunk = 50;
  std::size_t replay_ep = 0;

  auto* train = app.add_subcommand("train", "Run the k-sweep training suite");
  add_common(train, train_o);
  train->add_option("--seeds", train_seeds, "Seeds per k")->check(CLI::PositiveNumber);
  train->add_option("--episodes", train_episodes, "Episodes per run")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--k", train_k, "Comma separated reward windows")->delimiter(',');

  auto* sweep = app.add_subcommand("sweep", "Sinusoidal-gait C_T / efficiency sweep");
  add_common(sweep, sweep_o);
  sweep->add_option("--amps", sweep_amps, "Amplitudes in degrees")->delimiter(',');
  sweep->add_option("--st", sweep_st, "Strouhal numbers")->delimiter(',');
  sweep->add_option("--repeats", sweep_repeats, "Repeats per point")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--duration", sweep_duration, "Seconds per repeat");

  auto* mism = app.add_subcommand("mismatch", "Cumulative reward vs long-term efficiency");
  add_common(mism, mism_o);
  mism->add_option("--episodes", mism_episodes, "Random episodes (>= 2)");
  mism->add_option("--k", mism_k, "Comma separated reward windows")->delimiter(',');
  mism->add_option("--duration", mism_duration, "Seconds per episode");

  auto* stats = app.add_subcommand("stats", "Learning-path boxes and final gait of runs");
  stats->add_option("run_dir", stats_dir, "Run directory or suite output directory")
      ->required();
  stats->add_option("--chunk", stats_chunk, "Episodes per box")->check(CLI::PositiveNumber);

  auto* replay = app.add_subcommand("replay", "Re-execute a logged episode from its checkpoint");
  replay->add_option("run_dir", replay_dir, "Run directory (runs/<run_id>)")->required();
  replay->add_option("-e,--episode", replay_ep, "Episode index")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*train)
      return cmd_train(train_o, train_seeds, train_episodes, train_k, out, err);
    if (*sweep)
      return cmd_sweep(sweep_o, sweep_amps, sweep_st, sweep_repeats, sweep_duration, out);
    if (*mism) return cmd_mismatch(mism_o, mism_episodes, mism_k, mism_duration, out);
    if (*stats) return cmd_stats(stats_dir, stats_chunk, out);
    if (*replay) return cmd_replay(replay_dir, replay_ep, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsageError;
}

}  // namespace flapfoil::cli
