#include "flapfoil/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "flapfoil/checkpoint.hpp"
#include "flapfoil/csv.hpp"
#include "flapfoil/errors.hpp"
#include "flapfoil/ppg.hpp"
#include "flapfoil/seeding.hpp"

namespace fs = std::filesystem;

namespace flapfoil {

namespace {

// Runs job(i) for i in [0, n) on up to `workers` threads. Exceptions escape
// only from the calling thread's share of the work after all threads join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& job) {
  const auto w = static_cast<std::size_t>(std::max(1, workers));
  if (w == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(w, n); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw RecordError("cannot write " + path.string());
  out << text;
  if (!out) throw RecordError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw RecordError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string checkpoint_name(std::size_t episode) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ep%04zu", episode);
  return buf;
}

const std::vector<std::string>& episode_header() {
  static const std::vector<std::string> h = {"episode",    "long_term_eta", "normalized",
                                             "return_sum", "steps",         "duration_s",
                                             "degenerate"};
  return h;
}

void write_episode_row(CsvWriter& csv, const EpisodeLog& log) {
  double duration = 0.0;
  for (const auto& b : log.beats) duration += b.duration_s;
  csv.cell(log.episode).cell(log.long_term_eta).cell(log.normalized)
      .cell(log.return_sum).cell(log.beats.size()).cell(duration).cell(log.degenerate);
  csv.end_row();
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

// ---- training suite -------------------------------------------------------

std::vector<RunPlan> plan_suite(const RunConfig& cfg) {
  std::vector<RunPlan> plans;
  const std::uint64_t init = derive_seed(cfg.master_seed, kStreamInit);
  for (int k : cfg.suite.k_values) {
    for (int i = 0; i < cfg.suite.seeds; ++i) {
      RunPlan p;
      p.run_id = "k" + std::to_string(k) + "_seed" + std::to_string(i);
      p.k = k;
      p.seed_index = i;
      p.init_seed = init;
      p.explore_seed = derive_seed(cfg.master_seed, kStreamAction,
                                   static_cast<std::uint64_t>(i));
      plans.push_back(p);
    }
  }
  return plans;
}

std::vector<CurvePoint> learning_curves(const std::vector<RunRecord>& records,
                                        const std::vector<int>& k_of_record,
                                        int window) {
  std::vector<int> ks = k_of_record;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  std::vector<CurvePoint> out;
  for (int k : ks) {
    std::vector<const RunRecord*> runs;
    for (std::size_t i = 0; i < records.size(); ++i)
      if (k_of_record[i] == k && !records[i].failed) runs.push_back(&records[i]);
    std::size_t len = 0;
    for (const auto* r : runs) len = std::max(len, r->episodes.size());
    std::vector<CurvePoint> curve;
    for (std::size_t e = 0; e < len; ++e) {
      std::vector<double> v;
      for (const auto* r : runs)
        if (e < r->episodes.size()) v.push_back(r->episodes[e].normalized);
      CurvePoint p;
      p.k = k;
      p.episode = e;
      p.runs = static_cast<int>(v.size());
      p.mean = mean_of(v);
      double ss = 0.0;
      for (double x : v) ss += (x - p.mean) * (x - p.mean);
      p.std = std::sqrt(ss / static_cast<double>(v.size()));
      curve.push_back(p);
    }
    const auto w = static_cast<std::size_t>(std::max(1, window));
    for (std::size_t e = 0; e < curve.size(); ++e) {
      const std::size_t lo = e + 1 >= w ? e + 1 - w : 0;
      double sm = 0.0, ss = 0.0;
      for (std::size_t j = lo; j <= e; ++j) {
        sm += curve[j].mean;
        ss += curve[j].std;
      }
      const auto n = static_cast<double>(e - lo + 1);
      curve[e].smooth_mean = sm / n;
      curve[e].smooth_std = ss / n;
    }
    out.insert(out.end(), curve.begin(), curve.end());
  }
  return out;
}

std::size_t SuiteResult::succeeded() const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [](const RunRecord& r) { return !r.failed; }));
}

RunRecord run_training(const RunConfig& cfg, const RunPlan& plan,
                       const std::string& run_dir, const LogFn& log) {
  RunConfig rc = cfg;
  rc.reward.k = plan.k;
  RunRecord rec;
  rec.run_id = plan.run_id;
  rec.seed = plan.explore_seed;
  rec.config_json = to_json_text(rc);

  std::unique_ptr<CsvWriter> episodes_csv, beats_csv;
  fs::path dir;
  if (!run_dir.empty()) {
    dir = run_dir;
    fs::create_directories(dir / "checkpoints");
    write_text(dir / "config.json", rec.config_json);
    write_run_info({plan, static_cast<std::size_t>(rc.suite.episodes)},
                   (dir / "run.json").string());
    episodes_csv = std::make_unique<CsvWriter>((dir / "episodes.csv").string(),
                                               episode_header());
    beats_csv = std::make_unique<CsvWriter>((dir / "beats.csv").string(),
                                            beat_csv_header());
  }

  PpgTrainer trainer(rc.model(), rc.env, rc.reward, rc.agent, plan.init_seed,
                     plan.explore_seed);
  TrainerHooks hooks;
  hooks.checkpoint_every = static_cast<std::size_t>(rc.suite.checkpoint_every);
  hooks.on_episode = [&](const EpisodeLog& ep) {
    if (beats_csv) {
      for (const auto& b : ep.beats) write_beat_row(*beats_csv, b);
      write_episode_row(*episodes_csv, ep);
    }
    rec.episodes.push_back(ep);
    rec.episodes.back().ledger.entries.shrink_to_fit();
  };
  if (!run_dir.empty()) {
    hooks.on_checkpoint = [&](std::size_t first, const Checkpoint& c) {
      const auto name = checkpoint_name(first);
      save_checkpoint(c, (dir / "checkpoints" / name).string());
      rec.checkpoints.push_back("checkpoints/" + name);
    };
  }
  hooks.on_fault = [&](const std::string& msg) {
    if (log) log(plan.run_id + ": " + msg);
  };
  trainer.run(static_cast<std::size_t>(rc.suite.episodes), hooks);
  return rec;
}

SuiteResult run_training_suite(const RunConfig& cfg, const std::string& out_dir,
                               const LogFn& log) {
  SuiteResult res;
  res.plans = plan_suite(cfg);
  res.records.resize(res.plans.size());
  std::mutex log_mu;
  LogFn safe_log = [&](const std::string& msg) {
    if (!log) return;
    std::lock_guard<std::mutex> lock(log_mu);
    log(msg);
  };
  parallel_for(res.plans.size(), cfg.suite.workers, [&](std::size_t i) {
    const auto& plan = res.plans[i];
    const std::string run_dir =
        out_dir.empty() ? std::string() : (fs::path(out_dir) / "runs" / plan.run_id).string();
    try {
      safe_log(plan.run_id + ": start");
      res.records[i] = run_training(cfg, plan, run_dir, safe_log);
      safe_log(plan.run_id + ": done");
    } catch (const std::exception& e) {
      RunRecord failed;
      failed.run_id = plan.run_id;
      failed.seed = plan.explore_seed;
      failed.failed = true;
      failed.error = e.what();
      res.records[i] = std::move(failed);
      safe_log(plan.run_id + ": FAILED: " + e.what());
    }
  });

  std::vector<int> ks;
  for (const auto& p : res.plans) ks.push_back(p.k);
  res.curves = learning_curves(res.records, ks, cfg.suite.smooth_window);

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    CsvWriter summary((fs::path(out_dir) / "suite_summary.csv").string(),
                      {"run_id", "k", "seed_index", "explore_seed", "status",
                       "episodes", "final50_eta", "final_median_amp_deg",
                       "final_median_freq_hz", "final_st", "error"});
    const auto gaits = final_gait_summary(res.records, cfg.model());
    for (std::size_t i = 0; i < res.plans.size(); ++i) {
      const auto& p = res.plans[i];
      const auto& r = res.records[i];
      summary.cell(p.run_id).cell(p.k).cell(p.seed_index)
          .cell(std::to_string(p.explore_seed))
          .cell(r.failed ? "failed" : "ok").cell(r.episodes.size());
      if (!r.episodes.empty()) {
        const std::size_t n = std::min<std::size_t>(50, r.episodes.size());
        double s = 0.0;
        for (std::size_t e = r.episodes.size() - n; e < r.episodes.size(); ++e)
          s += r.episodes[e].long_term_eta;
        summary.cell(s / static_cast<double>(n));
      } else {
        summary.empty();
      }
      const auto g = std::find_if(gaits.begin(), gaits.end(),
                                  [&](const GaitSummary& x) { return x.run_id == p.run_id; });
      if (g != gaits.end())
        summary.cell(g->median_amp_deg).cell(g->median_freq_hz).cell(g->st);
      else
        summary.empty().empty().empty();
      // Keep the error text on one CSV field.
      std::string err = r.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      summary.cell(err);
      summary.end_row();
    }
    CsvWriter curves((fs::path(out_dir) / "learning_curves.csv").string(),
                     {"k", "episode", "runs", "mean_norm", "std_norm",
                      "smooth_mean_norm", "smooth_std_norm"});
    for (const auto& c : res.curves) {
      curves.cell(c.k).cell(c.episode).cell(c.runs).cell(c.mean).cell(c.std)
          .cell(c.smooth_mean).cell(c.smooth_std);
      curves.end_row();
    }
  }
  return res;
}

// ---- sinusoidal sweep -----------------------------------------------------

void check_sweep_grid(const RunConfig& cfg) {
  const auto& b = cfg.model().bounds;
  for (double a : cfg.sweep.amps_deg) {
    if (!(deg2rad(a) >= b.amp_min - 1e-12 && deg2rad(a) <= b.amp_max + 1e-12)) {
      std::ostringstream os;
      os << "sweep amplitude " << a << " deg is outside [" << rad2deg(b.amp_min)
         << ", " << rad2deg(b.amp_max) << "]";
      throw ConfigError(os.str());
    }
  }
  for (double st : cfg.sweep.st_values) {
    if (!(st >= b.st_min - b.st_tol && st <= b.st_max + b.st_tol)) {
      std::ostringstream os;
      os << "sweep Strouhal number " << st << " is outside [" << b.st_min << ", "
         << b.st_max << "]";
      throw ConfigError(os.str());
    }
  }
}

double episode_ct(const EpisodeLog& log, const FoilModel& model) {
  double impulse = 0.0, duration = 0.0;
  for (std::size_t t = 0; t < log.ledger.steps(); ++t) {
    const auto& e = log.ledger.step(t);
    impulse += e.mean_thrust * e.duration;
    duration += e.duration;
  }
  return compute_ct(impulse / duration, model.flow, model.geom);
}

std::uint64_t sweep_seed(std::uint64_t master, std::size_t point, int repeat) {
  return derive_seed(master, kStreamSweep,
                     (static_cast<std::uint64_t>(point) << 20) |
                         static_cast<std::uint64_t>(repeat));
}

std::vector<SweepPoint> run_sinusoidal_sweep(const RunConfig& cfg, int workers) {
  check_sweep_grid(cfg);
  const auto model = cfg.model();
  EpisodeConfig env = cfg.env;
  env.horizon_s = cfg.sweep.duration_s;
  env.record_loads = false;
  RewardConfig reward = cfg.reward;
  reward.k = 1;

  const std::size_t n_st = cfg.sweep.st_values.size();
  std::vector<SweepPoint> points(cfg.sweep.amps_deg.size() * n_st);
  parallel_for(points.size(), workers, [&](std::size_t p) {
    SweepPoint& pt = points[p];
    pt.amp_deg = cfg.sweep.amps_deg[p / n_st];
    pt.st = cfg.sweep.st_values[p % n_st];
    const RawAction raw = action_to_raw(pt.amp_deg, pt.st, model);
    pt.freq_hz = map_action(raw, model).freq_hz;
    std::vector<double> ct, eta;
    for (int r = 0; r < cfg.sweep.repeats; ++r) {
      const auto seed = sweep_seed(cfg.master_seed, p, r);
      EpisodeLog log;
      try {
        log = rollout_constant(model, env, reward, seed, raw);
      } catch (const DegeneratePower&) {
        pt.flagged = true;
        continue;
      }
      ct.push_back(episode_ct(log, model));
      eta.push_back(log.long_term_eta);
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    pt.ct_mean = ct.empty() ? nan : mean_of(ct);
    pt.eta_mean = eta.empty() ? nan : mean_of(eta);
    pt.ct_std = sample_std(ct);
    pt.eta_std = sample_std(eta);
  });
  return points;
}

void write_sweep_csv(const std::vector<SweepPoint>& points, const std::string& path) {
  CsvWriter csv(path, {"amp_deg", "st", "freq_hz", "ct_mean", "eta_mean", "ct_std",
                       "eta_std", "flagged"});
  for (const auto& p : points) {
    csv.cell(p.amp_deg).cell(p.st).cell(p.freq_hz).cell(p.ct_mean).cell(p.eta_mean)
        .cell(p.ct_std).cell(p.eta_std).cell(p.flagged ? 1 : 0);
    csv.end_row();
  }
}

// ---- reward mismatch ------------------------------------------------------

MismatchTable run_mismatch(const RunConfig& cfg, std::uint64_t seed) {
  const auto model = cfg.model();
  RewardConfig reward = cfg.reward;
  reward.k = 1;
  std::vector<EpisodeLedger> ledgers;
  for (int i = 0; i < cfg.mismatch.episodes; ++i) {
    const auto rec = rollout_random(model, cfg.env, reward,
                                    derive_seed(seed, kStreamMismatch,
                                                static_cast<std::uint64_t>(i)),
                                    cfg.mismatch.duration_s);
    ledgers.push_back(rec.episodes.front().ledger);
  }
  return mismatch_analysis(ledgers, cfg.mismatch.k_list);
}

// ---- records on disk ------------------------------------------------------

void write_run_info(const RunInfo& info, const std::string& path) {
  nlohmann::ordered_json j;
  j["run_id"] = info.plan.run_id;
  j["k"] = info.plan.k;
  j["seed_index"] = info.plan.seed_index;
  j["init_seed"] = info.plan.init_seed;
  j["explore_seed"] = info.plan.explore_seed;
  j["episodes"] = info.episodes;
  write_text(path, j.dump(2) + "\n");
}

RunInfo read_run_info(const std::string& path) {
  try {
    const auto j = nlohmann::json::parse(read_text(path));
    RunInfo info;
    info.plan.run_id = j.at("run_id").get<std::string>();
    info.plan.k = j.at("k").get<int>();
    info.plan.seed_index = j.at("seed_index").get<int>();
    info.plan.init_seed = j.at("init_seed").get<std::uint64_t>();
    info.plan.explore_seed = j.at("explore_seed").get<std::uint64_t>();
    info.episodes = j.at("episodes").get<std::size_t>();
    return info;
  } catch (const nlohmann::json::exception& e) {
    throw RecordError(path + ": " + e.what());
  }
}

RunRecord load_run_record(const std::string& run_dir) {
  const fs::path dir(run_dir);
  const auto info = read_run_info((dir / "run.json").string());
  RunRecord rec;
  rec.run_id = info.plan.run_id;
  rec.seed = info.plan.explore_seed;
  rec.config_json = read_text(dir / "config.json");

  const auto eps = read_csv((dir / "episodes.csv").string());
  const auto c_ep = eps.column("episode");
  const auto c_eta = eps.column("long_term_eta");
  const auto c_norm = eps.column("normalized");
  const auto c_ret = eps.column("return_sum");
  const auto c_deg = eps.column("degenerate");
  std::map<std::size_t, std::size_t> index;
  try {
    for (const auto& row : eps.rows) {
      EpisodeLog log;
      log.episode = parse_index(row[c_ep]);
      log.long_term_eta = parse_double(row[c_eta]);
      log.normalized = parse_double(row[c_norm]);
      log.return_sum = parse_double(row[c_ret]);
      log.degenerate = static_cast<int>(parse_index(row[c_deg]));
      if (!rec.episodes.empty() && log.episode <= rec.episodes.back().episode)
        throw RecordError("episodes.csv is not ordered by episode");
      index[log.episode] = rec.episodes.size();
      rec.episodes.push_back(std::move(log));
    }
  } catch (const std::logic_error& e) {
    throw RecordError(run_dir + "/episodes.csv: " + e.what());
  }
  std::vector<BeatRow> beats;
  try {
    beats = read_beats_csv((dir / "beats.csv").string());
  } catch (const std::logic_error& e) {
    throw RecordError(run_dir + "/beats.csv: " + e.what());
  }
  for (const auto& b : beats) {
    const auto it = index.find(b.episode);
    if (it == index.end())
      throw RecordError(run_dir + "/beats.csv: beat of unknown episode " +
                        std::to_string(b.episode));
    rec.episodes[it->second].beats.push_back(b);
  }
  for (const auto& entry : fs::directory_iterator(dir / "checkpoints"))
    rec.checkpoints.push_back("checkpoints/" + entry.path().filename().string());
  std::sort(rec.checkpoints.begin(), rec.checkpoints.end());
  return rec;
}

std::vector<std::string> find_run_dirs(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw RecordError("no such directory: " + dir);
  if (fs::exists(root / "run.json")) return {root.string()};
  std::vector<std::string> out;
  if (fs::is_directory(root / "runs")) {
    for (const auto& e : fs::directory_iterator(root / "runs"))
      if (fs::exists(e.path() / "run.json")) out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw RecordError("no run records under " + dir);
  return out;
}

ReplayResult replay_episode(const std::string& run_dir, std::size_t episode,
                            const LogFn& log) {
  const fs::path dir(run_dir);
  const auto info = read_run_info((dir / "run.json").string());
  RunConfig cfg = load_run_config((dir / "config.json").string());
  const auto logged = load_run_record(run_dir);

  const auto target = std::find_if(logged.episodes.begin(), logged.episodes.end(),
                                   [&](const EpisodeLog& e) { return e.episode == episode; });
  if (target == logged.episodes.end())
    throw RecordError("episode " + std::to_string(episode) + " is not in the record");

  std::size_t best = 0;
  std::string best_name;
  for (const auto& entry : fs::directory_iterator(dir / "checkpoints")) {
    const auto name = entry.path().filename().string();
    if (name.size() < 3 || name.compare(0, 2, "ep") != 0) continue;
    std::size_t start = 0;
    try {
      start = static_cast<std::size_t>(std::stoull(name.substr(2)));
    } catch (const std::logic_error&) {
      continue;
    }
    if (start <= episode && (best_name.empty() || start > best)) {
      best = start;
      best_name = name;
    }
  }
  if (best_name.empty())
    throw RecordError("no checkpoint precedes episode " + std::to_string(episode));
  if (log) log("replaying from checkpoints/" + best_name);

  PpgTrainer trainer(cfg.model(), cfg.env, cfg.reward, cfg.agent, info.plan.init_seed,
                     info.plan.explore_seed);
  trainer.restore(load_checkpoint((dir / "checkpoints" / best_name).string()));
  const auto total = static_cast<std::size_t>(cfg.suite.episodes);
  while (trainer.episodes_done() < total) {
    const std::size_t first = trainer.episodes_done();
    const std::size_t count = std::min<std::size_t>(
        static_cast<std::size_t>(cfg.agent.rollout_episodes), total - first);
    std::vector<EpisodeTrace> traces;
    const auto logs = trainer.collect(count, &traces);
    if (episode < first + count) {
      const auto& fresh = logs[episode - first];
      ReplayResult res;
      std::ostringstream why;
      if (fresh.beats.size() != target->beats.size()) {
        why << "beat count " << fresh.beats.size() << " vs logged " << target->beats.size();
      } else {
        for (std::size_t i = 0; i < fresh.beats.size() && why.str().empty(); ++i) {
          const auto& a = fresh.beats[i];
          const auto& b = target->beats[i];
          if (a.raw != b.raw || a.amp_deg != b.amp_deg || a.freq_hz != b.freq_hz ||
              a.st != b.st || a.duration_s != b.duration_s || a.w_j != b.w_j ||
              a.p_j != b.p_j || a.reward != b.reward)
            why << "beat " << i << " differs";
        }
        if (why.str().empty() && fresh.long_term_eta != target->long_term_eta)
          why << "long-term efficiency differs";
      }
      res.match = why.str().empty();
      res.detail = res.match ? "episode " + std::to_string(episode) + ": " +
                                   std::to_string(fresh.beats.size()) + " beats identical"
                             : why.str();
      return res;
    }
    trainer.update(traces);
  }
  throw RecordError("episode " + std::to_string(episode) + " lies past the configured run");
}

}  // namespace flapfoil
