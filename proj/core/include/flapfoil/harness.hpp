#ifndef FLAPFOIL_HARNESS_HPP_
#define FLAPFOIL_HARNESS_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "flapfoil/config.hpp"
#include "flapfoil/stats.hpp"

namespace flapfoil {

using LogFn = std::function<void(const std::string&)>;

// ---- training suite -------------------------------------------------------

struct RunPlan {
  std::string run_id;  // "k<k>_seed<i>"
  int k = 1;
  int seed_index = 0;
  std::uint64_t init_seed = 0;
  std::uint64_t explore_seed = 0;
};

// All (k, seed) runs of a suite. The initialisation seed is shared by every
// run; the exploration seed depends only on the seed index.
std::vector<RunPlan> plan_suite(const RunConfig& cfg);

struct CurvePoint {
  int k = 1;
  std::size_t episode = 0;
  int runs = 0;
  double mean = 0.0;
  double std = 0.0;
  double smooth_mean = 0.0;
  double smooth_std = 0.0;
};

// Across-run mean and population std of normalized performance per episode,
// then a trailing mean over `window` episodes. Failed runs are skipped.
std::vector<CurvePoint> learning_curves(const std::vector<RunRecord>& records,
                                        const std::vector<int>& k_of_record,
                                        int window);

struct SuiteResult {
  std::vector<RunPlan> plans;
  std::vector<RunRecord> records;  // parallel to plans
  std::vector<CurvePoint> curves;

  std::size_t succeeded() const;
};

// Runs every planned training run (up to suite.workers at a time). With a
// non-empty out_dir, writes runs/<run_id>/{config.json, run.json,
// episodes.csv, beats.csv, checkpoints/ep####}, suite_summary.csv and
// learning_curves.csv. A run that throws is recorded as failed.
SuiteResult run_training_suite(const RunConfig& cfg, const std::string& out_dir,
                               const LogFn& log = {});

// Single run; used by the suite and by tests.
RunRecord run_training(const RunConfig& cfg, const RunPlan& plan,
                       const std::string& run_dir, const LogFn& log = {});

// ---- sinusoidal sweep -----------------------------------------------------

struct SweepPoint {
  double amp_deg = 0.0;
  double st = 0.0;
  double freq_hz = 0.0;
  double ct_mean = 0.0;
  double eta_mean = 0.0;
  double ct_std = 0.0;
  double eta_std = 0.0;
  bool flagged = false;  // some repeat had non-positive expended work
};

// Throws ConfigError naming the first grid point outside the action box.
void check_sweep_grid(const RunConfig& cfg);

// C_T over an episode: time-averaged measured thrust over 1/2 rho U^2 s c.
double episode_ct(const EpisodeLog& log, const FoilModel& model);

// Seed of repeat `repeat` at grid point `point` (amplitude-major order).
std::uint64_t sweep_seed(std::uint64_t master, std::size_t point, int repeat);

std::vector<SweepPoint> run_sinusoidal_sweep(const RunConfig& cfg, int workers = 1);
void write_sweep_csv(const std::vector<SweepPoint>& points, const std::string& path);

// ---- reward mismatch ------------------------------------------------------

// `episodes` random-action episodes seeded from `seed`, analysed for every k.
MismatchTable run_mismatch(const RunConfig& cfg, std::uint64_t seed);

// ---- records on disk ------------------------------------------------------

struct RunInfo {
  RunPlan plan;
  std::size_t episodes = 0;
};

void write_run_info(const RunInfo& info, const std::string& path);
RunInfo read_run_info(const std::string& path);

// Rebuilds a RunRecord (beats and per-episode efficiencies) from a run
// directory. Throws RecordError on missing or inconsistent files.
RunRecord load_run_record(const std::string& run_dir);

// Run directories below `dir`: `dir` itself when it holds a run, otherwise
// every dir/runs/<id>.
std::vector<std::string> find_run_dirs(const std::string& dir);

struct ReplayResult {
  bool match = false;
  std::string detail;
};

// Restores the latest checkpoint at or before `episode`, resumes training
// until the episode has been collected, and compares it field by field with
// the logged beats and episode rows.
ReplayResult replay_episode(const std::string& run_dir, std::size_t episode,
                            const LogFn& log = {});

}  // namespace flapfoil

#endif  // FLAPFOIL_HARNESS_HPP_
