#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "flapfoil/csv.hpp"
#include "flapfoil/errors.hpp"
#include "flapfoil/harness.hpp"

using namespace flapfoil;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config() {
  auto c = parse_run_config("{}", "test");
  c.agent.policy.lstm = 4;
  c.agent.policy.trunk = 6;
  c.agent.value.lstm = 4;
  c.agent.value.trunk = 6;
  c.agent.rollout_episodes = 2;
  c.agent.n_pi = 2;
  c.agent.aux_epochs = 1;
  c.env.horizon_s = 4.0;
  c.env.n_history = 4;
  c.suite.k_values = {2};
  c.suite.seeds = 1;
  c.suite.episodes = 6;
  c.suite.checkpoint_every = 2;
  c.suite.smooth_window = 2;
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("flapfoil_" + name);
  fs::remove_all(d);
  return d;
}

RunRecord record_of(const std::vector<double>& normalized, bool failed = false) {
  RunRecord r;
  r.failed = failed;
  for (std::size_t e = 0; e < normalized.size(); ++e) {
    EpisodeLog log;
    log.episode = e;
    log.normalized = normalized[e];
    r.episodes.push_back(log);
  }
  return r;
}

// Replaces one cell of a CSV file in place.
void edit_cell(const fs::path& path, std::size_t row, const std::string& column,
               const std::string& value) {
  const auto table = read_csv(path.string());
  const auto col = table.column(column);
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  in.close();
  std::stringstream ss(lines.at(row + 1));
  std::vector<std::string> cells;
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  cells.at(col) = value;
  std::string joined;
  for (std::size_t i = 0; i < cells.size(); ++i) joined += (i ? "," : "") + cells[i];
  lines[row + 1] = joined;
  std::ofstream out(path);
  for (const auto& l : lines) out << l << "\n";
}

}  // namespace

TEST(PlanSuite, OneRunPerKAndSeed) {
  auto c = parse_run_config("{}", "test");
  c.suite.k_values = {1, 8};
  c.suite.seeds = 3;
  const auto plans = plan_suite(c);
  ASSERT_EQ(plans.size(), 6u);
  EXPECT_EQ(plans[0].run_id, "k1_seed0");
  EXPECT_EQ(plans[5].run_id, "k8_seed2");
  for (const auto& p : plans) EXPECT_EQ(p.init_seed, plans[0].init_seed);
  EXPECT_EQ(plans[0].explore_seed, plans[3].explore_seed);
  EXPECT_NE(plans[0].explore_seed, plans[1].explore_seed);
  c.master_seed = 2;
  EXPECT_NE(plan_suite(c)[0].explore_seed, plans[0].explore_seed);
}

TEST(LearningCurves, IdenticalRunsHaveZeroSpread) {
  const auto r = record_of({0.1, 0.4, 0.3});
  const auto curve = learning_curves({r, r, r}, {8, 8, 8}, 2);
  ASSERT_EQ(curve.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_EQ(curve[e].runs, 3);
    EXPECT_NEAR(curve[e].mean, r.episodes[e].normalized, 1e-15);
    EXPECT_NEAR(curve[e].std, 0.0, 1e-15);
  }
  EXPECT_NEAR(curve[2].smooth_mean, 0.35, 1e-15);
  EXPECT_NEAR(curve[0].smooth_mean, 0.1, 1e-15);
}

TEST(LearningCurves, ConstantPerformanceIsFlat) {
  const auto curve = learning_curves({record_of(std::vector<double>(20, 0.5))}, {1}, 10);
  for (const auto& p : curve) {
    EXPECT_NEAR(p.smooth_mean, 0.5, 1e-15);
    EXPECT_EQ(p.smooth_std, 0.0);
  }
}

TEST(LearningCurves, SpreadAndFailedRuns) {
  const auto curve = learning_curves(
      {record_of({0.0}), record_of({1.0}), record_of({50.0}, true), record_of({7.0})},
      {1, 1, 1, 2}, 1);
  ASSERT_EQ(curve.size(), 2u);
  EXPECT_EQ(curve[0].k, 1);
  EXPECT_EQ(curve[0].runs, 2);
  EXPECT_DOUBLE_EQ(curve[0].mean, 0.5);
  EXPECT_DOUBLE_EQ(curve[0].std, 0.5);
  EXPECT_EQ(curve[1].k, 2);
  EXPECT_DOUBLE_EQ(curve[1].mean, 7.0);
}

TEST(Suite, ZeroEpisodesProducesEmptyRecords) {
  auto c = tiny_config();
  c.suite.episodes = 0;
  c.suite.k_values = {1, 2};
  const auto res = run_training_suite(c, "");
  ASSERT_EQ(res.records.size(), 2u);
  EXPECT_EQ(res.succeeded(), 2u);
  for (const auto& r : res.records) EXPECT_TRUE(r.episodes.empty());
  EXPECT_TRUE(res.curves.empty());
}

TEST(Suite, FailedRunIsRecordedAndOthersContinue) {
  const auto dir = fresh_dir("suite_fail");
  fs::create_directories(dir);
  std::ofstream(dir / "runs") << "not a directory";
  auto c = tiny_config();
  c.suite.episodes = 2;
  std::vector<std::string> lines;
  const auto res = run_training_suite(c, dir.string(),
                                      [&](const std::string& m) { lines.push_back(m); });
  ASSERT_EQ(res.records.size(), 1u);
  EXPECT_TRUE(res.records[0].failed);
  EXPECT_FALSE(res.records[0].error.empty());
  EXPECT_EQ(res.succeeded(), 0u);
  const auto summary = read_csv((dir / "suite_summary.csv").string());
  EXPECT_EQ(summary.rows.at(0)[summary.column("status")], "failed");
  bool logged = false;
  for (const auto& l : lines) logged |= l.find("FAILED") != std::string::npos;
  EXPECT_TRUE(logged);
  fs::remove_all(dir);
}

TEST(Suite, RecordOnDiskMatchesMemoryAndReplays) {
  const auto dir = fresh_dir("suite_record");
  const auto c = tiny_config();
  const auto res = run_training_suite(c, dir.string());
  ASSERT_EQ(res.succeeded(), 1u);
  const auto& mem = res.records[0];
  ASSERT_EQ(mem.episodes.size(), 6u);

  const auto run_dirs = find_run_dirs(dir.string());
  ASSERT_EQ(run_dirs.size(), 1u);
  EXPECT_EQ(find_run_dirs(run_dirs[0]), run_dirs);
  const auto disk = load_run_record(run_dirs[0]);
  EXPECT_EQ(disk.run_id, "k2_seed0");
  EXPECT_EQ(disk.checkpoints,
            (std::vector<std::string>{"checkpoints/ep0000", "checkpoints/ep0002",
                                      "checkpoints/ep0004"}));
  ASSERT_EQ(disk.episodes.size(), mem.episodes.size());
  for (std::size_t e = 0; e < mem.episodes.size(); ++e) {
    EXPECT_EQ(disk.episodes[e].long_term_eta, mem.episodes[e].long_term_eta);
    EXPECT_EQ(disk.episodes[e].return_sum, mem.episodes[e].return_sum);
    ASSERT_EQ(disk.episodes[e].beats.size(), mem.episodes[e].beats.size());
    for (std::size_t i = 0; i < mem.episodes[e].beats.size(); ++i) {
      EXPECT_EQ(disk.episodes[e].beats[i].raw, mem.episodes[e].beats[i].raw);
      EXPECT_EQ(disk.episodes[e].beats[i].p_j, mem.episodes[e].beats[i].p_j);
    }
  }

  for (std::size_t e : {std::size_t{0}, std::size_t{3}, std::size_t{5}}) {
    const auto r = replay_episode(run_dirs[0], e);
    EXPECT_TRUE(r.match) << "episode " << e << ": " << r.detail;
  }
  EXPECT_THROW(replay_episode(run_dirs[0], 6), RecordError);

  std::size_t first_row = 0;
  for (std::size_t e = 0; e < 3; ++e) first_row += mem.episodes[e].beats.size();
  edit_cell(fs::path(run_dirs[0]) / "beats.csv", first_row + 1, "reward", "0.123");
  const auto bad = replay_episode(run_dirs[0], 3);
  EXPECT_FALSE(bad.match);
  EXPECT_NE(bad.detail.find("beat 1"), std::string::npos) << bad.detail;
  EXPECT_TRUE(replay_episode(run_dirs[0], 2).match);
  fs::remove_all(dir);
}

TEST(Records, MissingOrCorruptFilesRaise) {
  const auto dir = fresh_dir("records_bad");
  EXPECT_THROW(find_run_dirs(dir.string()), RecordError);
  fs::create_directories(dir);
  EXPECT_THROW(find_run_dirs(dir.string()), RecordError);
  std::ofstream(dir / "run.json") << "{\"run_id\": 3}";
  EXPECT_THROW(load_run_record(dir.string()), RecordError);
  fs::remove_all(dir);
}

TEST(Sweep, DefaultGridIsInsideTheActionBox) {
  const auto c = parse_run_config("{}", "test");
  EXPECT_EQ(c.sweep.amps_deg.size() * c.sweep.st_values.size(), 182u);
  EXPECT_EQ(c.sweep.amps_deg.front(), 7.0);
  EXPECT_EQ(c.sweep.amps_deg.back(), 20.0);
  EXPECT_NEAR(c.sweep.st_values.back(), 0.8, 1e-12);
  EXPECT_NO_THROW(check_sweep_grid(c));
}

TEST(Sweep, OutOfBoxPointsAreNamed) {
  auto c = parse_run_config("{}", "test");
  c.sweep.amps_deg = {10.0, 25.0};
  try {
    check_sweep_grid(c);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("25"), std::string::npos);
  }
  c.sweep.amps_deg = {10.0};
  c.sweep.st_values = {0.5, 0.9};
  EXPECT_THROW(check_sweep_grid(c), ConfigError);
  EXPECT_THROW(run_sinusoidal_sweep(c), ConfigError);
}

TEST(Sweep, PointEfficiencyEqualsConstantEpisode) {
  auto c = parse_run_config("{}", "test");
  c.sweep.amps_deg = {12.0, 17.0};
  c.sweep.st_values = {0.4};
  c.sweep.repeats = 1;
  c.sweep.duration_s = 6.0;
  c.master_seed = 77;
  const auto pts = run_sinusoidal_sweep(c);
  ASSERT_EQ(pts.size(), 2u);
  const auto model = c.model();
  for (std::size_t p = 0; p < pts.size(); ++p) {
    EpisodeConfig env = c.env;
    env.horizon_s = c.sweep.duration_s;
    RewardConfig reward = c.reward;
    reward.k = 1;
    const auto log = rollout_constant(model, env, reward, sweep_seed(77, p, 0),
                                      action_to_raw(pts[p].amp_deg, 0.4, model));
    EXPECT_NEAR(pts[p].eta_mean, log.long_term_eta, 1e-12);
    EXPECT_NEAR(pts[p].ct_mean, episode_ct(log, model), 1e-12);
    EXPECT_NEAR(pts[p].st, 0.4, 1e-15);
    EXPECT_FALSE(pts[p].flagged);
  }
}

TEST(Sweep, RepeatsAreReproducible) {
  auto c = parse_run_config("{}", "test");
  c.sweep.amps_deg = {15.0};
  c.sweep.st_values = {0.3, 0.5};
  c.sweep.repeats = 2;
  c.sweep.duration_s = 4.0;
  const auto a = run_sinusoidal_sweep(c);
  const auto b = run_sinusoidal_sweep(c);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].eta_mean, b[i].eta_mean);
    EXPECT_EQ(a[i].ct_std, b[i].ct_std);
  }
}

TEST(Mismatch, RunIsSeededAndShaped) {
  auto c = parse_run_config("{}", "test");
  c.mismatch.episodes = 3;
  c.mismatch.duration_s = 5.0;
  c.mismatch.k_list = {1, 4};
  const auto a = run_mismatch(c, 5);
  const auto b = run_mismatch(c, 5);
  ASSERT_EQ(a.blocks.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    ASSERT_EQ(a.blocks[i].rows.size(), 3u);
    EXPECT_EQ(a.blocks[i].r_squared, b.blocks[i].r_squared);
    EXPECT_GE(a.blocks[i].r_squared, 0.0);
    EXPECT_LE(a.blocks[i].r_squared, 1.0);
  }
  EXPECT_NE(run_mismatch(c, 6).blocks[0].rows[0].long_term_eta,
            a.blocks[0].rows[0].long_term_eta);
}
