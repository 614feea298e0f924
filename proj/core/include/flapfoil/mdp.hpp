#ifndef FLAPFOIL_MDP_HPP_
#define FLAPFOIL_MDP_HPP_

#include <array>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "flapfoil/hydro.hpp"
#include "flapfoil/reward.hpp"

namespace flapfoil {

using RawAction = std::array<double, 2>;

// A tail-beat command. `raw` is the normalised pair in [-1, 1]^2 the agent
// emits; amplitude is in degrees and frequency in Hz.
struct ActionSpec {
  RawAction raw{0.0, 0.0};
  double amp_deg = 0.0;
  double freq_hz = 0.0;

  double amp_rad() const { return deg2rad(amp_deg); }
};

// Frequencies giving St = st_min and st_max at amplitude `amp` (rad).
std::array<double, 2> frequency_window(double amp, const FoilModel& model);

// Raw pair -> physical beat. Components are clamped to [-1, 1]; a non-finite
// component raises EnvironmentFault.
ActionSpec map_action(const RawAction& raw, const FoilModel& model);

// Inverse mapping from (amplitude in degrees, Strouhal number).
RawAction action_to_raw(double amp_deg, double st, const FoilModel& model);

// One entry of the observed motion history.
struct HistoryEntry {
  double amp = 0.0;   // raw amplitude component
  double freq = 0.0;  // raw frequency component
  double side = 1.0;  // sign of the extreme the beat ended on
};

inline constexpr int kFeaturesPerBeat = 3;

struct EpisodeConfig {
  double horizon_s = 60.0;
  int n_history = 0;  // 0: derive with compute_n_history
  int warmup_repeats = 2;
  RawAction initial_raw{0.0, 0.0};  // 13.5 deg at the mid Strouhal number
  bool record_loads = false;

  void validate() const;
};

// Smallest n such that n beats of the fastest admissible motion cover five
// chord lengths of flow, and at least 2k.
int compute_n_history(int k, const FoilGeometry& geom,
                      const FlowConditions& flow, const ActionBounds& bounds);

struct EnvState {
  std::deque<HistoryEntry> history;  // oldest first
  double side = 1.0;
  double elapsed = 0.0;
  std::size_t steps = 0;
  // Hidden from the agent.
  double theta = 0.0;
  WakeState wake;
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
  LedgerEntry info;
  ActionSpec action;
  double st = 0.0;
  bool degenerate = false;  // reward replaced by the power floor
};

class FoilEnv {
 public:
  FoilEnv(FoilModel model, EpisodeConfig cfg, RewardConfig reward);

  // Zeroes the wake, runs the warm-up beats and pre-fills the history.
  const EnvState& reset(std::uint64_t seed);
  StepResult step(const RawAction& raw);

  const EnvState& state() const { return state_; }
  const EpisodeLedger& ledger() const { return ledger_; }
  const std::vector<LoadSample>& loads() const { return loads_; }
  const FoilModel& model() const { return model_; }
  const EpisodeConfig& config() const { return cfg_; }
  const RewardConfig& reward_config() const { return reward_; }
  int n_history() const { return n_history_; }
  bool done() const { return done_; }
  int degenerate_count() const { return degenerate_; }

  // History flattened oldest first, kFeaturesPerBeat values per beat.
  std::vector<double> observation() const;
  void observation(double* out) const;

 private:
  LedgerEntry run_beat(const ActionSpec& a);

  FoilModel model_;
  EpisodeConfig cfg_;
  RewardConfig reward_;
  int n_history_ = 0;
  Rng rng_;
  EnvState state_;
  EpisodeLedger ledger_;
  std::vector<LoadSample> loads_;
  bool started_ = false;
  bool done_ = false;
  int degenerate_ = 0;
};

// One row of beats.csv.
struct BeatRow {
  std::size_t episode = 0;
  std::size_t step = 0;
  RawAction raw{0.0, 0.0};
  double amp_deg = 0.0;
  double freq_hz = 0.0;
  double st = 0.0;
  double duration_s = 0.0;
  double w_j = 0.0;
  double p_j = 0.0;
  double reward = 0.0;
};

struct EpisodeLog {
  std::size_t episode = 0;
  std::vector<BeatRow> beats;
  EpisodeLedger ledger;
  double long_term_eta = 0.0;
  double normalized = 0.0;
  double return_sum = 0.0;  // undiscounted sum of step rewards
  int degenerate = 0;
  std::vector<LoadSample> loads;  // only with EpisodeConfig::record_loads
};

struct RunRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string config_json;
  std::vector<EpisodeLog> episodes;
  std::vector<std::string> checkpoints;
  bool failed = false;
  std::string error;
};

BeatRow make_beat_row(std::size_t episode, std::size_t step,
                      const StepResult& r);

// Builds the log of a finished episode from the environment's ledger.
EpisodeLog make_episode_log(std::size_t episode, const FoilEnv& env,
                            std::vector<BeatRow> beats);

// One episode of uniformly random raw actions lasting at least duration_s.
RunRecord rollout_random(const FoilModel& model, EpisodeConfig cfg,
                         const RewardConfig& reward, std::uint64_t seed,
                         double duration_s);

// Episode repeating a single action (a sinusoidal gait).
EpisodeLog rollout_constant(const FoilModel& model, EpisodeConfig cfg,
                            const RewardConfig& reward, std::uint64_t seed,
                            const RawAction& raw);

class CsvWriter;
const std::vector<std::string>& beat_csv_header();
void write_beat_row(CsvWriter& csv, const BeatRow& b);

void write_beats_csv(const std::vector<EpisodeLog>& episodes,
                     const std::string& path);
std::vector<BeatRow> read_beats_csv(const std::string& path);
void write_loads_csv(const EpisodeLog& episode, const std::string& path);

}  // namespace flapfoil

#endif  // FLAPFOIL_MDP_HPP_
