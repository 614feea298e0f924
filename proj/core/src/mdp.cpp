#include "flapfoil/mdp.hpp"

#include <algorithm>
#include <cmath>

#include "flapfoil/csv.hpp"
#include "flapfoil/errors.hpp"
#include "flapfoil/seeding.hpp"

namespace flapfoil {

std::array<double, 2> frequency_window(double amp, const FoilModel& model) {
  const auto& b = model.bounds;
  return {frequency_for_strouhal(b.st_min, amp, model.flow, model.geom),
          frequency_for_strouhal(b.st_max, amp, model.flow, model.geom)};
}

ActionSpec map_action(const RawAction& raw, const FoilModel& model) {
  if (!std::isfinite(raw[0]) || !std::isfinite(raw[1]))
    throw EnvironmentFault("non-finite action");
  ActionSpec a;
  a.raw = {std::clamp(raw[0], -1.0, 1.0), std::clamp(raw[1], -1.0, 1.0)};
  const auto& b = model.bounds;
  const double amp = b.amp_min + (b.amp_max - b.amp_min) * 0.5 * (a.raw[0] + 1.0);
  const auto [f_lo, f_hi] = frequency_window(amp, model);
  a.amp_deg = rad2deg(amp);
  a.freq_hz = f_lo + (f_hi - f_lo) * 0.5 * (a.raw[1] + 1.0);
  return a;
}

RawAction action_to_raw(double amp_deg, double st, const FoilModel& model) {
  const auto& b = model.bounds;
  const double amp = deg2rad(amp_deg);
  return {2.0 * (amp - b.amp_min) / (b.amp_max - b.amp_min) - 1.0,
          2.0 * (st - b.st_min) / (b.st_max - b.st_min) - 1.0};
}

void EpisodeConfig::validate() const {
  if (!(horizon_s > 0.0) || !std::isfinite(horizon_s))
    throw ConfigError("env.horizon_s must be positive");
  if (n_history < 0) throw ConfigError("env.n_history must be >= 0");
  if (warmup_repeats < 0) throw ConfigError("env.warmup_repeats must be >= 0");
  for (double r : initial_raw)
    if (!(r >= -1.0 && r <= 1.0))
      throw ConfigError("env.initial_raw components must lie in [-1, 1]");
}

int compute_n_history(int k, const FoilGeometry& geom,
                      const FlowConditions& flow, const ActionBounds& bounds) {
  if (k < 1) throw ConfigError("compute_n_history: k must be >= 1");
  const double f_max =
      frequency_for_strouhal(bounds.st_max, bounds.amp_min, flow, geom);
  const double d_min = 1.0 / (2.0 * f_max);
  const double flow_through = 5.0 * geom.chord / flow.u_inf;
  const int by_flow = static_cast<int>(std::ceil(flow_through / d_min));
  return std::max(by_flow, 2 * k);
}

FoilEnv::FoilEnv(FoilModel model, EpisodeConfig cfg, RewardConfig reward)
    : model_(model), cfg_(cfg), reward_(reward) {
  model_.geom.validate();
  model_.flow.validate();
  model_.params.validate();
  cfg_.validate();
  reward_.validate();
  n_history_ = cfg_.n_history > 0
                   ? cfg_.n_history
                   : compute_n_history(reward_.k, model_.geom, model_.flow,
                                       model_.bounds);
}

LedgerEntry FoilEnv::run_beat(const ActionSpec& a) {
  const auto beat = plan_tailbeat(state_.theta, a.amp_rad(), a.freq_hz,
                                  model_.geom, model_.flow, model_.bounds);
  auto res = simulate_beat(beat.samples, state_.wake, model_.params,
                           model_.flow, model_.geom, rng_);
  if (cfg_.record_loads) {
    const double t0 = state_.elapsed;
    for (auto l : res.loads) {
      l.t += t0;
      loads_.push_back(l);
    }
  }
  state_.wake = res.wake;
  state_.theta = beat.theta_end;
  state_.side = beat.theta_end > 0.0 ? 1.0 : -1.0;
  return res.ledger;
}

const EnvState& FoilEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  state_ = EnvState{};
  ledger_ = EpisodeLedger{};
  loads_.clear();
  done_ = false;
  degenerate_ = 0;

  const ActionSpec init = map_action(cfg_.initial_raw, model_);
  // Warm-up starts from whichever extreme makes the last beat end at +amp.
  state_.theta = cfg_.warmup_repeats % 2 == 0 ? init.amp_rad() : -init.amp_rad();
  for (int i = 0; i < cfg_.warmup_repeats; ++i) {
    ledger_.entries.push_back(run_beat(init));
    // Warm-up time does not count toward the horizon.
    state_.elapsed = 0.0;
  }
  ledger_.warmup_len = ledger_.entries.size();
  state_.theta = init.amp_rad();
  state_.side = 1.0;

  // History ends on the current (+) side and alternates backwards.
  for (int i = 0; i < n_history_; ++i) {
    const double side = (n_history_ - 1 - i) % 2 == 0 ? 1.0 : -1.0;
    state_.history.push_back({init.raw[0], init.raw[1], side});
  }
  state_.elapsed = 0.0;
  started_ = true;
  return state_;
}

StepResult FoilEnv::step(const RawAction& raw) {
  if (!started_) throw EnvironmentFault("step() before reset()");
  if (done_) throw EnvironmentFault("step() after the episode finished");
  StepResult out;
  out.action = map_action(raw, model_);
  out.st = strouhal(out.action.amp_rad(), out.action.freq_hz, model_.flow,
                    model_.geom);
  const double t0 = state_.elapsed;
  out.info = run_beat(out.action);
  state_.elapsed = t0 + out.info.duration;
  ledger_.entries.push_back(out.info);

  // Without a warm-up prefix the first windows are truncated to the beats
  // actually executed.
  int k = reward_.k;
  if (ledger_.warmup_len == 0)
    k = static_cast<int>(std::min<std::size_t>(k, state_.steps + 1));
  const auto r =
      kwindow_reward_or_floor(ledger_, state_.steps, k, reward_.power_floor);
  out.reward = r.value;
  out.degenerate = r.degenerate;
  degenerate_ += r.degenerate ? 1 : 0;

  state_.history.pop_front();
  state_.history.push_back({out.action.raw[0], out.action.raw[1], state_.side});
  ++state_.steps;
  done_ = state_.elapsed >= cfg_.horizon_s;
  out.done = done_;
  return out;
}

std::vector<double> FoilEnv::observation() const {
  std::vector<double> out(state_.history.size() * kFeaturesPerBeat);
  observation(out.data());
  return out;
}

void FoilEnv::observation(double* out) const {
  for (const auto& h : state_.history) {
    *out++ = h.amp;
    *out++ = h.freq;
    *out++ = h.side;
  }
}

EpisodeLog make_episode_log(std::size_t episode, const FoilEnv& env,
                            std::vector<BeatRow> beats) {
  EpisodeLog log;
  log.episode = episode;
  log.beats = std::move(beats);
  log.ledger = env.ledger();
  log.degenerate = env.degenerate_count();
  for (const auto& b : log.beats) log.return_sum += b.reward;
  log.long_term_eta = long_term_efficiency(log.ledger);
  log.normalized = normalize_performance(log.long_term_eta,
                                         env.reward_config().norm_lo,
                                         env.reward_config().norm_hi);
  if (env.config().record_loads) log.loads = env.loads();
  return log;
}

BeatRow make_beat_row(std::size_t episode, std::size_t step,
                      const StepResult& r) {
  BeatRow row;
  row.episode = episode;
  row.step = step;
  row.raw = r.action.raw;
  row.amp_deg = r.action.amp_deg;
  row.freq_hz = r.action.freq_hz;
  row.st = r.st;
  row.duration_s = r.info.duration;
  row.w_j = r.info.w_useful;
  row.p_j = r.info.p_expended;
  row.reward = r.reward;
  return row;
}

RunRecord rollout_random(const FoilModel& model, EpisodeConfig cfg,
                         const RewardConfig& reward, std::uint64_t seed,
                         double duration_s) {
  if (!(duration_s > 0.0)) throw ConfigError("rollout duration must be > 0");
  cfg.horizon_s = duration_s;
  FoilEnv env(model, cfg, reward);
  env.reset(derive_seed(seed, kStreamEnv));
  Rng action_rng(derive_seed(seed, kStreamAction));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<BeatRow> beats;
  while (!env.done()) {
    const double a = u(action_rng);
    const double f = u(action_rng);
    const auto r = env.step({a, f});
    beats.push_back(make_beat_row(0, beats.size(), r));
  }
  RunRecord rec;
  rec.run_id = "random_" + std::to_string(seed);
  rec.seed = seed;
  rec.episodes.push_back(make_episode_log(0, env, std::move(beats)));
  return rec;
}

EpisodeLog rollout_constant(const FoilModel& model, EpisodeConfig cfg,
                            const RewardConfig& reward, std::uint64_t seed,
                            const RawAction& raw) {
  // A sinusoidal gait is warmed up with itself.
  cfg.initial_raw = {std::clamp(raw[0], -1.0, 1.0), std::clamp(raw[1], -1.0, 1.0)};
  FoilEnv env(model, cfg, reward);
  env.reset(derive_seed(seed, kStreamEnv));
  std::vector<BeatRow> beats;
  while (!env.done()) beats.push_back(make_beat_row(0, beats.size(), env.step(raw)));
  return make_episode_log(0, env, std::move(beats));
}

const std::vector<std::string>& beat_csv_header() {
  static const std::vector<std::string> header = {
      "episode", "step",       "raw_amp", "raw_freq", "amp_deg", "freq_hz",
      "st",      "duration_s", "w_j",     "p_j",      "reward"};
  return header;
}

void write_beat_row(CsvWriter& csv, const BeatRow& b) {
  csv.cell(b.episode).cell(b.step).cell(b.raw[0]).cell(b.raw[1])
      .cell(b.amp_deg).cell(b.freq_hz).cell(b.st).cell(b.duration_s)
      .cell(b.w_j).cell(b.p_j).cell(b.reward);
  csv.end_row();
}

void write_beats_csv(const std::vector<EpisodeLog>& episodes,
                     const std::string& path) {
  CsvWriter csv(path, beat_csv_header());
  for (const auto& ep : episodes)
    for (const auto& b : ep.beats) write_beat_row(csv, b);
}

std::vector<BeatRow> read_beats_csv(const std::string& path) {
  const auto table = read_csv(path);
  std::vector<std::size_t> col;
  for (const auto& h : beat_csv_header()) col.push_back(table.column(h));
  std::vector<BeatRow> rows;
  rows.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    BeatRow b;
    b.episode = parse_index(r[col[0]]);
    b.step = parse_index(r[col[1]]);
    b.raw = {parse_double(r[col[2]]), parse_double(r[col[3]])};
    b.amp_deg = parse_double(r[col[4]]);
    b.freq_hz = parse_double(r[col[5]]);
    b.st = parse_double(r[col[6]]);
    b.duration_s = parse_double(r[col[7]]);
    b.w_j = parse_double(r[col[8]]);
    b.p_j = parse_double(r[col[9]]);
    b.reward = parse_double(r[col[10]]);
    rows.push_back(b);
  }
  return rows;
}

void write_loads_csv(const EpisodeLog& episode, const std::string& path) {
  CsvWriter csv(path, {"t", "thrust_clean", "torque_clean", "thrust_meas",
                       "torque_meas"});
  for (const auto& l : episode.loads) {
    csv.cell(l.t).cell(l.thrust_clean).cell(l.torque_clean)
        .cell(l.thrust_meas).cell(l.torque_meas);
    csv.end_row();
  }
}

}  // namespace flapfoil
