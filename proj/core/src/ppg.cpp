#include "flapfoil/ppg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "flapfoil/errors.hpp"
#include "flapfoil/seeding.hpp"

namespace flapfoil {

void Hyperparams::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("agent.gamma must lie in [0, 1)");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("agent.lr must be >= 0");
  if (!(clip_eps > 0.0)) throw ConfigError("agent.clip_eps must be > 0");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
    throw ConfigError("agent.gae_lambda must lie in [0, 1]");
  if (rollout_episodes < 1) throw ConfigError("agent.rollout_episodes must be >= 1");
  if (policy_epochs < 0 || value_epochs < 0 || aux_epochs < 0)
    throw ConfigError("agent epoch counts must be >= 0");
  if (n_pi < 1) throw ConfigError("agent.n_pi must be >= 1");
  if (!(beta_clone >= 0.0)) throw ConfigError("agent.beta_clone must be >= 0");
  if (minibatch_episodes < 1) throw ConfigError("agent.minibatch_episodes must be >= 1");
  if (minibatch_decisions < 0) throw ConfigError("agent.minibatch_decisions must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0))
    throw ConfigError("agent Adam constants out of range");
  if (policy.lstm < 1 || policy.trunk < 1 || value.lstm < 1 || value.trunk < 1)
    throw ConfigError("agent layer widths must be >= 1");
  if (policy.input != kFeaturesPerBeat || value.input != kFeaturesPerBeat ||
      policy.actions != 2)
    throw ConfigError("agent input/action sizes are fixed by the environment");
}

GaeResult gae(const std::vector<double>& rewards,
              const std::vector<double>& values, double gamma, double lambda) {
  if (rewards.size() != values.size())
    throw std::invalid_argument("gae: rewards and values differ in length");
  const std::size_t n = rewards.size();
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double acc = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double next = i + 1 < n ? values[i + 1] : 0.0;
    const double delta = rewards[i] + gamma * next - values[i];
    acc = delta + gamma * lambda * acc;
    out.advantages[i] = acc;
    out.returns[i] = acc + values[i];
  }
  return out;
}

nn::Vec normalize_advantages(const nn::Vec& adv) {
  if (adv.size() == 0) return adv;
  const double mean = adv.mean();
  const double var = (adv.array() - mean).square().mean();
  return ((adv.array() - mean) / (std::sqrt(var) + 1e-8)).matrix();
}

nn::Mat gather_windows(const std::vector<DecisionRef>& decisions, int n) {
  const auto batch = static_cast<nn::Index>(decisions.size());
  nn::Mat x(kFeaturesPerBeat, n * batch);
  for (nn::Index b = 0; b < batch; ++b) {
    const auto& d = decisions[static_cast<std::size_t>(b)];
    if (d.t + static_cast<std::size_t>(n) > d.entries->size())
      throw Error("gather_windows: window past the recorded history");
    for (int s = 0; s < n; ++s) {
      const auto& e = (*d.entries)[d.t + static_cast<std::size_t>(s)];
      auto col = x.col(s * batch + b);
      col(0) = e.amp;
      col(1) = e.freq;
      col(2) = e.side;
    }
  }
  return x;
}

double policy_loss_grad(PolicyNet& net, const PolicyBatch& batch, double clip_eps,
                        double* clip_frac) {
  net.params.zero_grad();
  PolicyNet::Cache cache;
  const auto out = net.forward(batch.x, batch.steps, &cache);
  const nn::Index bsz = out.mean.cols();
  const nn::Vec adv = normalize_advantages(batch.adv);
  const double inv_b = 1.0 / static_cast<double>(bsz);

  nn::Mat d_mean = nn::Mat::Zero(2, bsz);
  nn::Vec d_log_std = nn::Vec::Zero(2);
  const nn::Mat d_aux = nn::Mat::Zero(1, bsz);
  const double inv_var[2] = {std::exp(-2.0 * out.log_std(0)),
                             std::exp(-2.0 * out.log_std(1))};
  double loss = 0.0;
  int clipped = 0;
  for (nn::Index b = 0; b < bsz; ++b) {
    const double* u = batch.u.col(b).data();
    const double* mean = out.mean.col(b).data();
    const double logp = gaussian_log_prob(u, mean, out.log_std.data(), 2);
    const double ratio = std::exp(logp - batch.logp_old(b));
    const double a = adv(b);
    const double t1 = ratio * a;
    const double t2 = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * a;
    loss -= std::min(t1, t2) * inv_b;
    if (std::abs(ratio - 1.0) > clip_eps) ++clipped;
    if (t1 <= t2) {
      const double g = -a * ratio * inv_b;  // dL / dlogp
      for (int i = 0; i < 2; ++i) {
        const double diff = u[i] - mean[i];
        d_mean(i, b) += g * diff * inv_var[i];
        d_log_std(i) += g * (diff * diff * inv_var[i] - 1.0);
      }
    }
  }
  net.backward(cache, d_mean, d_log_std, d_aux);
  if (clip_frac) *clip_frac = static_cast<double>(clipped) * inv_b;
  return loss;
}

double value_loss_grad(ValueNet& net, const nn::Mat& x, nn::Index steps,
                       const nn::Vec& returns) {
  net.params.zero_grad();
  ValueNet::Cache cache;
  const nn::Mat v = net.forward(x, steps, &cache);
  const double inv_b = 1.0 / static_cast<double>(v.cols());
  const nn::Mat diff = v - returns.transpose();
  const double loss = 0.5 * diff.squaredNorm() * inv_b;
  net.backward(cache, diff * inv_b);
  return loss;
}

double aux_loss_grad(PolicyNet& net, const AuxBatch& batch, double beta_clone,
                     double* kl_out) {
  net.params.zero_grad();
  PolicyNet::Cache cache;
  const auto out = net.forward(batch.x, batch.steps, &cache);
  const nn::Index bsz = out.mean.cols();
  const double inv_b = 1.0 / static_cast<double>(bsz);

  const nn::Mat diff = out.aux - batch.returns.transpose();
  double loss = 0.5 * diff.squaredNorm() * inv_b;
  const nn::Mat d_aux = diff * inv_b;

  nn::Mat d_mean = nn::Mat::Zero(2, bsz);
  nn::Vec d_log_std = nn::Vec::Zero(2);
  double kl = 0.0;
  for (nn::Index b = 0; b < bsz; ++b) {
    const double* mo = batch.mean_old.col(b).data();
    const double* mn = out.mean.col(b).data();
    kl += gaussian_kl(mo, batch.log_std_old.data(), mn, out.log_std.data(), 2);
    for (int i = 0; i < 2; ++i) {
      const double var_new = std::exp(2.0 * out.log_std(i));
      const double var_old = std::exp(2.0 * batch.log_std_old(i));
      const double dm = mn[i] - mo[i];
      d_mean(i, b) = beta_clone * inv_b * dm / var_new;
      d_log_std(i) += beta_clone * inv_b * (1.0 - (var_old + dm * dm) / var_new);
    }
  }
  kl *= inv_b;
  loss += beta_clone * kl;
  net.backward(cache, d_mean, d_log_std, d_aux);
  if (kl_out) *kl_out = kl;
  return loss;
}

namespace {

bool apply(nn::ParamSet& ps, nn::Adam& opt, double loss) {
  if (!std::isfinite(loss) || !ps.grads.allFinite()) return false;
  opt.step(ps.values, ps.grads);
  return true;
}

}  // namespace

LossStats ppo_policy_update(PolicyNet& net, nn::Adam& opt,
                            const PolicyBatch& batch, const Hyperparams& hp) {
  LossStats s;
  s.loss = policy_loss_grad(net, batch, hp.clip_eps, &s.extra);
  s.steps = 1;
  if (!apply(net.params, opt, s.loss)) s.skipped = 1;
  return s;
}

LossStats value_update(ValueNet& net, nn::Adam& opt, const nn::Mat& x,
                       nn::Index steps, const nn::Vec& returns) {
  LossStats s;
  s.loss = value_loss_grad(net, x, steps, returns);
  s.steps = 1;
  if (!apply(net.params, opt, s.loss)) s.skipped = 1;
  return s;
}

namespace {

std::vector<DecisionRef> episode_decisions(const std::vector<HistoryEntry>& entries,
                                           std::size_t steps) {
  std::vector<DecisionRef> refs(steps);
  for (std::size_t t = 0; t < steps; ++t) refs[t] = {&entries, t};
  return refs;
}

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Fisher-Yates with an explicit draw so the order is library independent.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace

LossStats ppg_aux_phase(PolicyNet& policy, ValueNet& value, nn::Adam& popt,
                        nn::Adam& vopt, const std::vector<ReplayEpisode>& replay,
                        int n_history, const Hyperparams& hp, Rng& shuffle_rng) {
  if (replay.empty()) throw Error("ppg_aux_phase: empty replay buffer");
  LossStats stats;
  if (hp.aux_epochs == 0) return stats;

  // Behaviour-cloning targets: the policy as it stands before the phase.
  std::vector<nn::Mat> mean_old(replay.size());
  nn::Vec log_std_old;
  for (std::size_t e = 0; e < replay.size(); ++e) {
    const auto& ep = replay[e];
    const auto x = gather_windows(episode_decisions(ep.entries, ep.returns.size()),
                                  n_history);
    auto out = policy.forward(x, n_history);
    mean_old[e] = std::move(out.mean);
    log_std_old = out.log_std;
  }

  const std::size_t mb = static_cast<std::size_t>(hp.minibatch_episodes);
  double loss_sum = 0.0;
  double kl_sum = 0.0;
  for (int epoch = 0; epoch < hp.aux_epochs; ++epoch) {
    const auto order = shuffled(replay.size(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += mb) {
      const std::size_t stop = std::min(order.size(), start + mb);
      std::vector<DecisionRef> refs;
      std::vector<double> ret;
      std::vector<const nn::Mat*> means;
      for (std::size_t i = start; i < stop; ++i) {
        const auto& ep = replay[order[i]];
        auto r = episode_decisions(ep.entries, ep.returns.size());
        refs.insert(refs.end(), r.begin(), r.end());
        ret.insert(ret.end(), ep.returns.begin(), ep.returns.end());
        means.push_back(&mean_old[order[i]]);
      }
      AuxBatch batch;
      batch.x = gather_windows(refs, n_history);
      batch.steps = n_history;
      batch.returns = Eigen::Map<const nn::Vec>(ret.data(),
                                                static_cast<nn::Index>(ret.size()));
      batch.mean_old.resize(2, batch.returns.size());
      nn::Index col = 0;
      for (const auto* m : means) {
        batch.mean_old.middleCols(col, m->cols()) = *m;
        col += m->cols();
      }
      batch.log_std_old = log_std_old;

      double kl = 0.0;
      const double loss = aux_loss_grad(policy, batch, hp.beta_clone, &kl);
      if (apply(policy.params, popt, loss)) {
        loss_sum += loss;
        kl_sum += kl;
      } else {
        ++stats.skipped;
      }
      const auto vs = value_update(value, vopt, batch.x, n_history, batch.returns);
      stats.skipped += vs.skipped;
      ++stats.steps;
    }
  }
  if (stats.steps > 0) {
    stats.loss = loss_sum / stats.steps;
    stats.extra = kl_sum / stats.steps;
  }
  return stats;
}

PpgTrainer::PpgTrainer(FoilModel model, EpisodeConfig env, RewardConfig reward,
                       Hyperparams hp, std::uint64_t init_seed,
                       std::uint64_t explore_seed)
    : policy(hp.policy),
      value(hp.value),
      model_(model),
      env_cfg_(env),
      reward_(reward),
      hp_(hp),
      explore_seed_(explore_seed),
      n_history_(0),
      explore_rng_(derive_seed(explore_seed, kStreamAction)),
      shuffle_rng_(derive_seed(explore_seed, kStreamShuffle)) {
  hp_.validate();
  env_cfg_.validate();
  reward_.validate();
  n_history_ = env_cfg_.n_history > 0
                   ? env_cfg_.n_history
                   : compute_n_history(reward_.k, model_.geom, model_.flow,
                                       model_.bounds);
  policy.init(derive_seed(init_seed, kStreamInit, 0));
  value.init(derive_seed(init_seed, kStreamInit, 1));
  policy_opt = nn::Adam(policy.params.size(), hp_.adam());
  value_opt = nn::Adam(value.params.size(), hp_.adam());
}

std::vector<EpisodeLog> PpgTrainer::collect(std::size_t count,
                                            std::vector<EpisodeTrace>* traces_out,
                                            const TrainerHooks& hooks) {
  constexpr int kMaxRetries = 3;
  std::vector<FoilEnv> envs;
  envs.reserve(count);
  std::vector<EpisodeTrace> traces(count);
  std::vector<std::vector<BeatRow>> rows(count);
  std::vector<int> retries(count, 0);

  auto start = [&](std::size_t j) {
    const std::size_t episode = episodes_done_ + j;
    const std::uint64_t attempt = static_cast<std::uint64_t>(retries[j]);
    envs[j].reset(derive_seed(explore_seed_, kStreamEnv, episode | (attempt << 48)));
    traces[j] = EpisodeTrace{};
    const auto& h = envs[j].state().history;
    traces[j].entries.assign(h.begin(), h.end());
    rows[j].clear();
  };
  for (std::size_t j = 0; j < count; ++j) {
    envs.emplace_back(model_, env_cfg_, reward_);
    start(j);
  }

  std::vector<std::size_t> active(count);
  std::iota(active.begin(), active.end(), std::size_t{0});
  while (!active.empty()) {
    std::vector<DecisionRef> refs;
    for (auto j : active) refs.push_back({&traces[j].entries, traces[j].steps()});
    const auto out = policy.forward(gather_windows(refs, n_history_), n_history_);

    std::vector<std::size_t> still;
    for (std::size_t b = 0; b < active.size(); ++b) {
      const std::size_t j = active[b];
      const double* mean = out.mean.col(static_cast<nn::Index>(b)).data();
      try {
        const auto s = sample_action(mean, out.log_std.data(), explore_rng_);
        const auto r = envs[j].step(s.raw);
        auto& tr = traces[j];
        rows[j].push_back(make_beat_row(episodes_done_ + j, tr.steps(), r));
        tr.u.push_back(s.u);
        tr.logp_old.push_back(gaussian_log_prob(s.u.data(), mean, out.log_std.data(), 2));
        tr.rewards.push_back(r.reward);
        tr.entries.push_back(envs[j].state().history.back());
        if (!r.done) still.push_back(j);
      } catch (const Error& e) {
        if (hooks.on_fault)
          hooks.on_fault("episode " + std::to_string(episodes_done_ + j) +
                         " discarded: " + e.what());
        if (++retries[j] > kMaxRetries)
          throw EnvironmentFault("episode " + std::to_string(episodes_done_ + j) +
                                 " failed repeatedly: " + e.what());
        start(j);
        still.push_back(j);
      }
    }
    active = std::move(still);
  }

  std::vector<EpisodeLog> logs;
  logs.reserve(count);
  for (std::size_t j = 0; j < count; ++j)
    logs.push_back(make_episode_log(episodes_done_ + j, envs[j], std::move(rows[j])));
  episodes_done_ += count;
  if (traces_out) *traces_out = std::move(traces);
  return logs;
}

void PpgTrainer::compute_values(std::vector<EpisodeTrace>& traces) const {
  std::vector<DecisionRef> refs;
  for (auto& tr : traces) {
    auto r = episode_decisions(tr.entries, tr.steps());
    refs.insert(refs.end(), r.begin(), r.end());
  }
  if (refs.empty()) return;
  const nn::Mat v = value.forward(gather_windows(refs, n_history_), n_history_);
  nn::Index col = 0;
  for (auto& tr : traces) {
    tr.values.resize(tr.steps());
    for (auto& x : tr.values) x = v(0, col++);
  }
}

void PpgTrainer::compute_advantages(std::vector<EpisodeTrace>& traces) const {
  for (auto& tr : traces) {
    auto g = gae(tr.rewards, tr.values, hp_.gamma, hp_.gae_lambda);
    tr.advantages = std::move(g.advantages);
    tr.returns = std::move(g.returns);
  }
}

std::vector<std::vector<std::pair<std::size_t, std::size_t>>> PpgTrainer::minibatches(
    const std::vector<EpisodeTrace>& traces, Rng& rng) const {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> out;
  if (hp_.minibatch_decisions > 0) {
    std::vector<std::pair<std::size_t, std::size_t>> all;
    for (std::size_t e = 0; e < traces.size(); ++e)
      for (std::size_t t = 0; t < traces[e].steps(); ++t) all.emplace_back(e, t);
    const auto order = shuffled(all.size(), rng);
    const auto mb = static_cast<std::size_t>(hp_.minibatch_decisions);
    for (std::size_t s0 = 0; s0 < order.size(); s0 += mb) {
      auto& batch = out.emplace_back();
      for (std::size_t i = s0; i < std::min(order.size(), s0 + mb); ++i)
        batch.push_back(all[order[i]]);
    }
    return out;
  }
  const auto order = shuffled(traces.size(), rng);
  const auto mb = static_cast<std::size_t>(hp_.minibatch_episodes);
  for (std::size_t s0 = 0; s0 < order.size(); s0 += mb) {
    auto& batch = out.emplace_back();
    for (std::size_t i = s0; i < std::min(order.size(), s0 + mb); ++i)
      for (std::size_t t = 0; t < traces[order[i]].steps(); ++t)
        batch.emplace_back(order[i], t);
  }
  return out;
}

void PpgTrainer::update(std::vector<EpisodeTrace>& traces, const TrainerHooks& hooks) {
  if (traces.empty()) return;
  compute_values(traces);
  compute_advantages(traces);
  for (const auto& tr : traces) replay_.push_back({tr.entries, tr.returns});

  const int epochs = std::max(hp_.policy_epochs, hp_.value_epochs);
  int skipped = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (const auto& mbatch : minibatches(traces, shuffle_rng_)) {
      std::vector<DecisionRef> refs;
      std::vector<double> adv, ret, logp;
      std::vector<std::array<double, 2>> u;
      refs.reserve(mbatch.size());
      for (const auto& [e, t] : mbatch) {
        const auto& tr = traces[e];
        refs.push_back({&tr.entries, t});
        adv.push_back(tr.advantages[t]);
        ret.push_back(tr.returns[t]);
        logp.push_back(tr.logp_old[t]);
        u.push_back(tr.u[t]);
      }
      const auto bsz = static_cast<nn::Index>(refs.size());
      const nn::Mat x = gather_windows(refs, n_history_);
      if (epoch < hp_.policy_epochs) {
        PolicyBatch batch;
        batch.x = x;
        batch.steps = n_history_;
        batch.u.resize(2, bsz);
        for (nn::Index b = 0; b < bsz; ++b) {
          batch.u(0, b) = u[static_cast<std::size_t>(b)][0];
          batch.u(1, b) = u[static_cast<std::size_t>(b)][1];
        }
        batch.logp_old = Eigen::Map<const nn::Vec>(logp.data(), bsz);
        batch.adv = Eigen::Map<const nn::Vec>(adv.data(), bsz);
        skipped += ppo_policy_update(policy, policy_opt, batch, hp_).skipped;
      }
      if (epoch < hp_.value_epochs) {
        const nn::Vec r = Eigen::Map<const nn::Vec>(ret.data(), bsz);
        skipped += value_update(value, value_opt, x, n_history_, r).skipped;
      }
    }
    if (epoch < hp_.value_epochs) {
      compute_values(traces);
      compute_advantages(traces);
    }
  }
  if (skipped > 0 && hooks.on_fault)
    hooks.on_fault(std::to_string(skipped) + " update(s) skipped: non-finite loss");

  ++total_phases_;
  if (++phases_since_aux_ >= hp_.n_pi) {
    const auto s = ppg_aux_phase(policy, value, policy_opt, value_opt, replay_,
                                 n_history_, hp_, shuffle_rng_);
    if (s.skipped > 0 && hooks.on_fault)
      hooks.on_fault(std::to_string(s.skipped) + " aux update(s) skipped");
    replay_.clear();
    phases_since_aux_ = 0;
  }
}

void PpgTrainer::run(std::size_t total_episodes, const TrainerHooks& hooks) {
  const std::size_t every = std::max<std::size_t>(1, hooks.checkpoint_every);
  while (episodes_done_ < total_episodes) {
    const std::size_t count = std::min<std::size_t>(
        static_cast<std::size_t>(hp_.rollout_episodes), total_episodes - episodes_done_);
    const std::size_t next_mark = (episodes_done_ + every - 1) / every * every;
    if (hooks.on_checkpoint && next_mark < episodes_done_ + count)
      hooks.on_checkpoint(episodes_done_, snapshot());
    std::vector<EpisodeTrace> traces;
    const auto logs = collect(count, &traces, hooks);
    if (hooks.on_episode)
      for (const auto& log : logs) hooks.on_episode(log);
    update(traces, hooks);
  }
}

std::string PpgTrainer::arch_tag() const {
  return hp_.policy.tag() + "|" + hp_.value.tag() + "|n" + std::to_string(n_history_);
}

namespace {

std::vector<double> to_std(const nn::Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

void from_std(nn::Vec& dst, const std::vector<double>& src, const char* what) {
  if (static_cast<std::size_t>(dst.size()) != src.size())
    throw RecordError(std::string("checkpoint array '") + what + "' has wrong size");
  dst = Eigen::Map<const nn::Vec>(src.data(), dst.size());
}

template <typename T>
std::string rng_text(const T& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

template <typename T>
void rng_from_text(T& rng, const std::string& s) {
  std::istringstream is(s);
  is >> rng;
  if (!is) throw RecordError("checkpoint rng state is corrupt");
}

}  // namespace

Checkpoint PpgTrainer::snapshot() const {
  Checkpoint c;
  c.arch = arch_tag();
  c.ints = {{"episodes_done", static_cast<std::int64_t>(episodes_done_)},
            {"phases_since_aux", phases_since_aux_},
            {"total_phases", total_phases_},
            {"policy_adam_t", policy_opt.t},
            {"value_adam_t", value_opt.t}};
  c.texts = {{"explore_rng", rng_text(explore_rng_)},
             {"shuffle_rng", rng_text(shuffle_rng_)}};
  std::vector<double> lengths, entries, returns;
  for (const auto& ep : replay_) {
    lengths.push_back(static_cast<double>(ep.entries.size()));
    lengths.push_back(static_cast<double>(ep.returns.size()));
    for (const auto& e : ep.entries) {
      entries.push_back(e.amp);
      entries.push_back(e.freq);
      entries.push_back(e.side);
    }
    returns.insert(returns.end(), ep.returns.begin(), ep.returns.end());
  }
  c.arrays = {{"policy.params", to_std(policy.params.values)},
              {"value.params", to_std(value.params.values)},
              {"policy_adam.m", to_std(policy_opt.m)},
              {"policy_adam.v", to_std(policy_opt.v)},
              {"value_adam.m", to_std(value_opt.m)},
              {"value_adam.v", to_std(value_opt.v)},
              {"replay.lengths", std::move(lengths)},
              {"replay.entries", std::move(entries)},
              {"replay.returns", std::move(returns)}};
  return c;
}

void PpgTrainer::restore(const Checkpoint& c) {
  if (c.arch != arch_tag())
    throw RecordError("checkpoint architecture '" + c.arch + "' does not match '" +
                      arch_tag() + "'");
  from_std(policy.params.values, c.array("policy.params"), "policy.params");
  from_std(value.params.values, c.array("value.params"), "value.params");
  from_std(policy_opt.m, c.array("policy_adam.m"), "policy_adam.m");
  from_std(policy_opt.v, c.array("policy_adam.v"), "policy_adam.v");
  from_std(value_opt.m, c.array("value_adam.m"), "value_adam.m");
  from_std(value_opt.v, c.array("value_adam.v"), "value_adam.v");
  policy_opt.t = c.integer("policy_adam_t");
  value_opt.t = c.integer("value_adam_t");
  episodes_done_ = static_cast<std::size_t>(c.integer("episodes_done"));
  phases_since_aux_ = c.integer("phases_since_aux");
  total_phases_ = c.integer("total_phases");
  rng_from_text(explore_rng_, c.text("explore_rng"));
  rng_from_text(shuffle_rng_, c.text("shuffle_rng"));

  const auto& lengths = c.array("replay.lengths");
  const auto& entries = c.array("replay.entries");
  const auto& returns = c.array("replay.returns");
  if (lengths.size() % 2 != 0) throw RecordError("checkpoint replay index is corrupt");
  replay_.clear();
  std::size_t ei = 0, ri = 0;
  for (std::size_t i = 0; i < lengths.size(); i += 2) {
    const auto ne = static_cast<std::size_t>(lengths[i]);
    const auto nr = static_cast<std::size_t>(lengths[i + 1]);
    if (ei + 3 * ne > entries.size() || ri + nr > returns.size())
      throw RecordError("checkpoint replay buffer is truncated");
    ReplayEpisode ep;
    for (std::size_t k = 0; k < ne; ++k, ei += 3)
      ep.entries.push_back({entries[ei], entries[ei + 1], entries[ei + 2]});
    ep.returns.assign(returns.begin() + static_cast<std::ptrdiff_t>(ri),
                      returns.begin() + static_cast<std::ptrdiff_t>(ri + nr));
    ri += nr;
    replay_.push_back(std::move(ep));
  }
  if (ei != entries.size() || ri != returns.size())
    throw RecordError("checkpoint replay buffer has trailing data");
}

}  // namespace flapfoil
