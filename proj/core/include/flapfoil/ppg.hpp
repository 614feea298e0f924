#ifndef FLAPFOIL_PPG_HPP_
#define FLAPFOIL_PPG_HPP_

// Phasic policy gradient for the tail-beat environment.
//
// Every decision sees a fixed window of n history entries, and the recurrent
// nets are run over that window from a zero state. Decisions are therefore
// independent sequences and any set of them can be batched.

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "flapfoil/checkpoint.hpp"
#include "flapfoil/mdp.hpp"
#include "flapfoil/policy.hpp"

namespace flapfoil {

struct Hyperparams {
  double gamma = 0.999;
  double lr = 2e-4;
  double clip_eps = 0.2;
  double gae_lambda = 0.95;
  int rollout_episodes = 8;
  int policy_epochs = 1;
  int value_epochs = 1;
  int n_pi = 32;
  int aux_epochs = 6;
  double beta_clone = 1.0;
  int minibatch_episodes = 1;  // episodes per gradient step
  // When > 0, decisions of a rollout batch are shuffled individually and
  // split into minibatches of this size instead of whole episodes.
  int minibatch_decisions = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  PolicyArch policy;
  ValueArch value;

  nn::AdamConfig adam() const { return {lr, adam_beta1, adam_beta2, adam_eps}; }
  void validate() const;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Terminal bootstrap value is 0 at the end of the sequence.
GaeResult gae(const std::vector<double>& rewards,
              const std::vector<double>& values, double gamma, double lambda);

// Advantages shifted to mean 0 and scaled to unit (population) std.
nn::Vec normalize_advantages(const nn::Vec& adv);

// Column block of history windows for a set of decisions; see nn.hpp for
// the time-major layout.
struct DecisionRef {
  const std::vector<HistoryEntry>* entries = nullptr;
  std::size_t t = 0;  // window is entries[t, t + n)
};
nn::Mat gather_windows(const std::vector<DecisionRef>& decisions, int n);

struct PolicyBatch {
  nn::Mat x;
  nn::Index steps = 0;
  nn::Mat u;          // 2 x B pre-squash actions
  nn::Vec logp_old;   // Gaussian log-density of u under the behaviour policy
  nn::Vec adv;        // raw advantages (normalised inside the loss)
};

struct AuxBatch {
  nn::Mat x;
  nn::Index steps = 0;
  nn::Vec returns;
  nn::Mat mean_old;     // 2 x B
  nn::Vec log_std_old;  // 2
};

// Each *_loss_grad zeroes the gradient buffer of the net, evaluates the
// loss, and leaves its gradient in params.grads.
double policy_loss_grad(PolicyNet& net, const PolicyBatch& batch, double clip_eps,
                        double* clip_frac = nullptr);
double value_loss_grad(ValueNet& net, const nn::Mat& x, nn::Index steps,
                       const nn::Vec& returns);
double aux_loss_grad(PolicyNet& net, const AuxBatch& batch, double beta_clone,
                     double* kl_out = nullptr);

struct LossStats {
  double loss = 0.0;
  double extra = 0.0;  // clip fraction (policy) or mean KL (aux)
  int steps = 0;
  int skipped = 0;     // updates dropped because of a non-finite loss
};

LossStats ppo_policy_update(PolicyNet& net, nn::Adam& opt,
                            const PolicyBatch& batch, const Hyperparams& hp);
LossStats value_update(ValueNet& net, nn::Adam& opt, const nn::Mat& x,
                       nn::Index steps, const nn::Vec& returns);

// Decisions of one collected episode.
struct EpisodeTrace {
  std::vector<HistoryEntry> entries;  // n initial entries + one per step
  std::vector<std::array<double, 2>> u;
  std::vector<double> logp_old;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t steps() const { return rewards.size(); }
};

// Stored for the auxiliary phase.
struct ReplayEpisode {
  std::vector<HistoryEntry> entries;
  std::vector<double> returns;
};

LossStats ppg_aux_phase(PolicyNet& policy, ValueNet& value, nn::Adam& popt,
                        nn::Adam& vopt, const std::vector<ReplayEpisode>& replay,
                        int n_history, const Hyperparams& hp, Rng& shuffle_rng);

struct TrainerHooks {
  // Called once per finished episode, in episode order.
  std::function<void(const EpisodeLog&)> on_episode;
  // Called before collecting a batch that contains a multiple of
  // `checkpoint_every` episodes (always before the first batch).
  std::function<void(std::size_t first_episode, const Checkpoint&)> on_checkpoint;
  // Logs recoverable faults (discarded episodes, skipped updates).
  std::function<void(const std::string&)> on_fault;
  std::size_t checkpoint_every = 50;
};

class PpgTrainer {
 public:
  PpgTrainer(FoilModel model, EpisodeConfig env, RewardConfig reward,
             Hyperparams hp, std::uint64_t init_seed, std::uint64_t explore_seed);

  // Trains until `total_episodes` episodes have been collected.
  void run(std::size_t total_episodes, const TrainerHooks& hooks = {});

  // One rollout batch of `count` episodes, logs numbered from episodes_done().
  std::vector<EpisodeLog> collect(std::size_t count, std::vector<EpisodeTrace>* traces,
                                  const TrainerHooks& hooks = {});
  void update(std::vector<EpisodeTrace>& traces, const TrainerHooks& hooks = {});

  Checkpoint snapshot() const;
  void restore(const Checkpoint& ckpt);

  std::size_t episodes_done() const { return episodes_done_; }
  int n_history() const { return n_history_; }
  const Hyperparams& hyper() const { return hp_; }

  PolicyNet policy;
  ValueNet value;
  nn::Adam policy_opt;
  nn::Adam value_opt;

 private:
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> minibatches(
      const std::vector<EpisodeTrace>& traces, Rng& rng) const;
  void compute_values(std::vector<EpisodeTrace>& traces) const;
  void compute_advantages(std::vector<EpisodeTrace>& traces) const;
  std::string arch_tag() const;

  FoilModel model_;
  EpisodeConfig env_cfg_;
  RewardConfig reward_;
  Hyperparams hp_;
  std::uint64_t explore_seed_;
  int n_history_;
  Rng explore_rng_;
  Rng shuffle_rng_;
  std::size_t episodes_done_ = 0;
  std::int64_t phases_since_aux_ = 0;
  std::int64_t total_phases_ = 0;
  std::vector<ReplayEpisode> replay_;
};

}  // namespace flapfoil

#endif  // FLAPFOIL_PPG_HPP_
