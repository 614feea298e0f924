#ifndef FLAPFOIL_REWARD_HPP_
#define FLAPFOIL_REWARD_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "flapfoil/hydro.hpp"

namespace flapfoil {

struct RewardConfig {
  int k = 8;
  double gamma = 0.999;
  // Reward assigned when a window has non-positive expended work.
  double power_floor = 0.0;
  // Efficiencies mapped to 0 and 1 by normalize_performance.
  double norm_lo = 0.04;
  double norm_hi = 0.16;

  void validate() const;
};

// Per-beat energies of one episode. The first `warmup_len` entries are the
// warm-up beats executed during reset; episode step t lives at index
// warmup_len + t.
struct EpisodeLedger {
  std::vector<LedgerEntry> entries;
  std::size_t warmup_len = 0;

  std::size_t steps() const { return entries.size() - warmup_len; }
  const LedgerEntry& step(std::size_t t) const {
    return entries[warmup_len + t];
  }
};

// Efficiency of the k beats ending at episode step t. Windows reaching
// before step 0 are padded with the warm-up prefix, repeated periodically
// (the warm-up is a periodic gait). Throws DegeneratePower when the window
// power sum is <= 0 and std::out_of_range when the window cannot be formed.
double kwindow_reward(const EpisodeLedger& ledger, std::size_t t, int k);

struct WindowReward {
  double value = 0.0;
  bool degenerate = false;
};

// kwindow_reward with the degenerate case mapped to `floor`.
WindowReward kwindow_reward_or_floor(const EpisodeLedger& ledger,
                                     std::size_t t, int k, double floor);

// Discounted sum of every resolvable k-window reward of the episode. With a
// warm-up prefix every step is resolvable; without one the sum starts at
// t = k - 1. Degenerate windows contribute `floor` and are counted.
double cumulative_reward(const EpisodeLedger& ledger, int k, double gamma,
                         double floor = 0.0, int* degenerate = nullptr);

// Total useful work over total expended work of the non-warm-up beats.
double long_term_efficiency(const EpisodeLedger& ledger);

// Affine map sending eta_lo to 0 and eta_hi to 1; not clamped.
double normalize_performance(double eta, double eta_lo = 0.04,
                             double eta_hi = 0.16);

// Coefficient of determination of the least-squares line y ~ a + b x.
// Returns 0 when x has zero spread.
double r_squared(const std::vector<double>& x, const std::vector<double>& y);

struct MismatchRow {
  std::size_t episode_id = 0;
  double cum_reward = 0.0;
  double cum_reward_norm = 0.0;
  double long_term_eta = 0.0;
};

struct MismatchBlock {
  int k = 1;
  std::vector<MismatchRow> rows;
  double r_squared = 0.0;
  bool degenerate = false;  // all cumulative rewards equal
};

struct MismatchTable {
  std::vector<MismatchBlock> blocks;
};

// Per k: undiscounted cumulative reward of every ledger, min-max normalised
// across ledgers, and R^2 of its linear fit against long-term efficiency.
MismatchTable mismatch_analysis(const std::vector<EpisodeLedger>& ledgers,
                                const std::vector<int>& k_list);

void write_mismatch_csv(const MismatchTable& table, const std::string& path);

}  // namespace flapfoil

#endif  // FLAPFOIL_REWARD_HPP_
