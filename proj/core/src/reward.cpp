#include "flapfoil/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "flapfoil/csv.hpp"
#include "flapfoil/errors.hpp"

namespace flapfoil {

void RewardConfig::validate() const {
  if (k < 1) throw ConfigError("reward.k must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw ConfigError("reward.gamma must lie in [0, 1)");
  if (!std::isfinite(power_floor))
    throw ConfigError("reward.power_floor must be finite");
  if (!(norm_hi > norm_lo)) throw ConfigError("reward.norm_hi must exceed norm_lo");
}

namespace {

// Ledger index of the beat `back` beats before episode step t.
const LedgerEntry& window_entry(const EpisodeLedger& ledger, std::size_t t,
                                std::size_t back) {
  const auto abs = static_cast<long long>(ledger.warmup_len + t) -
                   static_cast<long long>(back);
  if (abs >= 0) return ledger.entries[static_cast<std::size_t>(abs)];
  const auto period = static_cast<long long>(ledger.warmup_len);
  if (period == 0) throw std::out_of_range("k-window reaches before step 0");
  const long long idx = ((abs % period) + period) % period;
  return ledger.entries[static_cast<std::size_t>(idx)];
}

struct WindowSums {
  double w = 0.0;
  double p = 0.0;
};

WindowSums window_sums(const EpisodeLedger& ledger, std::size_t t, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (t >= ledger.steps()) throw std::out_of_range("step index past episode end");
  WindowSums s;
  // Oldest first so that k = T reproduces the long-term sums bit for bit.
  for (int back = k - 1; back >= 0; --back) {
    const auto& e = window_entry(ledger, t, static_cast<std::size_t>(back));
    s.w += e.w_useful;
    s.p += e.p_expended;
  }
  return s;
}

}  // namespace

double kwindow_reward(const EpisodeLedger& ledger, std::size_t t, int k) {
  const auto s = window_sums(ledger, t, k);
  if (!(s.p > 0.0))
    throw DegeneratePower("k-window expended work is not positive");
  return s.w / s.p;
}

WindowReward kwindow_reward_or_floor(const EpisodeLedger& ledger,
                                     std::size_t t, int k, double floor) {
  const auto s = window_sums(ledger, t, k);
  if (!(s.p > 0.0)) return {floor, true};
  return {s.w / s.p, false};
}

double cumulative_reward(const EpisodeLedger& ledger, int k, double gamma,
                         double floor, int* degenerate) {
  const std::size_t steps = ledger.steps();
  const std::size_t first =
      ledger.warmup_len > 0 ? 0 : static_cast<std::size_t>(k - 1);
  if (steps < first + 1)
    throw std::out_of_range("cumulative_reward: episode shorter than k");
  double total = 0.0;
  double discount = 1.0;
  int bad = 0;
  for (std::size_t t = first; t < steps; ++t) {
    const auto r = kwindow_reward_or_floor(ledger, t, k, floor);
    bad += r.degenerate ? 1 : 0;
    total += discount * r.value;
    discount *= gamma;
  }
  if (degenerate) *degenerate = bad;
  return total;
}

double long_term_efficiency(const EpisodeLedger& ledger) {
  double w = 0.0;
  double p = 0.0;
  for (std::size_t t = 0; t < ledger.steps(); ++t) {
    w += ledger.step(t).w_useful;
    p += ledger.step(t).p_expended;
  }
  if (!(p > 0.0))
    throw DegeneratePower("long-term efficiency: expended work is not positive");
  return w / p;
}

double normalize_performance(double eta, double eta_lo, double eta_hi) {
  return (eta - eta_lo) / (eta_hi - eta_lo);
}

double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("r_squared needs two equally sized samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
}

MismatchTable mismatch_analysis(const std::vector<EpisodeLedger>& ledgers,
                                const std::vector<int>& k_list) {
  if (ledgers.size() < 2)
    throw std::invalid_argument("mismatch analysis needs at least two episodes");
  std::vector<double> eta;
  eta.reserve(ledgers.size());
  for (const auto& l : ledgers) eta.push_back(long_term_efficiency(l));

  MismatchTable table;
  for (int k : k_list) {
    MismatchBlock block;
    block.k = k;
    std::vector<double> cum;
    for (const auto& l : ledgers) cum.push_back(cumulative_reward(l, k, 1.0));
    const auto [lo, hi] = std::minmax_element(cum.begin(), cum.end());
    const double span = *hi - *lo;
    block.degenerate = !(span > 0.0);
    std::vector<double> norm;
    for (std::size_t i = 0; i < ledgers.size(); ++i) {
      MismatchRow row;
      row.episode_id = i;
      row.cum_reward = cum[i];
      row.cum_reward_norm = block.degenerate ? 0.0 : (cum[i] - *lo) / span;
      row.long_term_eta = eta[i];
      norm.push_back(row.cum_reward_norm);
      block.rows.push_back(row);
    }
    block.r_squared = block.degenerate ? 0.0 : r_squared(norm, eta);
    table.blocks.push_back(std::move(block));
  }
  return table;
}

void write_mismatch_csv(const MismatchTable& table, const std::string& path) {
  CsvWriter csv(path, {"k", "episode_id", "cum_reward", "cum_reward_norm",
                       "long_term_eta", "r_squared", "degenerate"});
  for (const auto& b : table.blocks) {
    for (const auto& r : b.rows) {
      csv.cell(b.k).cell(r.episode_id).cell(r.cum_reward)
          .cell(r.cum_reward_norm).cell(r.long_term_eta).empty().empty();
      csv.end_row();
    }
    csv.cell(b.k).cell("summary").empty().empty().empty().cell(b.r_squared)
        .cell(b.degenerate ? 1 : 0);
    csv.end_row();
  }
}

}  // namespace flapfoil
