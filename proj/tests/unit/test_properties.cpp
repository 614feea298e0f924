// Randomised checks of invariants that must hold for every input.

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "flapfoil/errors.hpp"
#include "flapfoil/mdp.hpp"
#include "flapfoil/reward.hpp"

using namespace flapfoil;

namespace {

constexpr int kTrials = 2000;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

EpisodeLedger random_ledger(Rng& rng, std::size_t steps, std::size_t warmup) {
  EpisodeLedger L;
  for (std::size_t i = 0; i < steps + warmup; ++i)
    L.entries.push_back({uniform(rng, -0.5, 1.0), uniform(rng, 0.1, 3.0), 1.0, 0.0});
  L.warmup_len = warmup;
  return L;
}

}  // namespace

TEST(Property, MappedActionsStayInsideTheBox) {
  const FoilModel m;
  Rng rng(1);
  for (int i = 0; i < kTrials * 10; ++i) {
    const RawAction raw{uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0)};
    const auto a = map_action(raw, m);
    EXPECT_GE(a.amp_rad(), m.bounds.amp_min - 1e-15);
    EXPECT_LE(a.amp_rad(), m.bounds.amp_max + 1e-15);
    const double st = strouhal(a.amp_rad(), a.freq_hz, m.flow, m.geom);
    EXPECT_GE(st, m.bounds.st_min - m.bounds.st_tol);
    EXPECT_LE(st, m.bounds.st_max + m.bounds.st_tol);
  }
}

TEST(Property, ActionMappingInvertsInsideTheBox) {
  const FoilModel m;
  Rng rng(2);
  for (int i = 0; i < kTrials; ++i) {
    const RawAction raw{uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)};
    const auto a = map_action(raw, m);
    const double st = strouhal(a.amp_rad(), a.freq_hz, m.flow, m.geom);
    const auto back = action_to_raw(a.amp_deg, st, m);
    EXPECT_NEAR(back[0], raw[0], 1e-9);
    EXPECT_NEAR(back[1], raw[1], 1e-9);
  }
}

TEST(Property, BeatsAreContinuousAndReachTheirTarget) {
  const FoilModel m;
  Rng rng(3);
  double theta = deg2rad(13.5);
  for (int i = 0; i < kTrials; ++i) {
    const double amp = uniform(rng, m.bounds.amp_min, m.bounds.amp_max);
    const double f0 = frequency_for_strouhal(0.2, amp, m.flow, m.geom);
    const double f1 = frequency_for_strouhal(0.8, amp, m.flow, m.geom);
    const auto beat = plan_tailbeat(theta, amp, uniform(rng, f0, f1), m.geom, m.flow);
    ASSERT_FALSE(beat.samples.empty());
    EXPECT_NEAR(beat.samples.front().theta, theta, 1e-12);
    EXPECT_NEAR(std::abs(beat.theta_end), amp, 1e-12);
    EXPECT_EQ(std::signbit(beat.theta_end), !std::signbit(theta));
    EXPECT_NEAR(beat.angle_at(beat.duration), beat.theta_end, 1e-12);
    for (const auto& s : beat.samples)
      EXPECT_LE(std::abs(s.theta), std::max(std::abs(theta), amp) + 1e-12);
    theta = beat.theta_end;
  }
}

TEST(Property, WakeStaysClampedAndPowerIsNonNegative) {
  const FoilModel m;
  Rng rng(4);
  WakeState wake;
  double theta = -deg2rad(13.5);
  for (int i = 0; i < kTrials; ++i) {
    const double amp = uniform(rng, m.bounds.amp_min, m.bounds.amp_max);
    const double f = frequency_for_strouhal(uniform(rng, 0.2, 0.8), amp, m.flow, m.geom);
    const auto beat = plan_tailbeat(theta, amp, f, m.geom, m.flow);
    const auto res = simulate_beat(beat.samples, wake, m.params, m.flow, m.geom, rng);
    EXPECT_GE(res.wake.u_w, 0.0);
    EXPECT_LE(res.wake.u_w, 0.9 * m.flow.u_inf);
    EXPECT_GE(res.ledger.p_expended, 0.0);  // rectified by default
    EXPECT_NEAR(res.ledger.duration, beat.duration, 1e-12);
    wake = res.wake;
    theta = beat.theta_end;
  }
}

TEST(Property, LedgerMatchesLoggedBeats) {
  const FoilModel m;
  EpisodeConfig cfg;
  cfg.horizon_s = 20.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto rec = rollout_random(m, cfg, RewardConfig{}, seed, 20.0);
    const auto& ep = rec.episodes.front();
    ASSERT_EQ(ep.beats.size(), ep.ledger.steps());
    double w = 0.0, p = 0.0, t = 0.0;
    for (std::size_t i = 0; i < ep.beats.size(); ++i) {
      EXPECT_EQ(ep.beats[i].w_j, ep.ledger.step(i).w_useful);
      EXPECT_EQ(ep.beats[i].p_j, ep.ledger.step(i).p_expended);
      w += ep.beats[i].w_j;
      p += ep.beats[i].p_j;
      t += ep.beats[i].duration_s;
    }
    EXPECT_NEAR(ep.long_term_eta, w / p, 1e-12 * std::abs(w / p));
    EXPECT_GE(t, 20.0);
  }
}

TEST(Property, EfficiencyIsScaleInvariant) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto L = random_ledger(rng, 12, 2);
    const double s = uniform(rng, 0.01, 100.0);
    EpisodeLedger S = L;
    for (auto& e : S.entries) {
      e.w_useful *= s;
      e.p_expended *= s;
    }
    EXPECT_NEAR(long_term_efficiency(S), long_term_efficiency(L),
                1e-12 * (1.0 + std::abs(long_term_efficiency(L))));
    for (int k : {1, 3, 8}) {
      const double a = kwindow_reward(L, 5, k), b = kwindow_reward(S, 5, k);
      EXPECT_NEAR(a, b, 1e-12 * (1.0 + std::abs(a)));
    }
  }
}

TEST(Property, FullWindowEqualsLongTermEfficiency) {
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const auto T = static_cast<std::size_t>(uniform(rng, 1.0, 40.0));
    const auto L = random_ledger(rng, T, 0);
    const double eta = long_term_efficiency(L);
    EXPECT_NEAR(kwindow_reward(L, T - 1, static_cast<int>(T)), eta,
                1e-12 * (1.0 + std::abs(eta)));
  }
}

TEST(Property, NormalisationIsMonotone) {
  Rng rng(7);
  for (int i = 0; i < kTrials; ++i) {
    const double a = uniform(rng, -1.0, 1.0), b = uniform(rng, -1.0, 1.0);
    if (a < b) {
      EXPECT_LT(normalize_performance(a), normalize_performance(b));
    }
    EXPECT_NEAR(normalize_performance(a) * 0.12 + 0.04, a, 1e-12);
  }
}

TEST(Property, HistoryAlternatesAndHasFixedLength) {
  const FoilModel m;
  EpisodeConfig cfg;
  cfg.horizon_s = 15.0;
  FoilEnv env(m, cfg, RewardConfig{});
  Rng rng(8);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    env.reset(seed);
    const auto n = static_cast<std::size_t>(env.n_history());
    while (!env.done()) {
      env.step({uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)});
      const auto& h = env.state().history;
      ASSERT_EQ(h.size(), n);
      for (std::size_t i = 1; i < n; ++i) EXPECT_EQ(h[i].side, -h[i - 1].side);
      EXPECT_EQ(h.back().side, std::signbit(env.state().theta) ? -1.0 : 1.0);
      for (const auto& e : h) {
        EXPECT_LE(std::abs(e.amp), 1.0);
        EXPECT_LE(std::abs(e.freq), 1.0);
      }
    }
    EXPECT_THROW(env.step({0.0, 0.0}), EnvironmentFault);
  }
}
