#include <benchmark/benchmark.h>

#include "flapfoil/config.hpp"
#include "flapfoil/mdp.hpp"
#include "flapfoil/policy.hpp"
#include "flapfoil/ppg.hpp"

namespace {

using namespace flapfoil;

void BM_SurrogateBeat(benchmark::State& state) {
  const FoilModel model;
  const double amp = deg2rad(15.0);
  const double freq = frequency_for_strouhal(0.45, amp, model.flow, model.geom);
  const auto beat = plan_tailbeat(-amp, amp, freq, model.geom, model.flow, model.bounds);
  Rng rng(7);
  WakeState wake;
  for (auto _ : state) {
    auto res = simulate_beat(beat.samples, wake, model.params, model.flow, model.geom, rng);
    benchmark::DoNotOptimize(res.ledger.w_useful);
  }
  state.counters["samples"] = static_cast<double>(beat.samples.size());
}
BENCHMARK(BM_SurrogateBeat);

void BM_EnvStep(benchmark::State& state) {
  FoilEnv env(FoilModel{}, EpisodeConfig{}, RewardConfig{});
  env.reset(3);
  double s = 0.3;
  for (auto _ : state) {
    if (env.done()) env.reset(3);
    s = -s;
    benchmark::DoNotOptimize(env.step({s, 0.1}).reward);
  }
}
BENCHMARK(BM_EnvStep);

void BM_PolicyForward(benchmark::State& state) {
  PolicyNet net;
  net.init(1);
  const auto batch = static_cast<nn::Index>(state.range(0));
  const nn::Index steps = 16;
  const nn::Mat x = nn::Mat::Random(kFeaturesPerBeat, steps * batch);
  for (auto _ : state) {
    auto out = net.forward(x, steps);
    benchmark::DoNotOptimize(out.mean.data());
  }
}
BENCHMARK(BM_PolicyForward)->Arg(1)->Arg(8)->Arg(64);

void BM_PpoUpdate(benchmark::State& state) {
  Hyperparams hp;
  PolicyNet net(hp.policy);
  net.init(2);
  nn::Adam opt(net.params.size(), hp.adam());
  const nn::Index steps = 16;
  const nn::Index batch = state.range(0);
  PolicyBatch b;
  b.x = nn::Mat::Random(kFeaturesPerBeat, steps * batch);
  b.steps = steps;
  b.u = nn::Mat::Random(2, batch);
  const auto out = net.forward(b.x, steps);
  b.logp_old.resize(batch);
  for (nn::Index i = 0; i < batch; ++i)
    b.logp_old(i) = gaussian_log_prob(b.u.col(i).data(), out.mean.col(i).data(),
                                      out.log_std.data(), 2);
  b.adv = nn::Vec::Random(batch);
  for (auto _ : state) {
    auto st = ppo_policy_update(net, opt, b, hp);
    benchmark::DoNotOptimize(st.loss);
  }
}
BENCHMARK(BM_PpoUpdate)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
