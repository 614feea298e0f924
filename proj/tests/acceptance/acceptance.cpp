// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance --out DIR [--only 1,5,8]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "../unit/gradcheck.hpp"
#include "flapfoil/errors.hpp"
#include "flapfoil/harness.hpp"
#include "flapfoil/ppg.hpp"
#include "flapfoil/seeding.hpp"

#ifdef FLAPFOIL_WITH_CLI
#include "commands.hpp"
#endif

using namespace flapfoil;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// ---- 1: C_T units ---------------------------------------------------------

Verdict criterion_units() {
  const FoilModel m;
  const auto t0 = Clock::now();
  const double ct = compute_ct(0.118580, m.flow, m.geom);
  const double dt = seconds_since(t0);
  const double hand = 0.118580 / (0.5 * 1000.0 * 0.077 * 0.077 * 0.2 * 0.2);
  const bool ok = std::abs(ct - 1.0) <= 1e-6 && std::abs(ct - hand) <= 1e-12 && dt < 1e-3;
  return {ok, fmt("C_T = %.9f (hand %.9f), %.2e s", ct, hand, dt)};
}

// ---- 2: constraint safety -------------------------------------------------

Verdict criterion_constraints() {
  const FoilModel m;
  EpisodeConfig cfg;
  cfg.horizon_s = 600.0;
  FoilEnv env(m, cfg, RewardConfig{});
  Rng rng(derive_seed(1, kStreamAction, 2));
  std::normal_distribution<double> mean_d(0.0, 2.0);
  std::uniform_real_distribution<double> log_std_d(kLogStdMin, kLogStdMax);
  const auto t0 = Clock::now();
  const int n = 100000;
  int bad = 0;
  double amp_lo = 1e9, amp_hi = -1e9, st_lo = 1e9, st_hi = -1e9;
  env.reset(1);
  for (int i = 0; i < n; ++i) {
    if (env.done()) env.reset(static_cast<std::uint64_t>(i));
    const double mu[2] = {mean_d(rng), mean_d(rng)};
    const double ls[2] = {log_std_d(rng), log_std_d(rng)};
    const auto a = sample_action(mu, ls, rng);
    const auto r = env.step(a.raw);
    const double amp = r.action.amp_deg;
    const double st = strouhal(r.action.amp_rad(), r.action.freq_hz, m.flow, m.geom);
    amp_lo = std::min(amp_lo, amp);
    amp_hi = std::max(amp_hi, amp);
    st_lo = std::min(st_lo, st);
    st_hi = std::max(st_hi, st);
    if (!(amp >= 7.0 - 1e-12 && amp <= 20.0 + 1e-12 && st >= 0.2 - 1e-9 && st <= 0.8 + 1e-9))
      ++bad;
  }
  const double dt = seconds_since(t0);
  return {bad == 0 && dt < 10.0,
          fmt("%d/%d beats outside; amp [%.4f, %.4f] deg, St [%.6f, %.6f], %.1f s", bad, n,
              amp_lo, amp_hi, st_lo, st_hi, dt)};
}

// ---- 3: reward mismatch ---------------------------------------------------

Verdict criterion_mismatch() {
  auto cfg = parse_run_config("{}", "<defaults>");
  cfg.mismatch.episodes = 10;
  cfg.mismatch.duration_s = 60.0;
  cfg.mismatch.k_list = {1, 8, 16};
  const auto t0 = Clock::now();
  std::vector<double> r1, r8, r16;
  int ordered = 0;
  for (int e = 0; e < 20; ++e) {
    const auto t = run_mismatch(cfg, derive_seed(cfg.master_seed, kStreamMismatch,
                                                 1000 + static_cast<std::uint64_t>(e)));
    r1.push_back(t.blocks[0].r_squared);
    r8.push_back(t.blocks[1].r_squared);
    r16.push_back(t.blocks[2].r_squared);
    if (r1.back() < r8.back() && r8.back() <= r16.back()) ++ordered;
  }
  const double dt = seconds_since(t0);
  const double m1 = mean(r1), m8 = mean(r8), m16 = mean(r16);
  const bool ok = m1 + 0.05 <= m8 && m8 <= m16 + 0.02 && m16 >= m8 - 0.02 && ordered >= 16 &&
                  dt < 300.0;
  return {ok, fmt("mean R2 k1 %.3f k8 %.3f k16 %.3f, ordered in %d/20, %.1f s", m1, m8, m16,
                  ordered, dt)};
}

// ---- 4: k sweep -----------------------------------------------------------

struct KSweep {
  bool ran = false;
  fs::path dir;
};

Verdict criterion_ksweep(const fs::path& out, KSweep& ks) {
  auto cfg = parse_run_config("{}", "<defaults>");
  cfg.suite.k_values = {1, 8, 16};
  cfg.suite.seeds = 3;
  cfg.suite.episodes = 300;
  cfg.suite.workers = 1;
  ks.dir = out / "ksweep";
  fs::remove_all(ks.dir);
  const auto t0 = Clock::now();
  const auto res = run_training_suite(cfg, ks.dir.string(), [](const std::string& m) {
    std::fprintf(stderr, "  [4] %s\n", m.c_str());
  });
  const double dt = seconds_since(t0);
  ks.ran = res.succeeded() == res.plans.size();
  if (!ks.ran) return {false, "some training runs failed"};

  std::vector<double> eta1, eta8, eta16;
  bool contraction = true, gait = true;
  std::ostringstream extra;
  const auto model = cfg.model();
  for (std::size_t i = 0; i < res.plans.size(); ++i) {
    const auto& rec = res.records[i];
    const int k = res.plans[i].k;
    double s = 0.0;
    for (std::size_t e = rec.episodes.size() - 50; e < rec.episodes.size(); ++e)
      s += rec.episodes[e].long_term_eta;
    (k == 1 ? eta1 : k == 8 ? eta8 : eta16).push_back(s / 50.0);
    const auto g = final_gait_summary({rec}, model);
    const double st = g.empty() ? std::numeric_limits<double>::quiet_NaN() : g[0].st;
    if (!(st >= 0.3 && st <= 0.6)) gait = false;
    extra << " " << rec.run_id << ":St=" << fmt("%.3f", st);
    if (k == 8) {
      const auto chunks = learning_path_stats(rec, 50);
      const auto& a = chunks.front();
      const auto& b = chunks.back();
      const double ra = b.amp_deg.iqr() / a.amp_deg.iqr();
      const double rf = b.freq_hz.iqr() / a.freq_hz.iqr();
      if (!(ra <= 0.5 && rf <= 0.5)) contraction = false;
      extra << fmt(",iqr_ratio(amp %.2f freq %.2f)", ra, rf);
    }
  }
  const double m1 = mean(eta1), m8 = mean(eta8), m16 = mean(eta16);
  const bool order = m8 >= m1 && m8 >= m16;
  const bool ok = order && contraction && gait && dt <= 4.0 * 3600.0;
  return {ok, fmt("final-50 eta k1 %.4f k8 %.4f k16 %.4f (order %s, contraction %s, gait %s), "
                  "%.0f s;",
                  m1, m8, m16, order ? "ok" : "no", contraction ? "ok" : "no",
                  gait ? "ok" : "no", dt) +
                  extra.str()};
}

// ---- 5: gradients ---------------------------------------------------------

Verdict criterion_gradients() {
  using flapfoil::testing::max_relative_error;
  using flapfoil::testing::random_mat;
  using flapfoil::testing::randomize;
  const auto t0 = Clock::now();
  Hyperparams hp;
  hp.policy.lstm = 3;
  hp.policy.trunk = 4;
  hp.value.lstm = 3;
  hp.value.trunk = 4;

  PolicyNet pnet(hp.policy);
  pnet.init(1);
  randomize(pnet.params.values, 2, 0.4);
  pnet.params.value(pnet.log_std_block()).setConstant(-0.3);
  PolicyBatch pb;
  pb.steps = 4;
  pb.x = random_mat(kFeaturesPerBeat, 4 * 6, 3);
  const auto out = pnet.forward(pb.x, pb.steps);
  pb.u = out.mean + random_mat(2, 6, 4, 0.5);
  pb.logp_old.resize(6);
  const nn::Mat jitter = random_mat(1, 6, 5, 0.02);
  for (nn::Index i = 0; i < 6; ++i)
    pb.logp_old(i) = gaussian_log_prob(pb.u.col(i).data(), out.mean.col(i).data(),
                                       out.log_std.data(), 2) +
                     jitter(0, i);
  pb.adv = random_mat(6, 1, 6).col(0);
  policy_loss_grad(pnet, pb, hp.clip_eps);
  const double e_pol = max_relative_error(pnet.params.values, nn::Vec(pnet.params.grads),
                                          [&] { return policy_loss_grad(pnet, pb, hp.clip_eps); });

  ValueNet vnet(hp.value);
  vnet.init(7);
  randomize(vnet.params.values, 8, 0.4);
  const nn::Mat vx = random_mat(kFeaturesPerBeat, 5 * 4, 9);
  const nn::Vec ret = random_mat(4, 1, 10).col(0);
  value_loss_grad(vnet, vx, 5, ret);
  const double e_val = max_relative_error(vnet.params.values, nn::Vec(vnet.params.grads),
                                          [&] { return value_loss_grad(vnet, vx, 5, ret); });

  AuxBatch ab;
  ab.steps = 4;
  ab.x = random_mat(kFeaturesPerBeat, 4 * 5, 11);
  ab.returns = random_mat(5, 1, 12).col(0);
  ab.mean_old = random_mat(2, 5, 13, 0.3);
  ab.log_std_old = nn::Vec::Constant(2, -0.6);
  aux_loss_grad(pnet, ab, hp.beta_clone);
  const double e_aux = max_relative_error(pnet.params.values, nn::Vec(pnet.params.grads),
                                          [&] { return aux_loss_grad(pnet, ab, hp.beta_clone); });
  const double dt = seconds_since(t0);
  const bool ok = e_pol < 1e-4 && e_val < 1e-4 && e_aux < 1e-4 && dt < 60.0;
  return {ok, fmt("max rel err policy %.2e value %.2e aux %.2e, %.2f s", e_pol, e_val, e_aux,
                  dt)};
}

// ---- 6: exact identities --------------------------------------------------

Verdict criterion_identities() {
  Rng rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double e_gae = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> r(60), v(60);
    for (auto& x : r) x = u(rng);
    for (auto& x : v) x = u(rng);
    const auto res = gae(r, v, 0.999, 1.0);
    double g = 0.0;
    for (std::size_t t = r.size(); t-- > 0;) {
      g = r[t] + 0.999 * g;
      e_gae = std::max(e_gae, std::abs(res.advantages[t] - (g - v[t])));
    }
  }

  const FoilModel m;
  EpisodeConfig env;
  double e_kw = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto rec = rollout_random(m, env, RewardConfig{}, seed, 60.0);
    const auto& L = rec.episodes.front().ledger;
    const double eta = long_term_efficiency(L);
    e_kw = std::max(e_kw, std::abs(kwindow_reward(L, L.steps() - 1,
                                                  static_cast<int>(L.steps())) - eta));
  }

  auto cfg = parse_run_config("{}", "<defaults>");
  cfg.sweep.repeats = 1;
  const auto pts = run_sinusoidal_sweep(cfg);
  EpisodeConfig senv = cfg.env;
  senv.horizon_s = cfg.sweep.duration_s;
  RewardConfig reward = cfg.reward;
  reward.k = 1;
  double e_sw = 0.0;
  for (std::size_t p = 0; p < pts.size(); ++p) {
    const auto log = rollout_constant(cfg.model(), senv, reward,
                                      sweep_seed(cfg.master_seed, p, 0),
                                      action_to_raw(pts[p].amp_deg, pts[p].st, cfg.model()));
    e_sw = std::max(e_sw, std::abs(pts[p].eta_mean - log.long_term_eta));
  }
  const bool ok = e_gae <= 1e-12 && e_kw <= 1e-12 && e_sw <= 1e-12;
  return {ok, fmt("max |diff| GAE %.1e, k-window %.1e, sweep %.1e over %zu points", e_gae, e_kw,
                  e_sw, pts.size())};
}

// ---- 7: calibration -------------------------------------------------------

Verdict criterion_calibration(const fs::path& out) {
  auto cfg = parse_run_config("{}", "<defaults>");
  cfg.surrogate.sigma_t = 0.0;
  cfg.surrogate.sigma_m = 0.0;
  cfg.sweep.repeats = 1;
  const auto t0 = Clock::now();
  const auto pts = run_sinusoidal_sweep(cfg);
  const double dt = seconds_since(t0);
  write_sweep_csv(pts, (out / "calibration_sweep.csv").string());
  const SweepPoint* best = nullptr;
  int bad = 0;
  for (const auto& p : pts) {
    if (!best || p.eta_mean > best->eta_mean) best = &p;
    if (p.ct_mean > 0.0 && !(p.eta_mean > 0.0 && p.eta_mean < 1.0)) ++bad;
  }
  const bool ok = best->st >= 0.3 && best->st <= 0.6 && best->eta_mean >= 0.08 &&
                  best->eta_mean <= 0.25 && bad == 0 && dt < 300.0;
  return {ok, fmt("peak eta %.4f at %.0f deg / St %.2f, %d thrust points outside (0, 1), %.1f s",
                  best->eta_mean, best->amp_deg, best->st, bad, dt)};
}

// ---- 8: determinism -------------------------------------------------------

// Runs a command line; through the CLI when it is built, else the library.
int command(const std::vector<std::string>& args, std::string& output) {
#ifdef FLAPFOIL_WITH_CLI
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  output = out.str() + err.str();
  return code;
#else
  (void)args;
  output = "command line tool not built";
  return 1;
#endif
}

Verdict criterion_determinism(const fs::path& out, const KSweep& ks) {
  std::string log;
  bool ok = true;
  std::ostringstream detail;
  const fs::path a = out / "det_a", b = out / "det_b";
  for (const auto& d : {a, b}) {
    fs::remove_all(d);
    for (const char* cmd : {"mismatch", "sweep"}) {
      if (command({cmd, "--seed", "1", "--workers", "1", "-o", d.string()}, log) != 0) {
        return {false, std::string(cmd) + " failed: " + log};
      }
    }
  }
  for (const char* f : {"mismatch.csv", "sweep.csv"}) {
    const bool same = slurp(a / f) == slurp(b / f) && !slurp(a / f).empty();
    ok &= same;
    detail << f << (same ? " identical" : " DIFFERS") << "; ";
  }

  // Replay episodes of a logged training run.
  fs::path run_dir;
  std::vector<std::size_t> episodes;
  if (ks.ran) {
    run_dir = ks.dir / "runs" / "k8_seed0";
    episodes = {0, 1, 49, 50, 173, 299};
  } else {
    const fs::path dir = out / "det_train";
    fs::remove_all(dir);
    if (command({"train", "--seeds", "1", "--episodes", "20", "--k", "8", "--set",
                 "suite.checkpoint_every=8", "-o", dir.string()},
                log) != 0)
      return {false, "train failed: " + log};
    run_dir = dir / "runs" / "k8_seed0";
    episodes = {0, 7, 8, 13, 19};
  }
  int matched = 0;
  for (std::size_t e : episodes) {
    const int code = command({"replay", run_dir.string(), "-e", std::to_string(e)}, log);
    if (code == 0 && log.rfind("MATCH", 0) == 0) ++matched;
  }
  ok &= matched == static_cast<int>(episodes.size());
  detail << "replay " << matched << "/" << episodes.size() << " episodes bit-exact";
  return {ok, detail.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string out = "acceptance_out";
  std::vector<int> only;
  app.add_option("--out", out, "Scratch directory");
  app.add_option("--only", only, "Subset of criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(out);
  const std::set<int> pick(only.begin(), only.end());
  auto want = [&](int c) { return pick.empty() || pick.count(c) > 0; };

  KSweep ks;
  const std::vector<std::pair<int, std::function<Verdict()>>> criteria = {
      {1, [] { return criterion_units(); }},
      {2, [] { return criterion_constraints(); }},
      {3, [] { return criterion_mismatch(); }},
      {4, [&] { return criterion_ksweep(out, ks); }},
      {5, [] { return criterion_gradients(); }},
      {6, [] { return criterion_identities(); }},
      {7, [&] { return criterion_calibration(out); }},
      {8, [&] { return criterion_determinism(out, ks); }},
  };
  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    if (!want(id)) continue;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("[%s] criterion %d: %s\n", v.pass ? "PASS" : "FAIL", id, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
