#include "flapfoil/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "flapfoil/errors.hpp"

namespace flapfoil {

namespace {

constexpr double kPi = std::numbers::pi;

bool finite(double x) { return std::isfinite(x); }

double signum(double x) { return x > 0.0 ? 1.0 : -1.0; }

}  // namespace

void FoilGeometry::validate() const {
  if (!(chord > 0.0) || !(span > 0.0))
    throw ConfigError("foil chord and span must be positive");
  if (!(pivot_frac > 0.0 && pivot_frac < 1.0))
    throw ConfigError("pivot_frac must lie in (0, 1)");
}

void FlowConditions::validate() const {
  if (!(u_inf > 0.0)) throw ConfigError("u_inf must be positive");
  if (!(rho > 0.0)) throw ConfigError("rho must be positive");
  if (!(nu > 0.0)) throw ConfigError("nu must be positive");
}

SurrogateParams SurrogateParams::defaults(const FoilGeometry& geom,
                                          const FlowConditions& flow) {
  SurrogateParams p;
  const double qsc = reference_force(flow, geom);
  p.quarter_arm = (0.75 - geom.pivot_frac) * geom.chord;
  p.moment_arm = (0.25 - geom.pivot_frac) * geom.chord;
  p.tau_w = 5.0 * geom.chord / flow.u_inf;
  p.sigma_t = 0.1 * qsc;
  p.sigma_m = 0.1 * qsc * geom.chord;
  return p;
}

void SurrogateParams::validate() const {
  const double positive[] = {cn_alpha, alpha_stall, cd0,     quarter_arm,
                             moment_arm, c_am,      kappa_w, tau_w,
                             sigma_t,  sigma_m};
  const char* names[] = {"cn_alpha", "alpha_stall", "cd0",     "quarter_arm",
                         "moment_arm", "c_am",      "kappa_w", "tau_w",
                         "sigma_t",  "sigma_m"};
  for (std::size_t i = 0; i < std::size(positive); ++i) {
    // Noise levels and wake gain may be switched off.
    const bool may_be_zero = i >= 6 && i != 7;
    if (!finite(positive[i]) || positive[i] < 0.0 ||
        (!may_be_zero && positive[i] == 0.0)) {
      throw ConfigError(std::string("surrogate.") + names[i] +
                        " must be positive");
    }
  }
  if (dt != kDt) throw ConfigError("surrogate.dt is fixed at 1/80 s");
}

double TailBeat::angle_at(double tau) const {
  const double mid = 0.5 * (theta_start + theta_end);
  const double half = 0.5 * (theta_start - theta_end);
  return mid + half * std::cos(kPi * tau / duration);
}

double TailBeat::rate_at(double tau) const {
  const double half = 0.5 * (theta_start - theta_end);
  return -half * (kPi / duration) * std::sin(kPi * tau / duration);
}

double strouhal_from_excursion(double excursion, double freq, double u_inf) {
  return 2.0 * excursion * freq / u_inf;
}

double strouhal(double amp, double freq, const FlowConditions& flow,
                const FoilGeometry& geom) {
  if (!(amp > 0.0) || !(freq > 0.0))
    throw ConstraintViolation("strouhal: amplitude and frequency must be > 0");
  return strouhal_from_excursion(geom.te_arm() * std::sin(amp), freq,
                                 flow.u_inf);
}

double frequency_for_strouhal(double st, double amp, const FlowConditions& flow,
                              const FoilGeometry& geom) {
  return st * flow.u_inf / (2.0 * geom.te_arm() * std::sin(amp));
}

TailBeat plan_tailbeat(double theta_start, double amp, double freq,
                       const FoilGeometry& geom, const FlowConditions& flow,
                       const ActionBounds& bounds) {
  if (!finite(theta_start) || !finite(amp) || !finite(freq))
    throw NumericError("plan_tailbeat: non-finite input");
  if (theta_start == 0.0)
    throw DegenerateStart("plan_tailbeat: beats start from an extreme, got 0");
  if (amp < bounds.amp_min || amp > bounds.amp_max) {
    std::ostringstream os;
    os << "plan_tailbeat: amplitude " << rad2deg(amp)
       << " deg outside [" << rad2deg(bounds.amp_min) << ", "
       << rad2deg(bounds.amp_max) << "]";
    throw ConstraintViolation(os.str());
  }
  if (!(freq > 0.0)) throw ConstraintViolation("plan_tailbeat: freq <= 0");
  const double st = strouhal(amp, freq, flow, geom);
  if (st < bounds.st_min - bounds.st_tol || st > bounds.st_max + bounds.st_tol) {
    std::ostringstream os;
    os << "plan_tailbeat: Strouhal number " << st << " outside ["
       << bounds.st_min << ", " << bounds.st_max << "]";
    throw ConstraintViolation(os.str());
  }

  TailBeat beat;
  beat.theta_start = theta_start;
  beat.theta_end = -signum(theta_start) * amp;
  beat.amp = amp;
  beat.freq = freq;

  // The servo runs at the acquisition rate, so the beat lasts a whole
  // number of samples.
  const double nominal = 1.0 / (2.0 * freq);
  const auto n = std::max<long>(1, std::lround(nominal / kDt));
  beat.duration = static_cast<double>(n) * kDt;

  const double mid = 0.5 * (beat.theta_start + beat.theta_end);
  const double half = 0.5 * (beat.theta_start - beat.theta_end);
  const double rate = kPi / beat.duration;
  beat.samples.resize(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double tau = static_cast<double>(i) * kDt;
    const double c = std::cos(rate * tau);
    const double s = std::sin(rate * tau);
    auto& k = beat.samples[static_cast<std::size_t>(i)];
    k.t = tau;
    k.theta = mid + half * c;
    k.omega = -half * rate * s;
    k.alpha_dd = -half * rate * rate * c;
  }
  return beat;
}

LoadStep step_loads(const KinematicSample& kin, const WakeState& wake,
                    const SurrogateParams& p, const FlowConditions& flow,
                    const FoilGeometry& geom, Rng& rng) {
  if (!finite(kin.theta) || !finite(kin.omega) || !finite(kin.alpha_dd) ||
      !finite(wake.u_w)) {
    throw NumericError("step_loads: non-finite kinematics or wake state");
  }
  const double area = geom.span * geom.chord;
  const double u_rel = flow.u_inf - wake.u_w;
  const double q = 0.5 * flow.rho * u_rel * u_rel;

  const double alpha = kin.theta - std::atan(p.quarter_arm * kin.omega / u_rel);
  const double ratio = alpha / p.alpha_stall;
  const double r2 = ratio * ratio;
  const double cn = p.cn_alpha * std::sin(alpha) * std::cos(alpha) / (1.0 + r2 * r2);
  const double f_n = q * area * cn;

  LoadStep out;
  out.load.t = kin.t;
  // Normal force tilted by the pitch-rate inflow angle (alpha - theta).
  out.load.thrust_clean = f_n * std::sin(alpha - kin.theta) - q * area * p.cd0;
  out.load.torque_clean =
      -f_n * p.moment_arm -
      p.c_am * flow.rho * geom.span * std::pow(geom.chord, 4) * kin.alpha_dd;

  std::normal_distribution<double> thrust_noise(0.0, 1.0);
  const double z_t = thrust_noise(rng);
  std::normal_distribution<double> torque_noise(0.0, 1.0);
  const double z_m = torque_noise(rng);
  out.load.thrust_meas = out.load.thrust_clean + p.sigma_t * z_t;
  out.load.torque_meas = out.load.torque_clean + p.sigma_m * z_m;

  const double te_speed = geom.te_arm() * std::abs(kin.omega);
  const double forcing = p.kappa_w * te_speed * te_speed / flow.u_inf;
  double u_w = wake.u_w + p.dt * (forcing - wake.u_w) / p.tau_w;
  out.wake.u_w = std::clamp(u_w, 0.0, 0.9 * flow.u_inf);

  if (!finite(out.load.thrust_meas) || !finite(out.load.torque_meas))
    throw NumericError("step_loads: non-finite load");
  return out;
}

BeatResult simulate_beat(std::span<const KinematicSample> traj,
                         const WakeState& wake, const SurrogateParams& params,
                         const FlowConditions& flow, const FoilGeometry& geom,
                         Rng& rng) {
  if (traj.empty()) throw NumericError("simulate_beat: empty trajectory");
  BeatResult out;
  out.loads.reserve(traj.size());
  out.wake = wake;
  double thrust_sum = 0.0;
  double work_in = 0.0;
  for (const auto& kin : traj) {
    auto step = step_loads(kin, out.wake, params, flow, geom, rng);
    thrust_sum += step.load.thrust_meas;
    double dp = step.load.torque_meas * kin.omega * params.dt;
    if (params.rectify_power) dp = std::max(dp, 0.0);
    work_in += dp;
    out.wake = step.wake;
    out.loads.push_back(step.load);
  }
  auto& e = out.ledger;
  e.duration = static_cast<double>(traj.size()) * params.dt;
  e.mean_thrust = thrust_sum / static_cast<double>(traj.size());
  e.w_useful = e.mean_thrust * flow.u_inf * e.duration;
  e.p_expended = work_in;
  return out;
}

double reference_force(const FlowConditions& flow, const FoilGeometry& geom) {
  return 0.5 * flow.rho * flow.u_inf * flow.u_inf * geom.span * geom.chord;
}

double compute_ct(double mean_thrust, const FlowConditions& flow,
                  const FoilGeometry& geom) {
  return mean_thrust / reference_force(flow, geom);
}

double compute_eta(double w, double p) {
  if (!(p > 0.0)) throw DegeneratePower("compute_eta: expended work <= 0");
  return w / p;
}

}  // namespace flapfoil
