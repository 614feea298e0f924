#ifndef FLAPFOIL_HYDRO_HPP_
#define FLAPFOIL_HYDRO_HPP_

// Quasi-steady surrogate for a pitching foil in uniform flow.
//
// The foil pitches about a pivot located `pivot_frac` chords behind the
// leading edge. Loads are evaluated sample by sample at the 80 Hz acquisition
// rate: a thin-airfoil normal force at the pitch-rate corrected angle of
// attack, a constant parasitic drag, an added-mass pivot torque and a
// first-order wake deficit that carries the history of previous beats.

#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace flapfoil {

using Rng = std::mt19937_64;

inline constexpr double kSampleRate = 80.0;
inline constexpr double kDt = 1.0 / kSampleRate;

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

struct FoilGeometry {
  double chord = 0.2;
  double span = 0.2;
  double pivot_frac = 0.2;

  // Pivot to trailing edge distance.
  double te_arm() const { return (1.0 - pivot_frac) * chord; }
  void validate() const;
};

struct FlowConditions {
  double u_inf = 0.077;
  double rho = 1000.0;
  double nu = 1.14e-6;  // kinematic viscosity of water near 15 C

  double reynolds(const FoilGeometry& geom) const {
    return u_inf * geom.chord / nu;
  }
  void validate() const;
};

// Admissible tail-beat box.
struct ActionBounds {
  double amp_min = deg2rad(7.0);
  double amp_max = deg2rad(20.0);
  double st_min = 0.2;
  double st_max = 0.8;
  double st_tol = 1e-9;
};

struct SurrogateParams {
  double cn_alpha = 2.0 * std::numbers::pi;
  double alpha_stall = deg2rad(90.0);
  double cd0 = 0.95;
  double quarter_arm = 0.11;   // pivot to 3/4 chord
  double moment_arm = 0.01;    // pivot to 1/4 chord
  double c_am = 0.35;
  double kappa_w = 0.05;
  double tau_w = 12.987012987012987;
  double sigma_t = 0.011858;
  double sigma_m = 0.0023716;
  double dt = kDt;
  bool rectify_power = true;

  // Defaults with every length / noise scale derived from the rig.
  static SurrogateParams defaults(const FoilGeometry& geom,
                                  const FlowConditions& flow);
  void validate() const;
};

struct KinematicSample {
  double t = 0.0;
  double theta = 0.0;
  double omega = 0.0;
  double alpha_dd = 0.0;
};

struct LoadSample {
  double t = 0.0;
  double thrust_clean = 0.0;
  double torque_clean = 0.0;
  double thrust_meas = 0.0;
  double torque_meas = 0.0;
};

struct WakeState {
  double u_w = 0.0;
};

struct LedgerEntry {
  double w_useful = 0.0;
  double p_expended = 0.0;
  double duration = 0.0;
  double mean_thrust = 0.0;
};

// One planned half-period beat. Samples sit at tau = i * dt, i < N; the
// end point theta_end is reached at tau = duration and coincides with the
// first sample of the following beat.
struct TailBeat {
  double theta_start = 0.0;
  double theta_end = 0.0;
  double amp = 0.0;
  double freq = 0.0;
  double duration = 0.0;
  std::vector<KinematicSample> samples;

  double angle_at(double tau) const;
  double rate_at(double tau) const;
};

// St = 2 A f / U with A the trailing-edge excursion.
double strouhal_from_excursion(double excursion, double freq, double u_inf);
double strouhal(double amp, double freq, const FlowConditions& flow,
                const FoilGeometry& geom);
double frequency_for_strouhal(double st, double amp, const FlowConditions& flow,
                              const FoilGeometry& geom);

// Half-cosine blend from theta_start to -sign(theta_start) * amp.
TailBeat plan_tailbeat(double theta_start, double amp, double freq,
                       const FoilGeometry& geom, const FlowConditions& flow,
                       const ActionBounds& bounds = {});

struct LoadStep {
  LoadSample load;
  WakeState wake;
};

LoadStep step_loads(const KinematicSample& kin, const WakeState& wake,
                    const SurrogateParams& params, const FlowConditions& flow,
                    const FoilGeometry& geom, Rng& rng);

struct BeatResult {
  std::vector<LoadSample> loads;
  LedgerEntry ledger;
  WakeState wake;
};

BeatResult simulate_beat(std::span<const KinematicSample> traj,
                         const WakeState& wake, const SurrogateParams& params,
                         const FlowConditions& flow, const FoilGeometry& geom,
                         Rng& rng);

// 1/2 rho U^2 s c
double reference_force(const FlowConditions& flow, const FoilGeometry& geom);
double compute_ct(double mean_thrust, const FlowConditions& flow,
                  const FoilGeometry& geom);
double compute_eta(double w, double p);

// Bundle of the three parameter groups, passed around by the environment.
struct FoilModel {
  FoilGeometry geom;
  FlowConditions flow;
  SurrogateParams params = SurrogateParams::defaults(geom, flow);
  ActionBounds bounds;
};

}  // namespace flapfoil

#endif  // FLAPFOIL_HYDRO_HPP_
