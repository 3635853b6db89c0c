#pragma once

// Switched flight controller: phase machine, nominal velocity generator, CBF
// safety filter hookup, adaptive disturbance-rejecting velocity loop, desired
// attitude construction and the inner attitude PID.
//
// Phases advance monotonically:
//   Ascending (visual lock on the base frame, constant lateral input)
//   -> Approaching (descent barrier toward a focus point above the target)
//   -> Landing (re-fitted descent barrier toward the target center)
//   -> Touchdown (motor ramp, no feedback)
// A detection-loss fault overlays the phase without regressing it: hold
// attitude at hover thrust briefly, then climb straight up to re-acquire.

#include <limits>
#include <optional>
#include <utility>

#include "cbfnav/math_core.hpp"
#include "cbfnav/perception_sim.hpp"
#include "cbfnav/safety_filter.hpp"
#include "cbfnav/vehicle_sim.hpp"

namespace cbfnav {

enum class Phase { Ascending, Approaching, Landing, Touchdown };

const char* phase_name(Phase p);

struct PhaseState {
    Phase mode = Phase::Ascending;
    double t_transition = 0.0;
    DescentParams descent;  // meaningful from Approaching on
    bool have_descent = false;

    FrameId active_frame() const {
        return mode == Phase::Ascending ? FrameId::Base : FrameId::Target;
    }
};

struct AdaptiveState {
    double kappa_hat = 0.01;  // disturbance bound estimate
    double mass_hat = 0.1;    // mass estimate, kg
};

struct ControllerGains {
    Vec3 k_nominal{1.2, 1.2, 1.2};  // goal-seeking velocity gain (diagonal)
    // velocity-error gain (diagonal). Vertical: sized so the coupled velocity /
    // mass-estimate loop stays contractive under the 30 Hz Euler update (k_v = 2
    // puts the discrete spectral radius at 1.06 for a 0.3 kg frame). Horizontal:
    // as high as the attitude cascade tolerates (~32 deg phase margin) so the
    // steady wind-induced hover offset stays inside the landing margin.
    Vec3 k_v{3.0, 3.0, 6.0};
    double eta_kappa = 2.5;         // adaptation leakage rates
    double eta_m = 0.5;
    Vec3 kp_att{0.1, 0.1, 0.1};
    Vec3 kd_att{0.03, 0.03, 0.03};
    Vec3 ki_att{0.01, 0.01, 0.01};
    // m/s. Inside the zone the sliding term degrades to a linear gain
    // kappa_hat / dead_zone that stacks on k_v; at cruise kappa_hat (~0.1 N)
    // this keeps the stacked horizontal gain near k_v itself instead of
    // multiplying it several-fold, which rang the attitude cascade.
    double dead_zone = 0.05;
    double adapt_floor = 1e-4;    // lower clamp for both estimates
    double integral_limit = 0.5;  // attitude integral anti-windup, per axis
};

// Geometric gates of the phase machine.
struct PhaseThresholds {
    double focus_altitude = 1.75;    // m, barrier altitude while approaching
    double landing_altitude = 0.35;  // m, barrier altitude while landing
    double ball_radius = 0.1;        // m, focus ball for the landing switch
    double yaw_tol = 0.0872664626;   // rad (5 deg), heading gate for landing
    double touchdown_margin = 0.02;  // m above the landing altitude
};

// Nominal (pre-filter) velocity command in the active frame.
//  Ascending:   1.0 * a_priori_dir (body frame), ||a_priori_dir|| = 1
//  Approaching: K.(p_goal - p_rel) with p_goal = (0, 0, -descent altitude)
//  Landing:     K.(0 - p_rel)
Vec3 nominal_velocity(const PhaseState& phase, const Vec3& p_rel, const Vec3& a_priori_dir,
                      const ControllerGains& gains);

// Pure phase-advance rules. target_nav must be the navigation state of the
// target estimate whenever it is valid. Transitions latch; the returned state
// never regresses. alpha_d parameterizes freshly derived descent barriers.
PhaseState phase_transition(const PhaseState& phase, const RelativePoseEstimate& target_est,
                            const std::optional<NavState>& target_nav, double yaw_err,
                            const PhaseThresholds& thresholds, double alpha_d, double t);

// One Euler update of the adaptive velocity law at the outer rate:
//   tau_p      = -Kv e - kappa_hat * e / max(||e||, dead_zone) + mass_hat * G
//   kappa_hat += dt * (||e|| - eta_kappa * kappa_hat)
//   mass_hat  += dt * (-e.G - eta_m * mass_hat)
// Both estimates are clamped below at adapt_floor.
std::pair<Vec3, AdaptiveState> adaptive_velocity_control(const Vec3& e, const AdaptiveState& st,
                                                         const ControllerGains& gains, double dt);

// Desired attitude from the force command: body Z along -tau_p, heading chosen
// so body X tracks x_ref through Y = Z x X', X = Y x Z. Returns nullopt when
// ||tau_p|| <= 1e-6 or x_ref is parallel to Z within 1e-6; the caller holds
// the previous attitude command then.
std::optional<Rot3> desired_rotation(const Vec3& tau_p, const Vec3& x_ref = {1.0, 0.0, 0.0});

// Inner-loop torque: tau_q = Kp eps + Kd eps_dot + Ki integral. eps follows
// the vee_error convention (rotation still to make), whose rate is -omega.
Vec3 attitude_pid(const Vec3& eps, const Vec3& eps_dot, const Vec3& integral,
                  const ControllerGains& gains);

// Everything the controller consumes on one outer tick. Attitude, body rates
// and velocity come from the inertial side (velocity in the base frame); the
// relative estimates come from the camera.
struct Measurements {
    RelativePoseEstimate base;
    RelativePoseEstimate target;
    Vec3 velocity;
    Rot3 attitude;
    Vec3 body_rates;
    double t = 0.0;
};

struct ControllerConfig {
    ControllerGains gains;
    PhaseThresholds thresholds;
    double theta_fov = 0.872664626;  // rad (50 deg), visual-lock cone opening
    double alpha_v = 5.0;
    double alpha_d = 3.5;
    VelocityBox box;
    Vec3 a_priori_dir{1.0, 0.0, 0.0};
    Vec3 camera_offset{-0.1, 0.0, 0.1};
    double thrust_ceiling = 2.0 * 0.3 * 9.81;  // N
    // detection-loss fault handling; loss of the active frame's detection for
    // loss_window seconds trips the overlay, re-acquisition clears it
    double loss_window = 0.5;         // s
    double fault_hold = 0.5;          // s of attitude hold at hover thrust
    double fault_climb_speed = 0.05;  // m/s straight-up re-acquisition climb
    double fault_give_up = 5.0;       // s of continuous fault before giving up
    double align_radius = 0.3;        // m from focus point to engage heading align
    // fresh-sample weight of the single-pole pose smoother. Raw marker noise
    // reaching the descent surface unfiltered flaps h near touchdown, where the
    // surface is steepest; 0.4 roughly halves the sigma at a ~0.08 s lag
    double nav_blend = 0.4;
    // the velocity the filter certifies is the commanded one; the achieved
    // velocity lags it by the cascade time constant, so the true state can
    // overshoot the lock boundary by ~(closing rate x lag). Enforcing the
    // boundary this far inward absorbs the overshoot while ascending
    double lock_margin = 0.12;
    // steady wind leaves a proportional-only hover offset of F_wind/(k_v K)
    // that eats most of the touchdown error budget; while landing, the aim
    // point integrates upwind at this rate until the offset is gone
    double land_trim_rate = 0.6;  // 1/s
    double land_trim_cap = 0.05;  // m, anti-windup
    // blind-zone touchdown guard: the camera hangs 0.1 m below the body, so the
    // detection band's 0.35 m floor gates the target out at 0.45 m body
    // altitude; the guard must fire at that edge or touchdown never triggers
    double blind_band_margin = 0.12;  // m
};

// Per-tick view of what the outer loop decided, for telemetry.
struct OuterOutput {
    ControlWrench wrench;  // tau_q carries the most recent inner-loop torque
    Vec3 u_nominal;        // active frame
    Vec3 u_filtered;
    Vec3 velocity_error;
    double h_v = std::numeric_limits<double>::quiet_NaN();
    double h_d = std::numeric_limits<double>::quiet_NaN();
    bool filter_feasible = true;
    bool fault = false;
    bool fault_terminal = false;
    PhaseState phase;
    AdaptiveState adaptive;
};

// Stateful composition of the pure pieces above. outer_step runs at the outer
// (perception) rate; inner_step runs at the attitude rate and tracks the
// desired attitude held from the last outer tick.
class Controller {
  public:
    explicit Controller(const ControllerConfig& cfg);

    OuterOutput outer_step(const Measurements& m, double dt);
    Vec3 inner_step(const Rot3& attitude, const Vec3& body_rates, double dt);

    const PhaseState& phase() const { return phase_; }
    const AdaptiveState& adaptive() const { return adaptive_; }
    const ControllerConfig& config() const { return cfg_; }

  private:
    struct FrozenBarrier {
        HalfspaceConstraint constraint;
        double h = 0.0;
        bool valid = false;
    };

    OuterOutput run_fault_mode(const Measurements& m, double dt);
    OuterOutput touchdown_output();
    ControlWrench make_wrench(const Vec3& tau_p) const;

    ControllerConfig cfg_;
    PhaseState phase_;
    AdaptiveState adaptive_;
    VcbfParams vcbf_;
    Vec3 integral_;
    Rot3 r_des_world_;
    Vec3 last_tau_q_;
    Vec3 last_tau_p_;
    Rot3 anchor_world_target_;  // base->target rotation estimate
    bool have_anchor_ = false;
    FrozenBarrier frozen_;  // last constraint, reused through detection gaps
    Vec3 last_p_rel_;       // last relative position in the active frame
    bool have_p_rel_ = false;
    Vec3 nav_smooth_;  // pose smoother state, reset on frame change or gap
    bool have_smooth_ = false;
    Vec3 land_trim_;  // integral aim correction for the wind hover offset
    double last_seen_active_ = 0.0;
    bool started_ = false;
    bool fault_active_ = false;
    double fault_entry_t_ = 0.0;
};

}  // namespace cbfnav
