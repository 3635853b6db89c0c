#include "cbfnav/flight_control.hpp"

#include <algorithm>
#include <cmath>

namespace cbfnav {

namespace {

constexpr double kTinyNorm = 1e-6;

// rotors cannot push the airframe downward, and the attitude loop cannot be
// asked to invert the body; commanded force stays inside this cone
constexpr double kMinLift = 0.2;   // N
constexpr double kMaxTilt = 0.6;   // rad from vertical

// projection bounds for the adaptive estimates, desk-scale airframe
constexpr double kKappaMax = 2.0;  // N
constexpr double kMassMax = 1.0;   // kg

Vec3 shape_force(const Vec3& tau_p) {
    Vec3 f = tau_p;
    if (f.z > -kMinLift) f.z = -kMinLift;
    double horiz = std::hypot(f.x, f.y);
    double cap = -f.z * std::tan(kMaxTilt);
    if (horiz > cap) {
        f.x *= cap / horiz;
        f.y *= cap / horiz;
    }
    return f;
}

// Horizontal projection of the body X axis, for heading hold. Falls back to
// the base X axis if the body X axis points straight up or down.
Vec3 current_heading(const Rot3& attitude) {
    Vec3 h = attitude * Vec3{1.0, 0.0, 0.0};
    h.z = 0.0;
    double n = h.norm();
    return n > kTinyNorm ? h / n : Vec3{1.0, 0.0, 0.0};
}

Vec3 clamp_components(const Vec3& v, double lim) {
    return {std::clamp(v.x, -lim, lim), std::clamp(v.y, -lim, lim), std::clamp(v.z, -lim, lim)};
}

}  // namespace

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Ascending: return "Ascending";
        case Phase::Approaching: return "Approaching";
        case Phase::Landing: return "Landing";
        case Phase::Touchdown: return "Touchdown";
    }
    return "?";
}

Vec3 nominal_velocity(const PhaseState& phase, const Vec3& p_rel, const Vec3& a_priori_dir,
                      const ControllerGains& gains) {
    switch (phase.mode) {
        case Phase::Ascending:
            return a_priori_dir;
        case Phase::Approaching:
            return gains.k_nominal.cwise_mul(Vec3{0.0, 0.0, -phase.descent.k3} - p_rel);
        case Phase::Landing:
            return gains.k_nominal.cwise_mul(-p_rel);
        case Phase::Touchdown:
            break;
    }
    return {0.0, 0.0, 0.0};
}

PhaseState phase_transition(const PhaseState& phase, const RelativePoseEstimate& target_est,
                            const std::optional<NavState>& target_nav, double yaw_err,
                            const PhaseThresholds& thresholds, double alpha_d, double t) {
    if (!target_est.valid || !target_nav) return phase;

    PhaseState next = phase;
    switch (phase.mode) {
        case Phase::Ascending:
            // first valid target detection arms the descent barrier
            next.mode = Phase::Approaching;
            next.t_transition = t;
            next.descent = derive_descent_params(target_nav->position.z, target_nav->l,
                                                 thresholds.focus_altitude, alpha_d);
            next.have_descent = true;
            break;
        case Phase::Approaching: {
            Vec3 to_focus = target_nav->position - Vec3{0.0, 0.0, -thresholds.focus_altitude};
            if (to_focus.norm() <= thresholds.ball_radius &&
                std::fabs(yaw_err) <= thresholds.yaw_tol) {
                next.mode = Phase::Landing;
                next.t_transition = t;
                // recording a switch radius tighter than the gate ball would
                // sharpen the surface beyond what position noise resolves, so
                // the descent corridor is never derived narrower than the ball
                double l_sw = std::max(target_nav->l,
                                       thresholds.ball_radius * thresholds.ball_radius);
                next.descent = derive_descent_params(target_nav->position.z, l_sw,
                                                     thresholds.landing_altitude, alpha_d);
            }
            break;
        }
        case Phase::Landing:
            if (-target_nav->position.z <= thresholds.landing_altitude + thresholds.touchdown_margin) {
                next.mode = Phase::Touchdown;
                next.t_transition = t;
            }
            break;
        case Phase::Touchdown:
            break;
    }
    return next;
}

std::pair<Vec3, AdaptiveState> adaptive_velocity_control(const Vec3& e, const AdaptiveState& st,
                                                         const ControllerGains& gains, double dt) {
    double en = e.norm();
    double denom = std::max(en, gains.dead_zone);
    Vec3 tau = -gains.k_v.cwise_mul(e) - e * (st.kappa_hat / denom) + kGravity * st.mass_hat;

    AdaptiveState next;
    next.kappa_hat = st.kappa_hat + dt * (en - gains.eta_kappa * st.kappa_hat);
    next.mass_hat = st.mass_hat + dt * (-e.dot(kGravity) - gains.eta_m * st.mass_hat);
    // projection keeps the estimates positive and stops integrator windup
    // while the thrust is saturated
    next.kappa_hat = std::clamp(next.kappa_hat, gains.adapt_floor, kKappaMax);
    next.mass_hat = std::clamp(next.mass_hat, gains.adapt_floor, kMassMax);
    return {tau, next};
}

std::optional<Rot3> desired_rotation(const Vec3& tau_p, const Vec3& x_ref) {
    double n = tau_p.norm();
    if (n <= kTinyNorm) return std::nullopt;
    Vec3 z = tau_p / -n;  // thrust acts along the body -Z axis
    Vec3 y = z.cross(x_ref);
    double ny = y.norm();
    if (ny <= kTinyNorm) return std::nullopt;
    y = y / ny;
    Vec3 x = y.cross(z);
    return Rot3::from_matrix(Mat3::from_columns(x, y, z));
}

Vec3 attitude_pid(const Vec3& eps, const Vec3& eps_dot, const Vec3& integral,
                  const ControllerGains& gains) {
    // eps points along the rotation still to make, so the torque acts with it
    return gains.kp_att.cwise_mul(eps) + gains.kd_att.cwise_mul(eps_dot) +
           gains.ki_att.cwise_mul(integral);
}

Controller::Controller(const ControllerConfig& cfg)
    : cfg_(cfg), vcbf_{cfg.theta_fov, cfg.camera_offset, cfg.alpha_v} {}

ControlWrench Controller::make_wrench(const Vec3& tau_p) const {
    ControlWrench w;
    w.tau_p = tau_p;
    w.tau_q = last_tau_q_;
    w.thrust_body = {0.0, 0.0, -tau_p.norm()};
    return w;
}

OuterOutput Controller::touchdown_output() {
    // open loop: hover feedforward, attitude command held; the harness ramps
    // the motors down on top of this
    Vec3 tau_p = kGravity * adaptive_.mass_hat;
    last_tau_p_ = tau_p;

    OuterOutput out;
    out.wrench = make_wrench(tau_p);
    out.phase = phase_;
    out.adaptive = adaptive_;
    return out;
}

OuterOutput Controller::run_fault_mode(const Measurements& m, double dt) {
    double dur = m.t - fault_entry_t_;
    OuterOutput out;
    out.fault = true;
    out.fault_terminal = dur > cfg_.fault_give_up;

    Vec3 tau_p;
    if (dur <= cfg_.fault_hold) {
        // hold the last attitude command at hover thrust, estimates frozen
        tau_p = shape_force(kGravity * adaptive_.mass_hat);
    } else {
        // climbing widens the camera gates on the base; a target lost above
        // the detection band needs the opposite, a slow sink back into it
        double vz = -cfg_.fault_climb_speed;
        if (phase_.active_frame() == FrameId::Target && have_p_rel_ &&
            -last_p_rel_.z > cfg_.thresholds.focus_altitude + 0.1)
            vz = cfg_.fault_climb_speed;
        Vec3 v_des{0.0, 0.0, vz};
        Vec3 e = m.velocity - v_des;
        auto [tp, next] = adaptive_velocity_control(e, adaptive_, cfg_.gains, dt);
        adaptive_ = next;
        tau_p = shape_force(tp);
        double n = tau_p.norm();
        if (n > cfg_.thrust_ceiling) tau_p *= cfg_.thrust_ceiling / n;
        if (auto rd = desired_rotation(tau_p, current_heading(m.attitude))) r_des_world_ = *rd;
        out.u_nominal = v_des;
        out.u_filtered = v_des;
        out.velocity_error = e;
    }
    last_tau_p_ = tau_p;
    out.wrench = make_wrench(tau_p);
    out.phase = phase_;
    out.adaptive = adaptive_;
    return out;
}

OuterOutput Controller::outer_step(const Measurements& m, double dt) {
    if (!started_) {
        last_seen_active_ = m.t;
        started_ = true;
    }

    if (m.target.valid) {
        anchor_world_target_ = m.attitude * m.target.rotation;
        have_anchor_ = true;
    }
    std::optional<NavState> target_nav;
    if (m.target.valid) target_nav = relative_nav_state(m.target, cfg_.camera_offset);

    double yaw_err = 0.0;
    if (m.target.valid) {
        // body X axis seen in the target frame
        Vec3 xb = m.target.rotation.inverse_rotate({1.0, 0.0, 0.0});
        yaw_err = std::atan2(xb.y, xb.x);
    }

    bool active_valid =
        phase_.active_frame() == FrameId::Base ? m.base.valid : m.target.valid;
    if (active_valid) last_seen_active_ = m.t;

    if (phase_.mode == Phase::Touchdown) return touchdown_output();

    // blind-zone guard: the camera gates the target out just above the pad,
    // so a detection that drops this low means the descent is done
    if (phase_.mode == Phase::Landing && !m.target.valid && have_p_rel_ &&
        -last_p_rel_.z <= cfg_.thresholds.landing_altitude + cfg_.blind_band_margin) {
        phase_.mode = Phase::Touchdown;
        phase_.t_transition = m.t;
        return touchdown_output();
    }

    if (fault_active_ && active_valid) fault_active_ = false;
    if (!fault_active_ && m.t - last_seen_active_ > cfg_.loss_window) {
        fault_active_ = true;
        fault_entry_t_ = m.t;
    }
    if (fault_active_) return run_fault_mode(m, dt);

    Phase before = phase_.mode;
    phase_ = phase_transition(phase_, m.target, target_nav, yaw_err, cfg_.thresholds,
                              cfg_.alpha_d, m.t);
    if (phase_.mode != before) {
        // active frame may have changed; stale relative state must not leak
        last_seen_active_ = m.t;
        frozen_.valid = false;
        have_p_rel_ = false;
        have_smooth_ = false;
        land_trim_ = {};
    }
    if (phase_.mode == Phase::Touchdown) return touchdown_output();

    FrameId active = phase_.active_frame();
    std::optional<NavState> nav;
    if (active == FrameId::Target) {
        nav = target_nav;
    } else if (m.base.valid) {
        nav = relative_nav_state(m.base, cfg_.camera_offset);
    }
    if (nav) {
        if (have_smooth_)
            nav->position = nav_smooth_ + (nav->position - nav_smooth_) * cfg_.nav_blend;
        nav->l = nav->position.x * nav->position.x + nav->position.y * nav->position.y;
        nav_smooth_ = nav->position;
        have_smooth_ = true;
        last_p_rel_ = nav->position;
        have_p_rel_ = true;
    } else {
        have_smooth_ = false;
    }

    Vec3 u_nom{0.0, 0.0, 0.0};
    if (active == FrameId::Base) {
        // a detection gap leaves the lock constraint frozen and stale; riding
        // the a-priori direction into it can cross the boundary unseen, so
        // coast until the base is in view again
        if (m.base.valid) u_nom = nominal_velocity(phase_, {}, cfg_.a_priori_dir, cfg_.gains);
    } else if (have_p_rel_) {
        if (phase_.mode == Phase::Landing && nav) {
            // integrate the aim upwind until the wind hover offset is gone
            land_trim_.x += cfg_.land_trim_rate * dt * nav->position.x;
            land_trim_.y += cfg_.land_trim_rate * dt * nav->position.y;
            land_trim_ = clamp_components(land_trim_, cfg_.land_trim_cap);
        }
        u_nom = nominal_velocity(phase_, last_p_rel_ + land_trim_, cfg_.a_priori_dir, cfg_.gains);
    }

    double h_v = std::numeric_limits<double>::quiet_NaN();
    double h_d = std::numeric_limits<double>::quiet_NaN();
    if (nav) {
        if (active == FrameId::Base) {
            double h = vcbf_value(nav->position, vcbf_);
            // the barrier state is the watched frame relative to the vehicle,
            // so the vehicle's own velocity enters with a sign flip. The
            // enforced boundary sits lock_margin inside the reported one
            frozen_.constraint = build_constraint(h - cfg_.lock_margin,
                                                  -vcbf_gradient(nav->position, vcbf_),
                                                  cfg_.alpha_v);
            frozen_.h = h;
            frozen_.valid = true;
        } else {
            double h = dcbf_value(nav->position, phase_.descent);
            frozen_.constraint = build_constraint(h, dcbf_gradient(nav->position, phase_.descent),
                                                  phase_.descent.alpha);
            frozen_.h = h;
            frozen_.valid = true;
        }
    }
    if (frozen_.valid) {
        if (active == FrameId::Base) h_v = frozen_.h;
        else h_d = frozen_.h;
    }
    // with no lock yet there is nothing to enforce; 0 >= -1 always holds
    HalfspaceConstraint c =
        frozen_.valid ? frozen_.constraint : HalfspaceConstraint{{0.0, 0.0, 0.0}, -1.0};

    FilterResult fr = filter_velocity(u_nom, c, cfg_.box);

    Vec3 v_des_world = active == FrameId::Base ? m.attitude * fr.velocity
                                               : anchor_world_target_ * fr.velocity;
    Vec3 e = m.velocity - v_des_world;
    auto [tau_raw, next_adaptive] = adaptive_velocity_control(e, adaptive_, cfg_.gains, dt);
    adaptive_ = next_adaptive;
    Vec3 tau_p = shape_force(tau_raw);
    double n = tau_p.norm();
    if (n > cfg_.thrust_ceiling) tau_p *= cfg_.thrust_ceiling / n;

    // hold heading while translating; align with the target X axis only once
    // close to the focus point, so the camera keeps the markers in view
    Vec3 x_ref{1.0, 0.0, 0.0};
    if (active == FrameId::Target && have_anchor_) {
        bool align = phase_.mode == Phase::Landing;
        if (!align && have_p_rel_) {
            Vec3 to_focus = last_p_rel_ - Vec3{0.0, 0.0, -phase_.descent.k3};
            align = to_focus.norm() <= cfg_.align_radius;
        }
        x_ref = align ? anchor_world_target_ * Vec3{1.0, 0.0, 0.0} : current_heading(m.attitude);
    }
    if (auto rd = desired_rotation(tau_p, x_ref)) r_des_world_ = *rd;
    last_tau_p_ = tau_p;

    OuterOutput out;
    out.wrench = make_wrench(tau_p);
    out.u_nominal = u_nom;
    out.u_filtered = fr.velocity;
    out.velocity_error = e;
    out.h_v = h_v;
    out.h_d = h_d;
    out.filter_feasible = fr.feasible;
    out.phase = phase_;
    out.adaptive = adaptive_;
    return out;
}

Vec3 Controller::inner_step(const Rot3& attitude, const Vec3& body_rates, double dt) {
    Vec3 eps = vee_error(attitude, r_des_world_);
    integral_ = clamp_components(integral_ + eps * dt, cfg_.gains.integral_limit);
    // d(eps)/dt = -omega to first order near the commanded attitude
    Vec3 tau_q = attitude_pid(eps, -body_rates, integral_, cfg_.gains);
    last_tau_q_ = tau_q;
    return tau_q;
}

}  // namespace cbfnav
