#pragma once

// Rigid-body quadrotor dynamics with wind drag, integrated with RK4. The
// attitude is integrated on the rotation manifold: each step works in the
// exponential chart at the current attitude, so orthonormality is preserved
// structurally and only polished against roundoff.
//
// World frame is down-Z: gravity is stored as G = (0,0,-9.81) and the
// translational dynamics are  m*a = tau_p - m*G - d_p,  so free fall
// accelerates toward +z and hover requires tau_p = m*G.

#include "cbfnav/math_core.hpp"

namespace cbfnav {

inline constexpr Vec3 kGravity{0.0, 0.0, -9.81};

struct VehicleParams {
    double mass = 0.3;                               // kg
    Mat3 inertia = Mat3::diag(4e-4, 4e-4, 7e-4);     // kg m^2, body frame
    double drag_coeff = 0.01;                        // N s/m, wind drag
};

struct VehicleState {
    Vec3 position;   // world
    Vec3 velocity;   // world
    Rot3 attitude;   // body -> world
    Vec3 body_rates; // body frame
    double t = 0.0;

    bool finite() const {
        return position.finite() && velocity.finite() && attitude.finite() &&
               body_rates.finite() && std::isfinite(t);
    }
};

// Sinusoidal gusting wind around a constant mean; the gust phase is drawn from
// the seed so distinct seeds shift the gust pattern deterministically.
struct WindModel {
    Vec3 mean;                 // m/s, world frame
    Vec3 gust_amplitude;       // m/s
    double gust_freq_hz = 0.0;
    unsigned long long seed = 0;
    Vec3 torque_disturbance;   // constant body torque bias, N m (default none)

    Vec3 velocity_at(double t) const;
};

// Commanded wrench for one control interval. tau_p is the translational force
// command expressed in the frame the controller is working in (kept for
// telemetry); thrust_body is what the airframe can actually produce:
// (0, 0, -||tau_p||), thrust opposing body +Z, already ceiling-saturated.
struct ControlWrench {
    Vec3 tau_p;
    Vec3 tau_q;        // body torque, N m
    Vec3 thrust_body;  // body frame force, N
};

// Drag force from the wind field: d_p = -c_d * (v_wind(t) - v), world frame.
// The dynamics subtract d_p, so a tailwind pushes the vehicle along the wind.
Vec3 wind_force(const WindModel& wind, const Vec3& velocity, double t, double drag_coeff);

// One RK4 step of duration dt (0 < dt <= 0.01). Wind is sampled at the stage
// times, the attitude advances through the exponential chart (stage rates are
// pulled back with the inverse differential of exp, truncated at the second
// commutator, which preserves RK4's order), and the result is re-orthonormalized.
// Throws IntegrationFault on non-finite input or output, std::invalid_argument
// on a dt outside (0, 0.01].
VehicleState step(const VehicleState& state, const ControlWrench& wrench,
                  const WindModel& wind, const VehicleParams& params, double dt);

// Touchdown motor ramp: returns the thrust scale after dt of ramping toward
// zero over ramp_time. Input and output are clamped to [0, 1].
double touchdown_ramp(double scale, double dt, double ramp_time);

}  // namespace cbfnav
