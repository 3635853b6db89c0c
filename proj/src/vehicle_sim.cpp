#include "cbfnav/vehicle_sim.hpp"

#include <cmath>

namespace cbfnav {

namespace {

// splitmix64; used here only to turn a seed into a gust phase
unsigned long long mix64(unsigned long long x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

constexpr double kTwoPi = 6.283185307179586;

struct Derivative {
    Vec3 dp;      // velocity
    Vec3 dv;      // acceleration
    Vec3 dtheta;  // chart rate (rotation vector at the step's base attitude)
    Vec3 domega;  // angular acceleration, body frame
};

// dexp^{-1}_theta(omega) truncated at the second commutator; exact enough to
// keep the integrator fourth order for |theta| = O(dt).
Vec3 dexpinv(const Vec3& theta, const Vec3& omega) {
    const Vec3 c1 = theta.cross(omega);
    const Vec3 c2 = theta.cross(c1);
    return omega + c1 * 0.5 + c2 * (1.0 / 12.0);
}

}  // namespace

Vec3 WindModel::velocity_at(double t) const {
    if (gust_amplitude.squared_norm() == 0.0 || gust_freq_hz == 0.0) {
        return mean;
    }
    const double phase = kTwoPi * (mix64(seed ^ 0x77696e64ull) >> 11) * 0x1.0p-53;
    const double s = std::sin(kTwoPi * gust_freq_hz * t + phase);
    return mean + gust_amplitude * s;
}

Vec3 wind_force(const WindModel& wind, const Vec3& velocity, double t, double drag_coeff) {
    return (wind.velocity_at(t) - velocity) * -drag_coeff;
}

VehicleState step(const VehicleState& state, const ControlWrench& wrench,
                  const WindModel& wind, const VehicleParams& params, double dt) {
    if (!(dt > 0.0) || dt > 0.01) {
        throw std::invalid_argument("vehicle step: dt must be in (0, 0.01]");
    }
    if (!state.finite() || !wrench.tau_q.finite() || !wrench.thrust_body.finite()) {
        throw IntegrationFault("vehicle step: non-finite input");
    }

    const double inv_m = 1.0 / params.mass;
    const Vec3 j_diag{params.inertia.m[0][0], params.inertia.m[1][1], params.inertia.m[2][2]};
    const Vec3 inv_j{1.0 / j_diag.x, 1.0 / j_diag.y, 1.0 / j_diag.z};

    // state in the chart: (p, v, theta, omega) with R = R0 * exp(theta)
    auto eval = [&](const Vec3& p, const Vec3& v, const Vec3& theta, const Vec3& omega,
                    double t_abs) -> Derivative {
        (void)p;
        Derivative d;
        d.dp = v;
        const Rot3 r = state.attitude * Rot3::exp(theta);
        const Vec3 tau_world = r * wrench.thrust_body;
        const Vec3 d_p = wind_force(wind, v, t_abs, params.drag_coeff);
        d.dv = (tau_world - kGravity * params.mass - d_p) * inv_m;
        d.dtheta = dexpinv(theta, omega);
        const Vec3 j_omega = j_diag.cwise_mul(omega);
        const Vec3 torque = wrench.tau_q - omega.cross(j_omega) + wind.torque_disturbance;
        d.domega = inv_j.cwise_mul(torque);
        return d;
    };

    const Vec3 p0 = state.position, v0 = state.velocity, w0 = state.body_rates;
    const Vec3 th0{0.0, 0.0, 0.0};

    const Derivative k1 = eval(p0, v0, th0, w0, state.t);
    const Derivative k2 = eval(p0 + k1.dp * (dt / 2), v0 + k1.dv * (dt / 2),
                               th0 + k1.dtheta * (dt / 2), w0 + k1.domega * (dt / 2),
                               state.t + dt / 2);
    const Derivative k3 = eval(p0 + k2.dp * (dt / 2), v0 + k2.dv * (dt / 2),
                               th0 + k2.dtheta * (dt / 2), w0 + k2.domega * (dt / 2),
                               state.t + dt / 2);
    const Derivative k4 = eval(p0 + k3.dp * dt, v0 + k3.dv * dt, th0 + k3.dtheta * dt,
                               w0 + k3.domega * dt, state.t + dt);

    auto combine = [&](const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
        return (a + (b + c) * 2.0 + d) * (dt / 6.0);
    };

    VehicleState out;
    out.position = p0 + combine(k1.dp, k2.dp, k3.dp, k4.dp);
    out.velocity = v0 + combine(k1.dv, k2.dv, k3.dv, k4.dv);
    const Vec3 theta = combine(k1.dtheta, k2.dtheta, k3.dtheta, k4.dtheta);
    out.attitude = (state.attitude * Rot3::exp(theta)).renormalized();
    out.body_rates = w0 + combine(k1.domega, k2.domega, k3.domega, k4.domega);
    out.t = state.t + dt;

    if (!out.finite()) {
        throw IntegrationFault("vehicle step: non-finite result");
    }
    return out;
}

double touchdown_ramp(double scale, double dt, double ramp_time) {
    if (scale < 0.0) scale = 0.0;
    if (scale > 1.0) scale = 1.0;
    if (ramp_time <= 0.0) return 0.0;
    const double out = scale - dt / ramp_time;
    return out < 0.0 ? 0.0 : out;
}

}  // namespace cbfnav
