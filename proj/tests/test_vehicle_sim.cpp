#include <doctest.h>

#include <cmath>

#include "cbfnav/vehicle_sim.hpp"

using namespace cbfnav;

namespace {

const WindModel kNoWind{};

VehicleState advance(VehicleState s, const ControlWrench& w, const WindModel& wind,
                     const VehicleParams& p, double dt, int steps) {
    for (int i = 0; i < steps; ++i) s = step(s, w, wind, p, dt);
    return s;
}

double total_energy(const VehicleState& s, const VehicleParams& p) {
    const Vec3 j_omega = p.inertia * s.body_rates;
    return 0.5 * p.mass * s.velocity.squared_norm() - p.mass * 9.81 * s.position.z +
           0.5 * s.body_rates.dot(j_omega);
}

}  // namespace

TEST_SUITE("vehicle_sim") {

TEST_CASE("hover thrust balances gravity") {
    VehicleParams p;
    VehicleState s;
    s.position = {0.0, 0.0, -2.0};
    ControlWrench w;
    w.tau_p = kGravity * p.mass;
    w.thrust_body = {0.0, 0.0, -p.mass * 9.81};

    s = advance(s, w, kNoWind, p, 0.002, 500);  // 1 s
    CHECK(s.velocity.norm() < 1e-9);
    CHECK((s.position - Vec3{0.0, 0.0, -2.0}).max_abs() < 1e-9);
}

TEST_CASE("free fall accelerates toward +z") {
    VehicleParams p;
    p.drag_coeff = 0.0;  // keep the 1 s arc exactly ballistic
    VehicleState s;
    s.position = {0.0, 0.0, -30.0};
    ControlWrench w;  // motors off

    s = advance(s, w, kNoWind, p, 0.002, 500);
    CHECK(s.position.z - (-30.0) == doctest::Approx(4.905).epsilon(1e-6));
    CHECK(s.velocity.z == doctest::Approx(9.81).epsilon(1e-9));
}

TEST_CASE("torque-free rotation conserves angular momentum magnitude") {
    VehicleParams p;
    ControlWrench w;

    VehicleState principal;
    principal.body_rates = {0.0, 0.0, 5.0};
    double l0 = (p.inertia * principal.body_rates).norm();
    VehicleState s = advance(principal, w, kNoWind, p, 0.002, 500);
    CHECK((p.inertia * s.body_rates).norm() == doctest::Approx(l0).epsilon(1e-6));

    VehicleState tumbling;
    tumbling.body_rates = {3.0, 1.0, 2.0};
    l0 = (p.inertia * tumbling.body_rates).norm();
    s = advance(tumbling, w, kNoWind, p, 0.002, 500);
    CHECK((p.inertia * s.body_rates).norm() == doctest::Approx(l0).epsilon(1e-6));
}

TEST_CASE("wind drag force") {
    CHECK(wind_force(kNoWind, {0.0, 0.0, 0.0}, 0.3, 0.2).max_abs() == 0.0);

    WindModel steady;
    steady.mean = {5.0, 0.0, 0.0};
    Vec3 f = wind_force(steady, {0.0, 0.0, 0.0}, 1.7, 0.2);
    CHECK(f.norm() == doctest::Approx(1.0).epsilon(1e-12));
    // the dynamics subtract this, so the push is along the wind
    CHECK(f.x == doctest::Approx(-1.0));

    WindModel gusty = steady;
    gusty.gust_amplitude = {1.0, 0.0, 0.0};
    gusty.gust_freq_hz = 0.5;
    gusty.seed = 42;
    CHECK((wind_force(gusty, {0.1, 0.0, 0.0}, 0.77, 0.2) -
           wind_force(gusty, {0.1, 0.0, 0.0}, 0.77, 0.2))
              .max_abs() == 0.0);
    WindModel other_seed = gusty;
    other_seed.seed = 43;
    CHECK(wind_force(gusty, {0.0, 0.0, 0.0}, 0.77, 0.2).x !=
          wind_force(other_seed, {0.0, 0.0, 0.0}, 0.77, 0.2).x);
}

TEST_CASE("touchdown ramp") {
    CHECK(touchdown_ramp(1.0, 0.2, 0.2) == doctest::Approx(0.0));
    CHECK(touchdown_ramp(1.0, 0.1, 0.2) == doctest::Approx(0.5));
    CHECK(touchdown_ramp(0.0, 0.05, 0.2) == doctest::Approx(0.0));
    CHECK(touchdown_ramp(0.3, 1.0, 0.2) == doctest::Approx(0.0));  // clamped at zero
    CHECK(touchdown_ramp(1.5, 0.0, 0.2) == doctest::Approx(1.0));  // input clamped to [0,1]
}

TEST_CASE("integration is fourth order") {
    VehicleParams p;
    p.drag_coeff = 0.0;
    VehicleState s0;
    s0.position = {0.0, 0.0, -10.0};
    s0.velocity = {1.0, 0.0, -1.0};
    s0.body_rates = {0.5, -0.3, 0.8};
    ControlWrench w;
    w.thrust_body = {0.0, 0.0, -0.5};
    w.tau_q = {2e-4, -1e-4, 1e-4};

    // 0.48 s horizon divides evenly into all three step sizes
    Vec3 ref = advance(s0, w, kNoWind, p, 0.0005, 960).position;
    double err_coarse = (advance(s0, w, kNoWind, p, 0.008, 60).position - ref).norm();
    double err_fine = (advance(s0, w, kNoWind, p, 0.004, 120).position - ref).norm();
    CHECK(err_fine > 0.0);
    CHECK(err_coarse / err_fine >= 8.0);
}

TEST_CASE("ballistic flight conserves energy") {
    VehicleParams p;
    p.drag_coeff = 0.0;
    VehicleState s;
    s.position = {0.0, 0.0, -10.0};
    s.velocity = {2.0, 1.0, -4.0};
    s.body_rates = {3.0, 1.0, 2.0};
    ControlWrench w;

    double e0 = total_energy(s, p);
    s = advance(s, w, kNoWind, p, 0.002, 1000);  // 2 s
    CHECK(std::fabs(total_energy(s, p) - e0) / e0 < 1e-5);
}

TEST_CASE("attitude stays orthonormal over long integrations") {
    VehicleParams p;
    VehicleState s;
    s.position = {0.0, 0.0, -50.0};
    s.body_rates = {1.0, -2.0, 0.5};
    ControlWrench w;
    w.thrust_body = {0.0, 0.0, -p.mass * 9.81};

    for (int i = 0; i < 100000; ++i) s = step(s, w, kNoWind, p, 0.002);
    CHECK(s.attitude.orthonormality_error() <= 1e-8);
}

TEST_CASE("step rejects bad inputs") {
    VehicleParams p;
    VehicleState s;
    ControlWrench w;
    CHECK_THROWS_AS(step(s, w, kNoWind, p, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(step(s, w, kNoWind, p, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(step(s, w, kNoWind, p, -0.001), std::invalid_argument);

    VehicleState broken = s;
    broken.velocity = {std::nan(""), 0.0, 0.0};
    CHECK_THROWS_AS(step(broken, w, kNoWind, p, 0.002), IntegrationFault);
}

}
