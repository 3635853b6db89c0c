#include <doctest.h>

#include <cmath>

#include "cbfnav/perception_sim.hpp"

using namespace cbfnav;

namespace {

constexpr Vec3 kOffset{-0.1, 0.0, 0.1};

MarkerConfig plain_config(FrameId frame) {
    MarkerConfig cfg;
    cfg.frame = frame;
    cfg.marker_to_robot = RigidTransform::identity();
    cfg.band_min = 0.35;
    cfg.band_max = 1.75;
    cfg.fov_half_h = M_PI / 4.0;
    cfg.fov_half_v = 0.5672320068981571;
    cfg.camera_offset = kOffset;
    return cfg;
}

// body position that puts the camera at the given world point (level attitude)
VehicleState body_with_camera_at(const Vec3& camera_world) {
    VehicleState s;
    s.position = camera_world - kOffset;
    return s;
}

}  // namespace

TEST_SUITE("perception_sim") {

TEST_CASE("overhead detection is valid and exact without noise") {
    MarkerConfig cfg = plain_config(FrameId::Base);
    VehicleState s = body_with_camera_at({0.0, 0.0, -1.0});
    RelativePoseEstimate est = observe(s, RigidTransform::identity(), cfg, NoiseModel{}, 0.0);

    REQUIRE(est.valid);
    CHECK((est.position - Vec3{0.0, 0.0, 1.0}).max_abs() <= 1e-12);
    CHECK((est.rotation.matrix() - Mat3::identity()).max_abs() <= 1e-12);
}

TEST_CASE("detection band gates by camera height") {
    MarkerConfig cfg = plain_config(FrameId::Base);
    auto valid_at = [&](double height) {
        VehicleState s = body_with_camera_at({0.0, 0.0, -height});
        return observe(s, RigidTransform::identity(), cfg, NoiseModel{}, 0.0).valid;
    };
    CHECK_FALSE(valid_at(0.2));
    CHECK_FALSE(valid_at(0.349));
    CHECK(valid_at(0.36));
    CHECK(valid_at(1.74));
    CHECK_FALSE(valid_at(1.8));
}

TEST_CASE("viewing cone gates by marker center") {
    MarkerConfig cfg = plain_config(FrameId::Base);
    auto valid_at_angle = [&](double elevation_off_axis) {
        double x = std::tan(elevation_off_axis) * 1.0;
        VehicleState s = body_with_camera_at({x, 0.0, -1.0});
        return observe(s, RigidTransform::identity(), cfg, NoiseModel{}, 0.0).valid;
    };
    CHECK(valid_at_angle(40.0 * M_PI / 180.0));
    CHECK_FALSE(valid_at_angle(50.0 * M_PI / 180.0));  // past the 45 deg half angle
}

TEST_CASE("gating is conservative: every valid center is strictly inside the cone") {
    MarkerConfig cfg = plain_config(FrameId::Base);
    int valid_count = 0;
    for (int i = 0; i <= 28; ++i) {
        double x = 1.4 * i / 28.0;
        VehicleState s = body_with_camera_at({x, 0.0, -1.0});
        if (observe(s, RigidTransform::identity(), cfg, NoiseModel{}, 0.0).valid) {
            ++valid_count;
            CHECK(std::fabs(std::atan2(x, 1.0)) < cfg.fov_half_h);
        }
    }
    CHECK(valid_count > 0);
}

TEST_CASE("fused estimate lands on the robot origin wherever the marker is mounted") {
    // marker 0.4 m off the robot center, yawed a quarter turn
    RigidTransform marker_in_robot{Rot3::rot_z(M_PI / 2.0), {0.23, 0.33, 0.0}};
    MarkerConfig cfg = plain_config(FrameId::Base);
    cfg.marker_to_robot = marker_in_robot.inverse();

    RigidTransform robot{Rot3::rot_z(0.4), {0.5, -0.2, 0.0}};
    Vec3 camera_world{0.6, 0.1, -1.2};
    VehicleState s = body_with_camera_at(camera_world);
    RelativePoseEstimate est = observe(s, robot, cfg, NoiseModel{}, 0.0);

    REQUIRE(est.valid);
    CHECK((est.position - (robot.translation - camera_world)).max_abs() <= 1e-12);
    CHECK((est.rotation.matrix() - robot.rotation.matrix()).max_abs() <= 1e-12);
}

TEST_CASE("velocity estimate") {
    VehicleState s;
    s.velocity = {0.3, -0.1, 0.05};
    s.t = 2.5;

    CHECK((estimate_velocity(s, NoiseModel{}) - s.velocity).max_abs() == 0.0);

    NoiseModel biased;
    biased.vel_bias = {0.01, 0.0, 0.0};
    CHECK((estimate_velocity(s, biased) - s.velocity - biased.vel_bias).max_abs() <= 1e-15);

    NoiseModel noisy;
    noisy.vel_sigma = 0.02;
    noisy.seed = 9;
    CHECK((estimate_velocity(s, noisy) - estimate_velocity(s, noisy)).max_abs() == 0.0);
    VehicleState later = s;
    later.t = 2.6;
    CHECK(estimate_velocity(s, noisy).x != estimate_velocity(later, noisy).x);
}

TEST_CASE("base navigation state re-expresses the origin at the body") {
    RelativePoseEstimate est;
    est.frame = FrameId::Base;
    est.position = {0.0, 0.0, 1.0};
    est.valid = true;

    NavState nav = relative_nav_state(est, kOffset);
    CHECK((nav.position - Vec3{-0.1, 0.0, 1.1}).max_abs() <= 1e-15);
    CHECK(nav.l == doctest::Approx(0.0));  // horizontal offset measured at the camera
}

TEST_CASE("target navigation state recovers the true relative position") {
    MarkerConfig cfg = plain_config(FrameId::Target);
    VehicleState s;
    s.position = {0.0, 0.0, -1.0};  // body 1 m above the target center

    RelativePoseEstimate est = observe(s, RigidTransform::identity(), cfg, NoiseModel{}, 0.0);
    REQUIRE(est.valid);
    NavState nav = relative_nav_state(est, kOffset);
    CHECK((nav.position - Vec3{0.0, 0.0, -1.0}).max_abs() <= 1e-12);
    CHECK(nav.l <= 1e-12);
}

TEST_CASE("target yaw leaves the horizontal offset invariant") {
    MarkerConfig cfg = plain_config(FrameId::Target);
    VehicleState s;
    s.position = {0.3, 0.2, -1.0};

    double l_straight = 0.0;
    for (double yaw : {0.0, 1.1, -2.4}) {
        RigidTransform robot{Rot3::rot_z(yaw), {0.0, 0.0, 0.0}};
        RelativePoseEstimate est = observe(s, robot, cfg, NoiseModel{}, 0.0);
        REQUIRE(est.valid);
        NavState nav = relative_nav_state(est, kOffset);
        if (yaw == 0.0) {
            l_straight = nav.l;
            CHECK(nav.l == doctest::Approx(0.13).epsilon(1e-12));
        } else {
            CHECK(nav.l == doctest::Approx(l_straight).epsilon(1e-12));
        }
    }
}

TEST_CASE("navigation math refuses gated-out estimates") {
    RelativePoseEstimate est;
    est.valid = false;
    CHECK_THROWS_AS(relative_nav_state(est, kOffset), GatedMeasurementError);
}

TEST_CASE("noise is deterministic per (seed, time) and keeps rotations proper") {
    MarkerConfig cfg = plain_config(FrameId::Base);
    VehicleState s = body_with_camera_at({0.05, -0.02, -1.1});
    NoiseModel noise;
    noise.pos_sigma = 0.005;
    noise.rot_sigma = 0.009;
    noise.seed = 1234;

    RelativePoseEstimate a = observe(s, RigidTransform::identity(), cfg, noise, 0.5);
    RelativePoseEstimate b = observe(s, RigidTransform::identity(), cfg, noise, 0.5);
    REQUIRE(a.valid);
    CHECK((a.position - b.position).max_abs() == 0.0);
    CHECK((a.rotation.matrix() - b.rotation.matrix()).max_abs() == 0.0);
    CHECK(a.rotation.orthonormality_error() <= 1e-12);

    RelativePoseEstimate c = observe(s, RigidTransform::identity(), cfg, noise, 0.5333);
    REQUIRE(c.valid);
    CHECK(a.position.x != c.position.x);

    NoiseModel quiet;
    RelativePoseEstimate exact = observe(s, RigidTransform::identity(), cfg, quiet, 0.5);
    CHECK((a.position - exact.position).max_abs() > 0.0);
    CHECK((a.position - exact.position).max_abs() < 0.1);  // a few sigma
}

}
