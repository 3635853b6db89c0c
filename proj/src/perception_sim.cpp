#include "cbfnav/perception_sim.hpp"

#include <cmath>
#include <cstring>

namespace cbfnav {

namespace {

unsigned long long splitmix64(unsigned long long& s) {
    s += 0x9e3779b97f4a7c15ull;
    unsigned long long x = s;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

unsigned long long time_key(double t) {
    unsigned long long bits;
    static_assert(sizeof(bits) == sizeof(t));
    std::memcpy(&bits, &t, sizeof(bits));
    return bits;
}

// Deterministic Gaussian stream keyed on (seed, stream id, time). Box-Muller
// over splitmix64 uniforms; bit-stable for identical keys.
struct GaussStream {
    unsigned long long state;

    GaussStream(unsigned long long seed, unsigned long long stream, double t) {
        state = seed ^ (stream * 0xd1342543de82ef95ull) ^ time_key(t);
        // decorrelate nearby keys
        (void)splitmix64(state);
        (void)splitmix64(state);
    }

    double uniform() {  // (0, 1]
        return ((splitmix64(state) >> 11) + 1.0) * 0x1.0p-53;
    }

    double gauss() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    Vec3 gauss3() {
        const double a = gauss(), b = gauss(), c = gauss();
        return {a, b, c};
    }
};

constexpr unsigned long long kStreamPosBase = 0x01;
constexpr unsigned long long kStreamRotBase = 0x02;
constexpr unsigned long long kStreamPosTarget = 0x03;
constexpr unsigned long long kStreamRotTarget = 0x04;
constexpr unsigned long long kStreamVelocity = 0x05;

}  // namespace

RelativePoseEstimate observe(const VehicleState& truth, const RigidTransform& robot_pose_world,
                             const MarkerConfig& cfg, const NoiseModel& noise, double t) {
    RelativePoseEstimate out;
    out.frame = cfg.frame;
    out.t = t;
    out.valid = false;

    const RigidTransform camera_world{truth.attitude,
                                      truth.position + truth.attitude * cfg.camera_offset};
    const RigidTransform marker_world = compose(robot_pose_world, cfg.marker_to_robot.inverse());
    const RigidTransform marker_in_camera = compose(camera_world.inverse(), marker_world);
    const Vec3 c = marker_in_camera.translation;

    // gates use the noiseless marker center only
    if (c.z <= 0.0) return out;  // behind the camera
    if (std::fabs(c.x) >= c.z * std::tan(cfg.fov_half_h)) return out;
    if (std::fabs(c.y) >= c.z * std::tan(cfg.fov_half_v)) return out;
    const double height = marker_world.translation.z - camera_world.translation.z;
    if (height < cfg.band_min || height > cfg.band_max) return out;

    const bool base = cfg.frame == FrameId::Base;
    GaussStream pos_stream(noise.seed, base ? kStreamPosBase : kStreamPosTarget, t);
    GaussStream rot_stream(noise.seed, base ? kStreamRotBase : kStreamRotTarget, t);

    RigidTransform noisy = marker_in_camera;
    noisy.translation += pos_stream.gauss3() * noise.pos_sigma;
    noisy.rotation = noisy.rotation * Rot3::exp(rot_stream.gauss3() * noise.rot_sigma);

    const RigidTransform robot_in_camera = compose(noisy, cfg.marker_to_robot);
    out.position = robot_in_camera.translation;
    out.rotation = robot_in_camera.rotation;
    out.valid = true;
    return out;
}

Vec3 estimate_velocity(const VehicleState& truth, const NoiseModel& noise) {
    GaussStream stream(noise.seed, kStreamVelocity, truth.t);
    return truth.velocity + stream.gauss3() * noise.vel_sigma + noise.vel_bias;
}

NavState relative_nav_state(const RelativePoseEstimate& est, const Vec3& camera_offset) {
    if (!est.valid) {
        throw GatedMeasurementError("relative_nav_state: estimate was gated out");
    }
    NavState nav;
    nav.frame = est.frame;
    if (est.frame == FrameId::Base) {
        // watched frame origin at the body origin; horizontal offset is
        // measured from the camera axis
        nav.position = camera_to_body(est.position, camera_offset);
        nav.l = est.position.x * est.position.x + est.position.y * est.position.y;
    } else {
        // vehicle position in the target frame
        nav.position = -(est.rotation.inverse_rotate(est.position + camera_offset));
        nav.l = nav.position.x * nav.position.x + nav.position.y * nav.position.y;
    }
    return nav;
}

}  // namespace cbfnav
