#pragma once

// Fiducial-marker perception stand-in. Each ground robot carries one marker
// (arrays are modeled as a single fused detection); the camera looks along
// body +Z (downward) from a fixed offset on the airframe. A detection is
// valid only when the noiseless marker center lies strictly inside the
// rectangular viewing cone and the camera's height above the marker plane is
// inside the detection band. Noise is applied after gating and is a pure
// function of (seed, stream, time), so repeated calls agree bit for bit.

#include "cbfnav/math_core.hpp"
#include "cbfnav/vehicle_sim.hpp"

namespace cbfnav {

enum class FrameId { Base, Target };

struct MarkerConfig {
    FrameId frame = FrameId::Base;
    RigidTransform marker_to_robot;  // robot frame expressed in the marker frame
    double band_min = 0.35;          // m, camera height above the marker plane
    double band_max = 1.75;
    double fov_half_h = 0.0;         // rad, horizontal half angle (camera x)
    double fov_half_v = 0.0;         // rad, vertical half angle (camera y)
    Vec3 camera_offset;              // camera position in the body frame
};

// Pose of the robot frame in the camera frame, plus validity. Invalid
// detections are values, not errors; downstream navigation math refuses them.
struct RelativePoseEstimate {
    FrameId frame = FrameId::Base;
    Vec3 position;   // robot origin in camera coordinates
    Rot3 rotation;   // robot frame axes in camera coordinates
    double t = 0.0;
    bool valid = false;
};

struct NoiseModel {
    double pos_sigma = 0.0;   // m, per axis
    double rot_sigma = 0.0;   // rad, per axis of the perturbation vector
    double vel_sigma = 0.0;   // m/s, per axis (velocity estimate)
    Vec3 vel_bias;            // m/s, constant velocity estimate bias
    unsigned long long seed = 0;
};

// Relative navigation state distilled from a detection: for the base frame,
// the robot origin expressed at the body origin and the squared horizontal
// offset measured from the camera axis; for the target frame, the vehicle
// position in the target frame and its squared horizontal offset.
struct NavState {
    FrameId frame = FrameId::Base;
    Vec3 position;
    double l = 0.0;
};

// Simulates one camera frame at time t. Gates on the noiseless geometry, then
// perturbs the marker pose and composes the fused robot-frame estimate.
RelativePoseEstimate observe(const VehicleState& truth, const RigidTransform& robot_pose_world,
                             const MarkerConfig& cfg, const NoiseModel& noise, double t);

// Inertial velocity estimate: truth plus seeded Gaussian noise plus constant
// bias. Deterministic in (seed, truth.t).
Vec3 estimate_velocity(const VehicleState& truth, const NoiseModel& noise);

// Distills a valid estimate into the navigation state the barriers consume.
// Throws GatedMeasurementError on an invalid estimate.
NavState relative_nav_state(const RelativePoseEstimate& est, const Vec3& camera_offset);

}  // namespace cbfnav
