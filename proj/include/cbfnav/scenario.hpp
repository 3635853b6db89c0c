#pragma once

// Scenario configuration: everything a closed-loop run depends on, with a JSON
// round trip for config files and parameter sweeps, plus the two built-in
// presets. A scenario is fully deterministic in (config, seed).

#include <string>

#include "cbfnav/flight_control.hpp"
#include "cbfnav/perception_sim.hpp"
#include "cbfnav/vehicle_sim.hpp"

namespace cbfnav {

struct TimestepSchedule {
    double physics_hz = 500.0;
    double inner_hz = 250.0;
    double outer_hz = 30.0;
};

struct ScenarioConfig {
    std::string name = "custom";
    unsigned long long seed = 0;
    double max_duration = 40.0;        // s
    // camera starts 0.6 m straight above the base origin: the lock barrier
    // opens at its maximum and the deck marker clears every camera gate
    Vec3 initial_position{0.1, 0.0, -0.7};
    RigidTransform base_pose;          // base robot in the world frame
    RigidTransform target_pose;        // target robot in the base frame
    WindModel wind;                    // seed is derived from the scenario seed
    NoiseModel noise;                  // ditto
    VehicleParams vehicle;
    double gear_height = 0.05;         // m, landing gear below the body origin
    double ramp_time = 0.2;            // s, touchdown motor ramp
    ControllerConfig controller;
    TimestepSchedule schedule;
    double landing_error_margin = 0.02;  // m, horizontal, defines run success
    double breach_level = -0.05;         // h below this counts as a breach
};

// Marker mounting poses (marker frame expressed in its robot's frame). Fixed
// properties of the two rigs.
RigidTransform base_marker_pose();
RigidTransform target_marker_pose();

// Camera/detector settings for each robot's marker, assembled from the config.
MarkerConfig base_marker_config(const ScenarioConfig& cfg);
MarkerConfig target_marker_config(const ScenarioConfig& cfg);

// Target robot pose in the world frame.
RigidTransform target_pose_world(const ScenarioConfig& cfg);

// Re-derives the wind and noise stream seeds from cfg.seed. Called by the
// loaders; call again after changing seed by hand.
void reseed(ScenarioConfig& cfg);

// JSON round trip. load_scenario accepts a JSON text; every key is optional
// (missing keys keep defaults), unknown or ill-typed keys throw ConfigError
// naming the offending field path. scenario_to_json emits the full schema.
ScenarioConfig load_scenario(const std::string& json_text);
ScenarioConfig load_scenario_file(const std::string& path);
std::string scenario_to_json(const ScenarioConfig& cfg);

// Applies `json_value` (parsed from text) at a dotted path like
// "wind.gust_freq_hz" on top of cfg, returning the updated config.
ScenarioConfig override_field(const ScenarioConfig& cfg, const std::string& dotted_path,
                              const std::string& json_value);

// Built-in presets ("run1", "run2"); throws ConfigError for other names.
ScenarioConfig preset(const std::string& name);

}  // namespace cbfnav
