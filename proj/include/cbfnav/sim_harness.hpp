#pragma once

// Deterministic closed-loop execution: fixed-step physics with the cascaded
// control loops interleaved in a pinned order, telemetry capture, run metrics
// and plot-data emission.
//
// Interleave per physics step k (t = k / physics_hz):
//   1. outer tick, if due: perception -> outer control (30 Hz)
//   2. inner tick, if due: attitude control (250 Hz)
//   3. physics step (500 Hz) under the latest wrench
// All rates come from the schedule; ticks fire when t reaches their next
// multiple. A run is a pure function of (config, seed).

#include <optional>
#include <string>
#include <vector>

#include "cbfnav/flight_control.hpp"
#include "cbfnav/scenario.hpp"

namespace cbfnav {

// One row per outer tick.
struct TelemetryRecord {
    double t = 0.0;
    Phase phase = Phase::Ascending;
    Vec3 position;  // truth, world
    Vec3 velocity;
    double h_v = std::numeric_limits<double>::quiet_NaN();
    double h_d = std::numeric_limits<double>::quiet_NaN();
    Vec3 u_nominal;
    Vec3 u_filtered;
    Vec3 velocity_error;
    double kappa_hat = 0.0;
    double mass_hat = 0.0;
    Vec3 tau_p;
    Vec3 tau_q;
    Vec3 rel_base;    // estimated base origin at the body origin (world axes)
    Vec3 rel_target;  // estimated vehicle position in the target frame
    bool base_valid = false;
    bool target_valid = false;
    bool fault = false;
};

struct RunMetrics {
    double landing_error = std::numeric_limits<double>::quiet_NaN();  // m, horizontal
    double min_h_v = std::numeric_limits<double>::quiet_NaN();
    double min_h_d_approaching = std::numeric_limits<double>::quiet_NaN();
    double min_h_d_landing = std::numeric_limits<double>::quiet_NaN();
    double flight_time = 0.0;      // s
    double breach_duration = 0.0;  // s with h below the breach level, counted
                                   // per phase once that phase has been safe
    bool success = false;
    // success | timeout | landing-error-exceeded | fault:<cause>
    std::string outcome = "unterminated";
};

struct RunResult {
    std::vector<TelemetryRecord> records;
    RunMetrics metrics;
    // descent surfaces captured at the phase switches, for plots and checks
    std::optional<DescentParams> approach_descent;
    std::optional<DescentParams> landing_descent;
};

RunResult run_scenario(const ScenarioConfig& cfg);

// Telemetry CSV under the versioned fixed column schema. Throws
// std::invalid_argument on an empty record stream, std::runtime_error on
// filesystem errors.
void emit_csv(const std::vector<TelemetryRecord>& records, const std::string& path);

// Plot-data files under dir: vcbf_cone.csv and dcbf_surface.csv ((x,y,z)
// samples of the h = 0 sets), ascending_rel.csv (base origin relative to the
// camera during ascent), descent_traj.csv (vehicle in the target frame),
// h_values.csv and adaptive.csv (time traces).
void emit_plot_data(const RunResult& result, const ScenarioConfig& cfg, const std::string& dir);

void write_metrics(const RunMetrics& metrics, const std::string& path);

// FNV-1a over the formatted telemetry rows (the exact bytes emit_csv writes
// after the header lines), so equal hashes mean byte-identical telemetry.
unsigned long long telemetry_hash(const std::vector<TelemetryRecord>& records);

}  // namespace cbfnav
