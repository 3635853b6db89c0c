#include "cbfnav/sim_harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "cbfnav/perception_sim.hpp"

namespace cbfnav {

namespace {

// top-plate radius within which a plate-height contact counts as touching the
// target rather than flying past it
constexpr double kPlateRadius = 0.3;

void track_min(double& slot, double v) {
    if (std::isnan(slot) || v < slot) slot = v;
}

std::string format_row(const TelemetryRecord& r) {
    char buf[1024];
    std::snprintf(
        buf, sizeof buf,
        "%.17g,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
        "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
        r.t, phase_name(r.phase), r.position.x, r.position.y, r.position.z, r.velocity.x,
        r.velocity.y, r.velocity.z, r.h_v, r.h_d, r.u_nominal.x, r.u_nominal.y, r.u_nominal.z,
        r.u_filtered.x, r.u_filtered.y, r.u_filtered.z, r.velocity_error.x, r.velocity_error.y,
        r.velocity_error.z, r.kappa_hat, r.mass_hat, r.tau_p.x, r.tau_p.y, r.tau_p.z, r.tau_q.x,
        r.tau_q.y, r.tau_q.z);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    return out;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg) {
    RunResult result;
    RunMetrics& met = result.metrics;

    VehicleState s;
    s.position = cfg.initial_position;

    Controller ctl(cfg.controller);
    const MarkerConfig base_cfg = base_marker_config(cfg);
    const MarkerConfig target_cfg = target_marker_config(cfg);
    const RigidTransform base_world = cfg.base_pose;
    const RigidTransform target_world = target_pose_world(cfg);
    const double plate_z = target_world.translation.z;

    const double dt_p = 1.0 / cfg.schedule.physics_hz;
    const double outer_dt = 1.0 / cfg.schedule.outer_hz;
    const double inner_dt = 1.0 / cfg.schedule.inner_hz;
    long outer_next = 0;
    long inner_next = 0;

    ControlWrench wrench;
    double ramp = 1.0;
    bool ramping = false;
    Phase prev_phase = Phase::Ascending;
    // breach time is counted per phase only once that phase has reached the
    // safe set; the approach legitimately starts deep in h < 0
    bool entered_safe[4] = {false, false, false, false};

    result.records.reserve(static_cast<size_t>(cfg.max_duration * cfg.schedule.outer_hz) + 2);

    for (long k = 0;; ++k) {
        const double t = static_cast<double>(k) / cfg.schedule.physics_hz;
        s.t = t;
        if (t > cfg.max_duration) {
            met.outcome = "timeout";
            met.flight_time = t;
            break;
        }

        if (t >= static_cast<double>(outer_next) / cfg.schedule.outer_hz - 1e-9) {
            ++outer_next;
            Measurements meas;
            meas.base = observe(s, base_world, base_cfg, cfg.noise, t);
            meas.target = observe(s, target_world, target_cfg, cfg.noise, t);
            meas.velocity = estimate_velocity(s, cfg.noise);
            meas.attitude = s.attitude;
            meas.body_rates = s.body_rates;
            meas.t = t;

            OuterOutput out = ctl.outer_step(meas, outer_dt);
            wrench.tau_p = out.wrench.tau_p;
            wrench.thrust_body = out.wrench.thrust_body;

            if (out.phase.mode != prev_phase) {
                if (out.phase.mode == Phase::Approaching) result.approach_descent = out.phase.descent;
                if (out.phase.mode == Phase::Landing) result.landing_descent = out.phase.descent;
                prev_phase = out.phase.mode;
            }
            ramping = out.phase.mode == Phase::Touchdown;

            TelemetryRecord rec;
            rec.t = t;
            rec.phase = out.phase.mode;
            rec.position = s.position;
            rec.velocity = s.velocity;
            rec.h_v = out.h_v;
            rec.h_d = out.h_d;
            rec.u_nominal = out.u_nominal;
            rec.u_filtered = out.u_filtered;
            rec.velocity_error = out.velocity_error;
            rec.kappa_hat = out.adaptive.kappa_hat;
            rec.mass_hat = out.adaptive.mass_hat;
            rec.tau_p = out.wrench.tau_p;
            rec.tau_q = out.wrench.tau_q;
            rec.fault = out.fault;
            rec.base_valid = meas.base.valid;
            if (meas.base.valid)
                rec.rel_base = relative_nav_state(meas.base, cfg.controller.camera_offset).position;
            rec.target_valid = meas.target.valid;
            if (meas.target.valid)
                rec.rel_target =
                    relative_nav_state(meas.target, cfg.controller.camera_offset).position;
            result.records.push_back(rec);

            const double h_active = out.phase.mode == Phase::Ascending ? out.h_v : out.h_d;
            if (!std::isnan(h_active)) {
                switch (out.phase.mode) {
                    case Phase::Ascending: track_min(met.min_h_v, h_active); break;
                    case Phase::Approaching: track_min(met.min_h_d_approaching, h_active); break;
                    case Phase::Landing: track_min(met.min_h_d_landing, h_active); break;
                    case Phase::Touchdown: break;
                }
                const int pi = static_cast<int>(out.phase.mode);
                if (h_active >= 0.0) entered_safe[pi] = true;
                if (entered_safe[pi] && h_active < cfg.breach_level)
                    met.breach_duration += outer_dt;
            }

            if (out.fault_terminal) {
                met.outcome = "fault:detection-loss";
                met.flight_time = t;
                break;
            }
        }

        if (t >= static_cast<double>(inner_next) / cfg.schedule.inner_hz - 1e-9) {
            ++inner_next;
            wrench.tau_q = ctl.inner_step(s.attitude, s.body_rates, inner_dt);
        }

        ControlWrench applied = wrench;
        if (ramping) {
            ramp = touchdown_ramp(ramp, dt_p, cfg.ramp_time);
            applied.thrust_body = wrench.thrust_body * ramp;
            applied.tau_q = wrench.tau_q * ramp;
        }
        try {
            s = step(s, applied, cfg.wind, cfg.vehicle, dt_p);
        } catch (const IntegrationFault&) {
            met.outcome = "fault:integration";
            met.flight_time = t;
            break;
        }

        const Vec3 to_target = s.position - target_world.translation;
        const double horiz = std::hypot(to_target.x, to_target.y);
        if (horiz <= kPlateRadius && s.position.z >= plate_z - cfg.gear_height) {
            met.flight_time = s.t;
            met.landing_error = horiz;
            if (ctl.phase().mode == Phase::Touchdown) {
                met.success = horiz <= cfg.landing_error_margin;
                met.outcome = met.success ? "success" : "landing-error-exceeded";
            } else {
                met.outcome = "fault:impact";
            }
            break;
        }
        if (s.position.z >= -cfg.gear_height) {
            met.outcome = "fault:ground-impact";
            met.flight_time = s.t;
            break;
        }
    }
    return result;
}

void emit_csv(const std::vector<TelemetryRecord>& records, const std::string& path) {
    if (records.empty()) throw std::invalid_argument("emit_csv: no records");
    std::ofstream out = open_out(path);
    out << "# schema: cbfnav-telemetry-v1\n";
    out << "t,phase,px,py,pz,vx,vy,vz,h_v,h_d,unom_x,unom_y,unom_z,ufil_x,ufil_y,ufil_z,"
           "e_x,e_y,e_z,kappa_hat,m_hat,taup_x,taup_y,taup_z,tauq_x,tauq_y,tauq_z\n";
    for (const auto& r : records) out << format_row(r);
    if (!out) throw std::runtime_error("write failed: " + path);
}

void emit_plot_data(const RunResult& result, const ScenarioConfig& cfg, const std::string& dir) {
    if (result.records.empty()) throw std::invalid_argument("emit_plot_data: no records");
    std::filesystem::create_directories(dir);
    const std::string base = dir + "/";
    char buf[256];

    {
        // visual-lock cone boundary, marker position relative to the camera
        std::ofstream out = open_out(base + "vcbf_cone.csv");
        out << "x,y,z\n";
        const double half = cfg.controller.theta_fov / 2.0;
        for (int iz = 0; iz <= 14; ++iz) {
            const double z = 0.36 + (1.74 - 0.36) * iz / 14.0;
            const double r = z * std::tan(half);
            for (int ia = 0; ia < 32; ++ia) {
                const double phi = 2.0 * 3.14159265358979323846 * ia / 32.0;
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", r * std::cos(phi),
                              r * std::sin(phi), z);
                out << buf;
            }
        }
    }

    const std::optional<DescentParams>& surf =
        result.landing_descent ? result.landing_descent : result.approach_descent;
    if (surf) {
        // descent surface in the target frame
        std::ofstream out = open_out(base + "dcbf_surface.csv");
        out << "x,y,z\n";
        const double l_max = std::max({2.0 / surf->k1, 4.0 * surf->l_switch, 0.02});
        for (int il = 0; il <= 40; ++il) {
            const double l = l_max * il / 40.0;
            const double z = -(surf->k1 * surf->k2 * l * std::exp(-surf->k1 * l) + surf->k3);
            const double r = std::sqrt(l);
            for (int ia = 0; ia < 32; ++ia) {
                const double phi = 2.0 * 3.14159265358979323846 * ia / 32.0;
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", r * std::cos(phi),
                              r * std::sin(phi), z);
                out << buf;
            }
        }
    }

    {
        std::ofstream out = open_out(base + "ascending_rel.csv");
        out << "t,x,y,z\n";
        for (const auto& r : result.records) {
            if (r.phase != Phase::Ascending || !r.base_valid) continue;
            const Vec3 p = r.rel_base - cfg.controller.camera_offset;
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.t, p.x, p.y, p.z);
            out << buf;
        }
    }
    {
        std::ofstream out = open_out(base + "descent_traj.csv");
        out << "t,x,y,z\n";
        for (const auto& r : result.records) {
            if (r.phase == Phase::Ascending || !r.target_valid) continue;
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.t, r.rel_target.x,
                          r.rel_target.y, r.rel_target.z);
            out << buf;
        }
    }
    {
        std::ofstream out = open_out(base + "h_values.csv");
        out << "t,phase,h_v,h_d\n";
        for (const auto& r : result.records) {
            std::snprintf(buf, sizeof buf, "%.17g,%s,%.17g,%.17g\n", r.t, phase_name(r.phase),
                          r.h_v, r.h_d);
            out << buf;
        }
    }
    {
        std::ofstream out = open_out(base + "adaptive.csv");
        out << "t,e_x,e_y,e_z,kappa_hat,m_hat\n";
        for (const auto& r : result.records) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t,
                          r.velocity_error.x, r.velocity_error.y, r.velocity_error.z, r.kappa_hat,
                          r.mass_hat);
            out << buf;
        }
    }
}

void write_metrics(const RunMetrics& metrics, const std::string& path) {
    nlohmann::json j = {
        {"landing_error_m", metrics.landing_error},
        {"min_h_v", metrics.min_h_v},
        {"min_h_d_approaching", metrics.min_h_d_approaching},
        {"min_h_d_landing", metrics.min_h_d_landing},
        {"flight_time_s", metrics.flight_time},
        {"breach_duration_s", metrics.breach_duration},
        {"success", metrics.success},
        {"outcome", metrics.outcome},
    };
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

unsigned long long telemetry_hash(const std::vector<TelemetryRecord>& records) {
    unsigned long long h = 1469598103934665603ULL;
    for (const auto& r : records) {
        for (const char c : format_row(r)) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
    }
    return h;
}

}  // namespace cbfnav
