#include "cbfnav/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cbfnav {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& why) {
    throw ConfigError(path + ": " + why);
}

std::string join(const std::string& prefix, const char* key) {
    return prefix.empty() ? key : prefix + "." + key;
}

double as_num(const json& j, const std::string& path) {
    if (!j.is_number()) bad(path, "expected a number");
    return j.get<double>();
}

Vec3 as_vec3(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) bad(path, "expected [x, y, z]");
    Vec3 v;
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_number()) bad(path, "expected [x, y, z]");
        v.set(i, j[i].get<double>());
    }
    return v;
}

// Consumes known keys from a copied object so leftovers can be reported as
// unknown fields, with full dotted paths in every message.
struct Section {
    json rest;
    std::string path;

    Section(const json& j, std::string p) : rest(j), path(std::move(p)) {
        if (!rest.is_object()) bad(path.empty() ? "config" : path, "expected an object");
    }

    bool take(const char* key, json& out) {
        auto it = rest.find(key);
        if (it == rest.end()) return false;
        out = *it;
        rest.erase(it);
        return true;
    }
    void num(const char* key, double& field) {
        json v;
        if (take(key, v)) field = as_num(v, join(path, key));
    }
    void num(const char* key, unsigned long long& field) {
        json v;
        if (!take(key, v)) return;
        if (!v.is_number_unsigned() && !v.is_number_integer())
            bad(join(path, key), "expected a non-negative integer");
        if (v.is_number_integer() && v.get<long long>() < 0)
            bad(join(path, key), "expected a non-negative integer");
        field = v.get<unsigned long long>();
    }
    void vec(const char* key, Vec3& field) {
        json v;
        if (take(key, v)) field = as_vec3(v, join(path, key));
    }
    // diagonal gain: a scalar expands to all three axes, an array sets them
    // individually
    void gain(const char* key, Vec3& field) {
        json v;
        if (!take(key, v)) return;
        if (v.is_array()) {
            field = as_vec3(v, join(path, key));
            return;
        }
        double g = as_num(v, join(path, key));
        field = {g, g, g};
    }
    void str(const char* key, std::string& field) {
        json v;
        if (!take(key, v)) return;
        if (!v.is_string()) bad(join(path, key), "expected a string");
        field = v.get<std::string>();
    }
    Section sub(const char* key) {
        json v;
        if (take(key, v)) return Section(v, join(path, key));
        return Section(json::object(), join(path, key));
    }
    void done() {
        if (!rest.empty()) bad(join(path, rest.begin().key().c_str()), "unknown field");
    }
};

void parse_pose(Section s, RigidTransform& pose) {
    double yaw = std::atan2(pose.rotation.matrix().m[1][0], pose.rotation.matrix().m[0][0]);
    s.num("yaw_rad", yaw);
    s.vec("position", pose.translation);
    s.done();
    pose.rotation = Rot3::rot_z(yaw);
}

void require_positive(double v, const char* path) {
    if (!(v > 0.0)) bad(path, "must be > 0");
}

void require_nonneg(double v, const char* path) {
    if (!(v >= 0.0)) bad(path, "must be >= 0");
}

void validate(ScenarioConfig& cfg) {
    require_positive(cfg.max_duration, "max_duration_s");
    require_positive(cfg.vehicle.mass, "vehicle.mass");
    require_nonneg(cfg.vehicle.drag_coeff, "vehicle.drag_coeff");
    for (int i = 0; i < 3; ++i)
        if (!(cfg.vehicle.inertia.m[i][i] > 0.0)) bad("vehicle.inertia_diag", "must be > 0");
    require_positive(cfg.gear_height, "vehicle.gear_height");
    require_positive(cfg.ramp_time, "vehicle.ramp_time_s");
    require_positive(cfg.schedule.physics_hz, "schedule.physics_hz");
    require_positive(cfg.schedule.inner_hz, "schedule.inner_hz");
    require_positive(cfg.schedule.outer_hz, "schedule.outer_hz");
    if (cfg.schedule.inner_hz > cfg.schedule.physics_hz)
        bad("schedule.inner_hz", "must not exceed physics_hz");
    if (cfg.schedule.outer_hz > cfg.schedule.inner_hz)
        bad("schedule.outer_hz", "must not exceed inner_hz");
    if (1.0 / cfg.schedule.physics_hz > 0.01) bad("schedule.physics_hz", "must be >= 100");
    if (!(cfg.controller.theta_fov > 0.0 && cfg.controller.theta_fov < 3.141592653589793))
        bad("cbf.theta_fov_rad", "must be in (0, pi)");
    require_positive(cfg.controller.alpha_v, "cbf.alpha_v");
    require_positive(cfg.controller.alpha_d, "cbf.alpha_d");
    for (int i = 0; i < 3; ++i)
        if (!(cfg.controller.box.limits[i] > 0.0)) bad("cbf.velocity_box", "must be > 0");
    require_positive(cfg.controller.thresholds.focus_altitude, "cbf.focus_altitude");
    require_positive(cfg.controller.thresholds.landing_altitude, "cbf.landing_altitude");
    if (cfg.controller.thresholds.landing_altitude >= cfg.controller.thresholds.focus_altitude)
        bad("cbf.landing_altitude", "must be below focus_altitude");
    require_positive(cfg.controller.gains.eta_kappa, "gains.eta_kappa");
    require_positive(cfg.controller.gains.eta_m, "gains.eta_m");
    require_positive(cfg.controller.gains.dead_zone, "gains.dead_zone");
    require_nonneg(cfg.noise.pos_sigma, "noise.pos_sigma");
    require_nonneg(cfg.noise.rot_sigma, "noise.rot_sigma");
    require_nonneg(cfg.noise.vel_sigma, "noise.vel_sigma");
    double n = cfg.controller.a_priori_dir.norm();
    if (!(n > 1e-9)) bad("a_priori_dir", "must be nonzero");
    cfg.controller.a_priori_dir = cfg.controller.a_priori_dir / n;
    cfg.controller.thrust_ceiling = 2.0 * cfg.vehicle.mass * 9.81;
}

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

// uniform diagonals stay scalars in the schema
json gain_json(const Vec3& v) {
    if (v.x == v.y && v.y == v.z) return json(v.x);
    return vec_json(v);
}

double yaw_of(const RigidTransform& p) {
    return std::atan2(p.rotation.matrix().m[1][0], p.rotation.matrix().m[0][0]);
}

}  // namespace

RigidTransform base_marker_pose() {
    // marker board centered 0.23 m / 0.33 m off the base origin, yawed +90 deg
    return {Rot3::rot_z(1.5707963267948966), {0.23, 0.33, 0.0}};
}

RigidTransform target_marker_pose() {
    // marker board on the target's top plate, yawed -90 deg
    return {Rot3::rot_z(-1.5707963267948966), {0.06, -0.07, 0.0}};
}

MarkerConfig base_marker_config(const ScenarioConfig& cfg) {
    MarkerConfig m;
    m.frame = FrameId::Base;
    m.marker_to_robot = base_marker_pose().inverse();
    m.fov_half_h = 0.7853981633974483;   // 45 deg
    m.fov_half_v = 0.5672320068981571;   // 32.5 deg
    m.camera_offset = cfg.controller.camera_offset;
    return m;
}

MarkerConfig target_marker_config(const ScenarioConfig& cfg) {
    MarkerConfig m = base_marker_config(cfg);
    m.frame = FrameId::Target;
    m.marker_to_robot = target_marker_pose().inverse();
    return m;
}

RigidTransform target_pose_world(const ScenarioConfig& cfg) {
    return compose(cfg.base_pose, cfg.target_pose);
}

void reseed(ScenarioConfig& cfg) {
    cfg.wind.seed = cfg.seed;
    cfg.noise.seed = cfg.seed;
}

ScenarioConfig load_scenario(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    ScenarioConfig cfg;
    Section top(root, "");
    top.str("name", cfg.name);
    top.num("seed", cfg.seed);
    top.num("max_duration_s", cfg.max_duration);
    top.vec("initial_position", cfg.initial_position);
    top.vec("a_priori_dir", cfg.controller.a_priori_dir);
    top.num("landing_error_margin", cfg.landing_error_margin);
    top.num("breach_level", cfg.breach_level);

    parse_pose(top.sub("base"), cfg.base_pose);
    parse_pose(top.sub("target"), cfg.target_pose);

    {
        Section s = top.sub("wind");
        s.vec("mean", cfg.wind.mean);
        s.vec("gust_amplitude", cfg.wind.gust_amplitude);
        s.num("gust_freq_hz", cfg.wind.gust_freq_hz);
        s.vec("torque_disturbance", cfg.wind.torque_disturbance);
        s.done();
    }
    {
        Section s = top.sub("noise");
        s.num("pos_sigma", cfg.noise.pos_sigma);
        s.num("rot_sigma", cfg.noise.rot_sigma);
        s.num("vel_sigma", cfg.noise.vel_sigma);
        s.vec("vel_bias", cfg.noise.vel_bias);
        s.done();
    }
    {
        Section s = top.sub("vehicle");
        s.num("mass", cfg.vehicle.mass);
        Vec3 inertia{cfg.vehicle.inertia.m[0][0], cfg.vehicle.inertia.m[1][1],
                     cfg.vehicle.inertia.m[2][2]};
        s.vec("inertia_diag", inertia);
        cfg.vehicle.inertia = Mat3::diag(inertia);
        s.num("drag_coeff", cfg.vehicle.drag_coeff);
        s.num("gear_height", cfg.gear_height);
        s.num("ramp_time_s", cfg.ramp_time);
        s.done();
    }
    {
        Section s = top.sub("gains");
        ControllerGains& g = cfg.controller.gains;
        s.gain("k_nominal", g.k_nominal);
        s.gain("k_v", g.k_v);
        s.num("eta_kappa", g.eta_kappa);
        s.num("eta_m", g.eta_m);
        s.gain("kp_att", g.kp_att);
        s.gain("kd_att", g.kd_att);
        s.gain("ki_att", g.ki_att);
        s.num("dead_zone", g.dead_zone);
        s.done();
    }
    {
        Section s = top.sub("cbf");
        ControllerConfig& c = cfg.controller;
        s.num("theta_fov_rad", c.theta_fov);
        s.num("alpha_v", c.alpha_v);
        s.num("alpha_d", c.alpha_d);
        s.vec("velocity_box", c.box.limits);
        s.num("focus_altitude", c.thresholds.focus_altitude);
        s.num("landing_altitude", c.thresholds.landing_altitude);
        s.num("ball_radius", c.thresholds.ball_radius);
        s.num("yaw_tol_rad", c.thresholds.yaw_tol);
        s.num("touchdown_margin", c.thresholds.touchdown_margin);
        s.done();
    }
    {
        Section s = top.sub("fault");
        ControllerConfig& c = cfg.controller;
        s.num("loss_window_s", c.loss_window);
        s.num("hold_s", c.fault_hold);
        s.num("climb_speed", c.fault_climb_speed);
        s.num("give_up_s", c.fault_give_up);
        s.num("align_radius", c.align_radius);
        s.done();
    }
    {
        Section s = top.sub("schedule");
        s.num("physics_hz", cfg.schedule.physics_hz);
        s.num("inner_hz", cfg.schedule.inner_hz);
        s.num("outer_hz", cfg.schedule.outer_hz);
        s.done();
    }
    top.done();

    validate(cfg);
    reseed(cfg);
    return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return load_scenario(text.str());
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
    const ControllerConfig& c = cfg.controller;
    const ControllerGains& g = c.gains;
    json root = {
        {"name", cfg.name},
        {"seed", cfg.seed},
        {"max_duration_s", cfg.max_duration},
        {"initial_position", vec_json(cfg.initial_position)},
        {"a_priori_dir", vec_json(c.a_priori_dir)},
        {"landing_error_margin", cfg.landing_error_margin},
        {"breach_level", cfg.breach_level},
        {"base", {{"yaw_rad", yaw_of(cfg.base_pose)}, {"position", vec_json(cfg.base_pose.translation)}}},
        {"target", {{"yaw_rad", yaw_of(cfg.target_pose)}, {"position", vec_json(cfg.target_pose.translation)}}},
        {"wind",
         {{"mean", vec_json(cfg.wind.mean)},
          {"gust_amplitude", vec_json(cfg.wind.gust_amplitude)},
          {"gust_freq_hz", cfg.wind.gust_freq_hz},
          {"torque_disturbance", vec_json(cfg.wind.torque_disturbance)}}},
        {"noise",
         {{"pos_sigma", cfg.noise.pos_sigma},
          {"rot_sigma", cfg.noise.rot_sigma},
          {"vel_sigma", cfg.noise.vel_sigma},
          {"vel_bias", vec_json(cfg.noise.vel_bias)}}},
        {"vehicle",
         {{"mass", cfg.vehicle.mass},
          {"inertia_diag", json::array({cfg.vehicle.inertia.m[0][0], cfg.vehicle.inertia.m[1][1],
                                        cfg.vehicle.inertia.m[2][2]})},
          {"drag_coeff", cfg.vehicle.drag_coeff},
          {"gear_height", cfg.gear_height},
          {"ramp_time_s", cfg.ramp_time}}},
        {"gains",
         {{"k_nominal", gain_json(g.k_nominal)},
          {"k_v", gain_json(g.k_v)},
          {"eta_kappa", g.eta_kappa},
          {"eta_m", g.eta_m},
          {"kp_att", gain_json(g.kp_att)},
          {"kd_att", gain_json(g.kd_att)},
          {"ki_att", gain_json(g.ki_att)},
          {"dead_zone", g.dead_zone}}},
        {"cbf",
         {{"theta_fov_rad", c.theta_fov},
          {"alpha_v", c.alpha_v},
          {"alpha_d", c.alpha_d},
          {"velocity_box", vec_json(c.box.limits)},
          {"focus_altitude", c.thresholds.focus_altitude},
          {"landing_altitude", c.thresholds.landing_altitude},
          {"ball_radius", c.thresholds.ball_radius},
          {"yaw_tol_rad", c.thresholds.yaw_tol},
          {"touchdown_margin", c.thresholds.touchdown_margin}}},
        {"fault",
         {{"loss_window_s", c.loss_window},
          {"hold_s", c.fault_hold},
          {"climb_speed", c.fault_climb_speed},
          {"give_up_s", c.fault_give_up},
          {"align_radius", c.align_radius}}},
        {"schedule",
         {{"physics_hz", cfg.schedule.physics_hz},
          {"inner_hz", cfg.schedule.inner_hz},
          {"outer_hz", cfg.schedule.outer_hz}}},
    };
    return root.dump(2);
}

ScenarioConfig override_field(const ScenarioConfig& cfg, const std::string& dotted_path,
                              const std::string& json_value) {
    json root = json::parse(scenario_to_json(cfg));
    json value;
    try {
        value = json::parse(json_value);
    } catch (const json::parse_error&) {
        bad(dotted_path, "value is not valid JSON: " + json_value);
    }

    json* node = &root;
    std::string part;
    std::istringstream path(dotted_path);
    std::string walked;
    while (std::getline(path, part, '.')) {
        walked = join(walked, part.c_str());
        if (node->is_array()) {
            // numeric segment selects an element, e.g. wind.mean.0
            bool digits = !part.empty() && part.size() <= 9 &&
                          part.find_first_not_of("0123456789") == std::string::npos;
            if (!digits || std::stoul(part) >= node->size()) bad(walked, "unknown field");
            node = &(*node)[std::stoul(part)];
        } else {
            if (!node->is_object() || !node->contains(part)) bad(walked, "unknown field");
            node = &(*node)[part];
        }
    }
    *node = value;
    return load_scenario(root.dump());
}

ScenarioConfig preset(const std::string& name) {
    ScenarioConfig cfg;
    cfg.wind.mean = {3.5, 3.5, 0.0};  // about 5 m/s horizontal
    cfg.wind.gust_amplitude = {0.7, 0.7, 0.0};
    cfg.wind.gust_freq_hz = 0.5;
    cfg.noise.pos_sigma = 0.005;
    cfg.noise.rot_sigma = 0.0087266462599716477;  // 0.5 deg

    if (name == "run1") {
        cfg.name = "run1";
        cfg.seed = 1;
        cfg.target_pose = {Rot3::rot_z(-1.5707963267948966), {1.1, -0.1, -0.07}};
        cfg.controller.a_priori_dir = {1.0, 0.0, 0.0};
    } else if (name == "run2") {
        cfg.name = "run2";
        cfg.seed = 2;
        cfg.target_pose = {Rot3::rot_z(std::atan2(0.65, -0.76)), {-1.0, -0.5, -0.07}};
        cfg.controller.a_priori_dir = {-1.0, 0.0, 0.0};
    } else {
        throw ConfigError("preset: unknown preset '" + name + "' (run1, run2)");
    }
    reseed(cfg);
    return cfg;
}

}  // namespace cbfnav
