// Command-line front end: run scenarios from JSON configs or built-in
// presets, sweep one config field across values, or run the acceptance
// checks. Exit codes: 0 success, 1 scenario fault, 2 config error,
// 3 verification failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cbfnav/math_core.hpp"
#include "cbfnav/scenario.hpp"
#include "cbfnav/sim_harness.hpp"
#include "cbfnav/verification.hpp"

namespace {

std::string resolve_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("CBFNAV_OUT"); env != nullptr && *env != '\0') return env;
    return "./out";
}

int execute_run(cbfnav::ScenarioConfig cfg, bool have_seed, unsigned long long seed,
                const std::string& out_dir) {
    if (have_seed) {
        cfg.seed = seed;
        cbfnav::reseed(cfg);
    }
    cbfnav::RunResult res = cbfnav::run_scenario(cfg);

    std::filesystem::create_directories(out_dir);
    cbfnav::emit_csv(res.records, out_dir + "/telemetry.csv");
    cbfnav::emit_plot_data(res, cfg, out_dir);
    cbfnav::write_metrics(res.metrics, out_dir + "/metrics.json");
    std::ofstream echo(out_dir + "/config.json");
    echo << cbfnav::scenario_to_json(cfg) << '\n';

    const cbfnav::RunMetrics& m = res.metrics;
    std::printf("scenario %s seed %llu: %s\n", cfg.name.c_str(), cfg.seed, m.outcome.c_str());
    std::printf("  flight time %.2f s, landing error %.4f m, breach %.3f s\n", m.flight_time,
                m.landing_error, m.breach_duration);
    std::printf("  min h: visual %.4f, descent %.4f (approach) / %.4f (landing)\n", m.min_h_v,
                m.min_h_d_approaching, m.min_h_d_landing);
    std::printf("  telemetry hash %016llx, %zu records, artifacts in %s\n",
                cbfnav::telemetry_hash(res.records), res.records.size(), out_dir.c_str());
    return m.success ? 0 : 1;
}

nlohmann::json metrics_to_json(const cbfnav::RunMetrics& m) {
    return {{"landing_error_m", m.landing_error},
            {"min_h_v", m.min_h_v},
            {"min_h_d_approaching", m.min_h_d_approaching},
            {"min_h_d_landing", m.min_h_d_landing},
            {"flight_time_s", m.flight_time},
            {"breach_duration_s", m.breach_duration},
            {"success", m.success},
            {"outcome", m.outcome}};
}

int execute_sweep(const cbfnav::ScenarioConfig& base, const std::string& param,
                  const std::vector<std::string>& values, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    nlohmann::json aggregate = nlohmann::json::array();
    bool all_ok = true;

    // reject a bad path or value before any run burns time
    std::vector<cbfnav::ScenarioConfig> configs;
    configs.reserve(values.size());
    for (const std::string& value : values)
        configs.push_back(cbfnav::override_field(base, param, value));

    std::printf("%-20s %-24s %9s %8s %9s\n", param.c_str(), "outcome", "err_m", "t_s",
                "breach_s");
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::string& value = values[i];
        cbfnav::RunResult res = cbfnav::run_scenario(configs[i]);
        const cbfnav::RunMetrics& m = res.metrics;
        all_ok = all_ok && m.success;
        std::printf("%-20s %-24s %9.4f %8.2f %9.3f\n", value.c_str(), m.outcome.c_str(),
                    m.landing_error, m.flight_time, m.breach_duration);
        aggregate.push_back(
            {{"param", param}, {"value", nlohmann::json::parse(value)}, {"metrics", metrics_to_json(m)}});
    }

    std::ofstream out(out_dir + "/sweep.json");
    out << aggregate.dump(2) << '\n';
    std::printf("wrote %s/sweep.json (%zu runs)\n", out_dir.c_str(), values.size());
    return all_ok ? 0 : 1;
}

int execute_verify() {
    std::vector<cbfnav::CheckResult> results = cbfnav::run_verification();
    for (const cbfnav::CheckResult& r : results)
        std::printf("[%s] %-28s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str());
    bool ok = cbfnav::all_passed(results);
    std::printf("%zu checks, %s\n", results.size(), ok ? "all passed" : "FAILURES PRESENT");
    return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quadrotor ascent/landing simulator with a switched-barrier velocity filter"};
    app.require_subcommand(1);

    std::string run_config;
    std::string preset_name;
    std::string sweep_param;
    std::string sweep_config;
    std::string sweep_preset = "run1";
    std::string out_flag;
    std::vector<std::string> sweep_values;
    unsigned long long seed = 0;

    CLI::App* run_cmd = app.add_subcommand("run", "execute a scenario from a JSON config");
    run_cmd->add_option("--config", run_config, "scenario JSON path")->required();
    CLI::Option* run_seed = run_cmd->add_option("--seed", seed, "override the scenario seed");
    run_cmd->add_option("--out", out_flag, "output directory (default $CBFNAV_OUT or ./out)");

    CLI::App* preset_cmd = app.add_subcommand("preset", "execute a built-in scenario");
    preset_cmd->add_option("name", preset_name, "run1 or run2")->required();
    CLI::Option* preset_seed = preset_cmd->add_option("--seed", seed, "override the scenario seed");
    preset_cmd->add_option("--out", out_flag, "output directory (default $CBFNAV_OUT or ./out)");

    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "run a scenario once per value of one config field");
    sweep_cmd->add_option("--param", sweep_param, "dotted config path, e.g. wind.gust_freq_hz")
        ->required();
    sweep_cmd->add_option("--values", sweep_values, "one JSON value per run")
        ->required()
        ->expected(-1);
    sweep_cmd->add_option("--config", sweep_config, "base scenario JSON path");
    sweep_cmd->add_option("--preset", sweep_preset, "base preset when --config is absent");
    sweep_cmd->add_option("--out", out_flag, "output directory (default $CBFNAV_OUT or ./out)");

    CLI::App* verify_cmd = app.add_subcommand("verify", "run the acceptance checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // bad usage is a config problem; --help stays a success
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run_cmd->parsed())
            return execute_run(cbfnav::load_scenario_file(run_config), run_seed->count() > 0,
                               seed, resolve_out_dir(out_flag));
        if (preset_cmd->parsed())
            return execute_run(cbfnav::preset(preset_name), preset_seed->count() > 0, seed,
                               resolve_out_dir(out_flag));
        if (sweep_cmd->parsed()) {
            cbfnav::ScenarioConfig base = sweep_config.empty()
                                              ? cbfnav::preset(sweep_preset)
                                              : cbfnav::load_scenario_file(sweep_config);
            return execute_sweep(base, sweep_param, sweep_values, resolve_out_dir(out_flag));
        }
        if (verify_cmd->parsed()) return execute_verify();
    } catch (const cbfnav::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
