#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "qsts/analyzer/analyzer.hpp"
#include "qsts/io/config.hpp"
#include "qsts/io/example.hpp"
#include "qsts/io/network_io.hpp"
#include "qsts/io/run_dir.hpp"
#include "qsts/kernels/kernels.hpp"
#include "qsts/scheduler/scheduler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qsts;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitSimulation = 2;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

int cmd_validate(const std::string& config_path, bool as_json) {
    try {
        const RunConfig cfg = load_config(config_path);
        auto lc = load_case(cfg);
        if (as_json) {
            json out{{"ok", true},
                     {"network", lc->model.name},
                     {"buses", lc->model.buses.size()},
                     {"steps", lc->profiles.steps},
                     {"resolution_minutes", lc->profiles.resolution_minutes},
                     {"config_hash", cfg.config_hash}};
            std::cout << out.dump() << '\n';
        } else {
            std::cout << "ok: network '" << lc->model.name << "' with " << lc->model.buses.size()
                      << " buses, " << lc->profiles.steps << " profile steps at "
                      << lc->profiles.resolution_minutes << "-min resolution\n";
        }
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "validation failed: " << e.what() << '\n';
        return kExitValidation;
    }
}

RunPlan plan_from(const RunConfig& cfg, const SimulationCase& sim) {
    return make_plan(sim.engine.horizon_steps, sim.engine.resolution_minutes, cfg.mode,
                     cfg.workers, cfg.warm_in_steps);
}

void write_metrics(const std::string& dir, const LoadedRun& run) {
    const MetricWindow window = MetricWindow::all(run.store);
    fs::create_directories(fs::path(dir) / "metrics");
    std::ofstream longf(fs::path(dir) / "metrics/long_format.csv");
    longf << "metric,key,step_or_window,value\n";

    {
        const LossSeries ls = losses(run.store, run.model, window);
        std::ofstream out(fs::path(dir) / "metrics/losses.csv");
        out << "step,injection_mw,branch_mw\n";
        for (std::size_t i = 0; i < ls.steps.size(); ++i) {
            out << ls.steps[i] << ',' << fmt(ls.injection_mw[i]) << ',' << fmt(ls.branch_mw[i])
                << '\n';
            longf << "loss_mw,system," << ls.steps[i] << ',' << fmt(ls.injection_mw[i]) << '\n';
        }
        longf << "loss_mean_mw,system,year," << fmt(ls.mean_mw) << '\n';
        longf << "loss_max_mw,system,year," << fmt(ls.max_mw) << '\n';
    }
    {
        const auto counts = switching_counts(run.store, window);
        std::ofstream out(fs::path(dir) / "metrics/switching_counts.csv");
        out << "device,disconnects,reconnects,tap_ops,shunt_ops\n";
        for (const auto& [device, c] : counts) {
            out << device << ',' << c.disconnects << ',' << c.reconnects << ',' << c.tap_ops << ','
                << c.shunt_ops << '\n';
            longf << "switching,disconnects:" << device << ",year," << c.disconnects << '\n';
            longf << "switching,reconnects:" << device << ",year," << c.reconnects << '\n';
        }
    }
    {
        const auto stats = voltage_statistics(run.store, run.model, window);
        std::ofstream out(fs::path(dir) / "metrics/voltage_stats.csv");
        out << "bus,median,q1,q3,min,max,excursions,longest_run,samples\n";
        for (const auto& v : stats) {
            out << v.bus << ',' << fmt(v.median) << ',' << fmt(v.q1) << ',' << fmt(v.q3) << ','
                << fmt(v.min) << ',' << fmt(v.max) << ',' << v.excursions << ',' << v.longest_run
                << ',' << v.samples << '\n';
            longf << "voltage_median,," << v.bus << ',' << fmt(v.median) << '\n';
        }
    }
    {
        const auto flex = flexibility(run.store, run.model, window);
        std::ofstream out(fs::path(dir) / "metrics/flexibility.csv");
        out << "step,pii_mw,pde_mw\n";
        for (std::size_t i = 0; i < flex.steps.size(); ++i)
            out << flex.steps[i] << ',' << fmt(flex.pii_mw[i]) << ',' << fmt(flex.pde_mw[i])
                << '\n';
    }
    if (!run.model.ess_units.empty()) {
        const auto util = ess_utilization(run.store, run.model, window);
        std::ofstream out(fs::path(dir) / "metrics/ess_utilization.csv");
        out << "unit,mitigation_charge_mwh,mitigation_discharge_mwh,balancing_charge_mwh,"
               "balancing_discharge_mwh,marketable_ratio\n";
        for (const auto& u : util) {
            out << u.unit << ',' << fmt(u.ledger.mitigation.charge_mwh) << ','
                << fmt(u.ledger.mitigation.discharge_mwh) << ','
                << fmt(u.ledger.balancing.charge_mwh) << ','
                << fmt(u.ledger.balancing.discharge_mwh) << ','
                << (u.marketable_ratio ? fmt(*u.marketable_ratio) : "absent") << '\n';
        }
        const auto daily = ess_daily_ledgers(run.store, run.model, window);
        std::ofstream dout(fs::path(dir) / "metrics/ess_daily.csv");
        dout << "unit,day,mitigation_charge_mwh,mitigation_discharge_mwh,balancing_charge_mwh,"
                "balancing_discharge_mwh\n";
        for (const auto& [key, ledger] : daily)
            dout << key.first << ',' << key.second << ',' << fmt(ledger.mitigation.charge_mwh)
                 << ',' << fmt(ledger.mitigation.discharge_mwh) << ','
                 << fmt(ledger.balancing.charge_mwh) << ',' << fmt(ledger.balancing.discharge_mwh)
                 << '\n';
        std::ofstream gout(fs::path(dir) / "metrics/generation_distribution.csv");
        gout << "zone,period,samples,gen_min_lim,gen_max_lim,base_above_max,net_above_max,"
                "base_below_min,net_below_min,capped_steps,base_p50,net_p50\n";
        for (const auto& lim : run.limits) {
            const auto d = generation_distribution(run.store, run.model, lim.zone, lim.period,
                                                   run.periods, lim, window);
            if (d.samples == 0) continue;
            gout << d.zone << ',' << d.period << ',' << d.samples << ',' << fmt(d.gen_min_lim)
                 << ',' << fmt(d.gen_max_lim) << ',' << d.base_above_max << ',' << d.net_above_max
                 << ',' << d.base_below_min << ',' << d.net_below_min << ',' << d.capped_steps
                 << ',' << fmt(d.quantiles_base[3]) << ',' << fmt(d.quantiles_net[3]) << '\n';
        }
    }
    {
        const LoadHeatmap hm = load_heatmap(run.store, run.model);
        std::ofstream out(fs::path(dir) / "metrics/load_heatmap.csv");
        const std::size_t weeks = hm.day_by_week.empty() ? 0 : hm.day_by_week[0].size();
        out << "day_of_week";
        for (std::size_t w = 0; w < weeks; ++w) out << ",W" << w + 1;
        out << '\n';
        for (std::size_t d = 0; d < hm.day_by_week.size(); ++d) {
            out << d;
            for (double v : hm.day_by_week[d]) out << ',' << fmt(v);
            out << '\n';
        }
    }
    {
        const auto margin = reactive_margin_series(run.store, run.model, window);
        std::ofstream out(fs::path(dir) / "metrics/reactive_margin.csv");
        out << "step,q_margin_mvar\n";
        for (std::size_t i = 0; i < margin.size(); ++i)
            out << window.t0 + static_cast<long>(i) << ',' << fmt(margin[i]) << '\n';
    }
}

int cmd_run(const std::string& config_path, bool as_json) {
    std::unique_ptr<LoadedCase> lc;
    try {
        lc = load_case(load_config(config_path));
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    try {
        const RunPlan plan = plan_from(lc->config, lc->sim);
        const AnnualResultStore store = execute(plan, lc->sim);
        write_run_directory(lc->config.output_dir, store, *lc, plan);
        const bool clean = store.failures.empty();
        if (as_json) {
            json out{{"ok", clean},
                     {"output_dir", lc->config.output_dir},
                     {"recorded_states", store.states.size()},
                     {"actions", store.actions.size()},
                     {"segment_failures", store.failures.size()},
                     {"kernel", kernels::backend_name(kernels::active())}};
            std::cout << out.dump() << '\n';
        } else {
            std::cout << "run complete: " << store.states.size() << " states, "
                      << store.actions.size() << " operator actions -> " << lc->config.output_dir
                      << '\n';
            for (const auto& f : store.failures)
                std::cout << "segment " << f.segment_index << " failed at step "
                          << f.failure.time_index << ": " << f.failure.message << '\n';
        }
        return clean ? kExitOk : kExitSimulation;
    } catch (const Error& e) {
        std::cerr << "simulation failed: " << e.what() << '\n';
        return kExitSimulation;
    }
}

int cmd_analyze(const std::string& run_dir, const std::string& metric,
                const std::string& window_arg, bool as_json) {
    try {
        LoadedRun run = load_run_directory(run_dir);
        MetricWindow window = MetricWindow::all(run.store);
        if (!window_arg.empty() && window_arg != "year") {
            long a = 0, b = 0;
            if (std::sscanf(window_arg.c_str(), "day:%ld", &a) == 1)
                window = MetricWindow::day(run.store, static_cast<int>(a));
            else if (std::sscanf(window_arg.c_str(), "week:%ld", &a) == 1)
                window = MetricWindow::week(run.store, static_cast<int>(a));
            else if (std::sscanf(window_arg.c_str(), "steps:%ld:%ld", &a, &b) == 2)
                window = MetricWindow{a, b};
            else
                throw ConfigError("unknown window '" + window_arg + "'");
        }
        write_metrics(run_dir, run);
        json summary;
        summary["run_dir"] = run_dir;
        summary["states"] = run.store.states.size();
        if (metric.empty() || metric == "losses") {
            const auto ls = losses(run.store, run.model, window);
            summary["loss_mean_mw"] = ls.mean_mw;
            summary["loss_max_mw"] = ls.max_mw;
        }
        if (metric.empty() || metric == "flexibility") {
            const auto flex = flexibility(run.store, run.model, window);
            double pii_min = 0.0;
            if (!flex.pii_mw.empty())
                pii_min = *std::min_element(flex.pii_mw.begin(), flex.pii_mw.end());
            summary["pii_min_mw"] = pii_min;
        }
        if (metric.empty() || metric == "ess") {
            for (const auto& u : ess_utilization(run.store, run.model, window)) {
                json ju{{"unit", u.unit}, {"total_mwh", u.ledger.total_mwh()}};
                if (u.marketable_ratio) ju["marketable_ratio"] = *u.marketable_ratio;
                summary["ess"].push_back(ju);
            }
        }
        if (as_json)
            std::cout << summary.dump() << '\n';
        else
            std::cout << "metrics written to " << run_dir << "/metrics ("
                      << run.store.states.size() << " states analyzed)\n";
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "analyze failed: " << e.what() << '\n';
        return kExitValidation;
    }
}

int cmd_resolution_study(const std::string& config_path, const std::string& resolutions_arg,
                         bool as_json) {
    try {
        auto lc = load_case(load_config(config_path));
        std::vector<int> resolutions;
        std::stringstream ss(resolutions_arg);
        std::string item;
        while (std::getline(ss, item, ',')) resolutions.push_back(std::stoi(item));
        const auto rows = resolution_study(lc->sim, resolutions);
        if (as_json) {
            json out = json::array();
            for (const auto& r : rows)
                out.push_back(json{{"resolution_minutes", r.resolution_minutes},
                                   {"wall_seconds", r.wall_seconds},
                                   {"loss_mean_mw", r.loss_mean_mw},
                                   {"loss_max_mw", r.loss_max_mw},
                                   {"steps", r.steps},
                                   {"failed", r.failed}});
            std::cout << out.dump() << '\n';
        } else {
            std::cout << "resolution  steps  wall_s  loss_mean_mw  loss_max_mw\n";
            for (const auto& r : rows)
                std::printf("%9d %6ld %7.2f %13.3f %12.3f%s\n", r.resolution_minutes, r.steps,
                            r.wall_seconds, r.loss_mean_mw, r.loss_max_mw,
                            r.failed ? "  FAILED" : "");
        }
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "resolution study failed: " << e.what() << '\n';
        return kExitSimulation;
    }
}

int cmd_limits(const std::string& profiles_path, const std::string& network_path,
               const std::string& periods_arg, bool as_json) {
    try {
        const NetworkModel model = load_network(network_path);
        const TimeSeriesDataset profiles = load_profiles(profiles_path, model);
        PeriodMap periods;
        if (periods_arg.empty()) {
            periods.ranges.push_back({1, 0, 100000});
        } else {
            std::stringstream ss(periods_arg);
            std::string item;
            while (std::getline(ss, item, ';')) {
                PeriodMap::Range r{};
                if (std::sscanf(item.c_str(), "%d:%d-%d", &r.period, &r.start_day, &r.end_day) != 3)
                    throw ConfigError("bad period spec '" + item + "' (want p:start-end)");
                periods.ranges.push_back(r);
            }
        }
        const auto lims =
            compute_limits(zone_wind_history(model, profiles), sample_periods(profiles, periods));
        if (as_json) {
            json out = json::array();
            for (const auto& l : lims)
                out.push_back(json{{"zone", l.zone},
                                   {"period", l.period},
                                   {"mu", l.mu},
                                   {"sigma", l.sigma},
                                   {"gen_max_lim", l.gen_max_lim},
                                   {"gen_min_lim", l.gen_min_lim}});
            std::cout << out.dump() << '\n';
        } else {
            std::cout << "zone  period  mu  sigma  gen_min_lim  gen_max_lim\n";
            for (const auto& l : lims)
                std::cout << l.zone << "  " << l.period << "  " << fmt(l.mu) << "  " << fmt(l.sigma)
                          << "  " << fmt(l.gen_min_lim) << "  " << fmt(l.gen_max_lim) << '\n';
        }
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "limits failed: " << e.what() << '\n';
        return kExitValidation;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Annual quasi-static time-series transmission grid simulator"};
    app.require_subcommand(1);
    bool as_json = false;
    auto add_json = [&as_json](CLI::App* sc) {
        sc->add_flag("--json", as_json, "machine-readable summary on stdout");
    };

    std::string config_path, run_dir, metric, window, resolutions = "5,15,30,60";
    std::string profiles_path, network_path, periods_arg, example_dir;
    int example_days = 365, example_resolution = 5;

    auto* validate_cmd = app.add_subcommand("validate", "check a run configuration and its inputs");
    validate_cmd->add_option("config", config_path)->required();
    add_json(validate_cmd);

    auto* run_cmd = app.add_subcommand("run", "execute a simulation run");
    run_cmd->add_option("config", config_path)->required();
    add_json(run_cmd);

    auto* analyze_cmd = app.add_subcommand("analyze", "compute metrics over a run directory");
    analyze_cmd->add_option("run_dir", run_dir)->required();
    analyze_cmd->add_option("--metric", metric, "losses|flexibility|ess (default: all)");
    analyze_cmd->add_option("--window", window, "year | day:N | week:N | steps:A:B");
    add_json(analyze_cmd);

    auto* res_cmd = app.add_subcommand("resolution-study", "run the horizon at several time-steps");
    res_cmd->add_option("config", config_path)->required();
    res_cmd->add_option("--resolutions", resolutions,
                        "comma-separated minutes (default 5,15,30,60)");
    add_json(res_cmd);

    auto* limits_cmd = app.add_subcommand("limits", "print per-zone generation limits");
    limits_cmd->add_option("profiles", profiles_path)->required();
    limits_cmd->add_option("--network", network_path)->required();
    limits_cmd->add_option("--periods", periods_arg, "e.g. 1:0-58;2:59-150");
    add_json(limits_cmd);

    auto* example_cmd = app.add_subcommand("make-example", "write the bundled example dataset");
    example_cmd->add_option("dir", example_dir)->required();
    example_cmd->add_option("--days", example_days);
    example_cmd->add_option("--resolution", example_resolution);

    CLI11_PARSE(app, argc, argv);

    if (validate_cmd->parsed()) return cmd_validate(config_path, as_json);
    if (run_cmd->parsed()) return cmd_run(config_path, as_json);
    if (analyze_cmd->parsed()) return cmd_analyze(run_dir, metric, window, as_json);
    if (res_cmd->parsed()) return cmd_resolution_study(config_path, resolutions, as_json);
    if (limits_cmd->parsed()) return cmd_limits(profiles_path, network_path, periods_arg, as_json);
    if (example_cmd->parsed()) {
        try {
            write_example(example_dir, example_days, example_resolution);
            std::cout << "example written to " << example_dir << '\n';
            return kExitOk;
        } catch (const Error& e) {
            std::cerr << "make-example failed: " << e.what() << '\n';
            return kExitValidation;
        }
    }
    return kExitOk;
}
