#include "qsts/io/config.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qsts/io/network_io.hpp"

namespace qsts {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

std::string dir_of(const std::string& path) {
    const auto pos = path.find_last_of('/');
    return pos == std::string::npos ? std::string() : path.substr(0, pos + 1);
}

std::string resolve(const std::string& base_dir, const std::string& p) {
    if (p.empty() || p.front() == '/') return p;
    return base_dir + p;
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string raw = ss.str();

    json doc;
    try {
        doc = json::parse(raw);
    } catch (const json::parse_error& e) {
        throw IoError(path + ": " + e.what());
    }

    RunConfig cfg;
    cfg.config_path = path;
    cfg.config_hash = fnv1a(raw);
    const std::string base = dir_of(path);

    if (!doc.contains("network")) throw ConfigError(path + ": missing 'network'");
    if (!doc.contains("profiles")) throw ConfigError(path + ": missing 'profiles'");
    cfg.network_path = resolve(base, doc.at("network").get<std::string>());
    cfg.profiles_path = resolve(base, doc.at("profiles").get<std::string>());
    if (doc.contains("peak_calendar"))
        cfg.peak_calendar_path = resolve(base, doc.at("peak_calendar").get<std::string>());
    cfg.output_dir = doc.value("output_dir", "run");
    cfg.seed = doc.value("seed", 1u);

    if (doc.contains("engine")) {
        const json& e = doc["engine"];
        cfg.engine.resolution_minutes = e.value("resolution_minutes", 5);
        cfg.engine.horizon_steps = e.value("horizon_steps", 0L);
        cfg.engine.start_timestamp = e.value("start", std::string("2035-01-01T00:00:00"));
        cfg.engine.max_injection_per_substep_mw = e.value("max_injection_per_substep_mw", 100.0);
        cfg.engine.record_every = e.value("record_every", 1);
    }
    if (doc.contains("powerflow")) {
        const json& p = doc["powerflow"];
        cfg.powerflow.tolerance = p.value("tolerance", 1e-8);
        cfg.powerflow.max_iterations = p.value("max_iterations", 30);
        if (p.contains("damping_schedule"))
            cfg.powerflow.damping_schedule = p["damping_schedule"].get<std::vector<double>>();
        cfg.powerflow.enforce_q_limits = p.value("enforce_q_limits", true);
        cfg.powerflow.mode = p.value("mode", std::string("newton_raphson")) == "fast_decoupled"
                                 ? PowerFlowSettings::Mode::fast_decoupled
                                 : PowerFlowSettings::Mode::newton_raphson;
    }
    if (doc.contains("operator")) {
        const json& o = doc["operator"];
        cfg.thresholds.balance_threshold_mw = o.value("balance_threshold_mw", 5.0);
        cfg.thresholds.dguoo_band_mw = o.value("dguoo_band_mw", 100.0);
        cfg.thresholds.agc_reserve_min_mw = o.value("agc_reserve_min_mw", 100.0);
        cfg.thresholds.deadband_low_pu = o.value("deadband_low_pu", 0.02);
        cfg.thresholds.deadband_high_pu = o.value("deadband_high_pu", 0.02);
        cfg.thresholds.switching_cooldown_steps = o.value("switching_cooldown_steps", 3);
        cfg.thresholds.voltage_reduction_block_pu = o.value("voltage_reduction_block_pu", 0.02);
        cfg.thresholds.compensator_step_pu = o.value("compensator_step_pu", 0.01);
        cfg.thresholds.max_control_passes = o.value("max_control_passes", 3);
        cfg.thresholds.max_sequence_passes = o.value("max_sequence_passes", 2);
        cfg.thresholds.peak_charging_block =
            o.value("peak_charging_block", std::string("surplus_only")) == "all_charging"
                ? PeakChargingBlock::all_charging
                : PeakChargingBlock::surplus_only;
    }
    if (doc.contains("ess")) {
        const json& e = doc["ess"];
        cfg.limit_source = e.value("limit_source", std::string("computed")) == "supplied"
                               ? LimitSource::supplied
                               : LimitSource::computed;
        if (e.contains("history_profiles"))
            cfg.history_profiles_path = resolve(base, e.at("history_profiles").get<std::string>());
        cfg.sigma = e.value("sigma", std::string("sample")) == "population"
                        ? SigmaEstimator::population
                        : SigmaEstimator::sample;
        for (const auto& p : e.value("periods", json::array()))
            cfg.periods.ranges.push_back({p.at("period").get<int>(), p.at("start_day").get<int>(),
                                          p.at("end_day").get<int>()});
        for (const auto& l : e.value("supplied_limits", json::array())) {
            GenerationLimits lim;
            lim.zone = l.at("zone").get<std::string>();
            lim.period = l.at("period").get<int>();
            lim.gen_max_lim = l.at("gen_max_lim").get<double>();
            lim.gen_min_lim = l.at("gen_min_lim").get<double>();
            lim.mu = l.value("mu", 0.5 * (lim.gen_max_lim + lim.gen_min_lim));
            lim.sigma = l.value("sigma", (lim.gen_max_lim - lim.mu) / 1.5);
            cfg.supplied_limits.push_back(std::move(lim));
        }
    }
    if (cfg.periods.ranges.empty()) cfg.periods.ranges.push_back({1, 0, 100000});
    if (doc.contains("scheduler")) {
        const json& s = doc["scheduler"];
        cfg.mode = s.value("mode", std::string("sequential")) == "parallel"
                       ? RunPlan::Mode::parallel
                       : RunPlan::Mode::sequential;
        cfg.workers = s.value("workers", 1);
        cfg.warm_in_steps = s.value("warm_in_steps", 12L);
    }
    const json monitors = doc.value("reserve_monitors", json::object());
    for (const auto& [name, ids] : monitors.items())
        cfg.reserve_monitor_ids.push_back({name, ids.get<std::vector<std::string>>()});

    if (const char* env = std::getenv("QSTS_OUTPUT_DIR")) cfg.output_dir = env;
    if (const char* env = std::getenv("QSTS_WORKERS")) cfg.workers = std::atoi(env);
    return cfg;
}

PeakCalendar load_peak_calendar(const std::string& path, int resolution_minutes) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open peak calendar '" + path + "'");
    PeakCalendar peak;
    const long steps_per_day = 24L * 60 / resolution_minutes;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.find("day") != std::string::npos) continue;  // header
        }
        long day, start_min, end_min;
        if (std::sscanf(line.c_str(), "%ld,%ld,%ld", &day, &start_min, &end_min) != 3)
            throw IoError(path + ": bad calendar row '" + line + "'");
        const long base = day * steps_per_day;
        peak.add(base + start_min / resolution_minutes, base + end_min / resolution_minutes);
    }
    peak.validate_within_day(steps_per_day);
    return peak;
}

void write_peak_calendar(const PeakCalendar& peak, int resolution_minutes,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write peak calendar '" + path + "'");
    out << "day,start_minute,end_minute\n";
    const long steps_per_day = 24L * 60 / resolution_minutes;
    for (const auto& iv : peak.intervals) {
        const long day = iv.start / steps_per_day;
        out << day << ',' << (iv.start - day * steps_per_day) * resolution_minutes << ','
            << (iv.end - day * steps_per_day) * resolution_minutes << '\n';
    }
}

std::map<std::string, std::vector<double>> zone_wind_history(const NetworkModel& model,
                                                             const TimeSeriesDataset& profiles) {
    std::map<std::string, std::vector<double>> hist;
    for (const auto& s : profiles.series) {
        if (s.kind != ProfileKind::gen_p) continue;
        const Generator& g = model.generators[s.device_index];
        if (g.kind != GeneratorKind::wind) continue;
        const std::string& zone = model.buses[model.bus_of(g.bus)].zone;
        auto& acc = hist[zone];
        if (acc.empty()) acc.assign(profiles.steps, 0.0);
        for (long t = 0; t < profiles.steps; ++t) acc[t] += s.values[t];
    }
    return hist;
}

std::vector<int> sample_periods(const TimeSeriesDataset& profiles, const PeriodMap& periods) {
    const long steps_per_day = 24L * 60 / profiles.resolution_minutes;
    std::vector<int> out(profiles.steps);
    for (long t = 0; t < profiles.steps; ++t)
        out[t] = periods.period_of_day(static_cast<int>(t / steps_per_day));
    return out;
}

std::unique_ptr<LoadedCase> load_case(const RunConfig& config) {
    auto lc = std::make_unique<LoadedCase>();
    lc->config = config;
    lc->model = load_network(config.network_path);
    const ValidationReport rep = validate(lc->model);
    if (!rep.ok()) {
        std::string what = "network validation failed:";
        for (const auto& v : rep.violations) what += " [" + v.kind + " " + v.device + "]";
        throw ConfigError(what);
    }
    lc->profiles = load_profiles(config.profiles_path, lc->model);

    SimulationCase& sim = lc->sim;
    sim.model = &lc->model;
    sim.profiles = &lc->profiles;
    sim.engine = config.engine;
    sim.engine.resolution_minutes = lc->profiles.resolution_minutes;
    if (sim.engine.horizon_steps <= 0 || sim.engine.horizon_steps > lc->profiles.steps)
        sim.engine.horizon_steps = lc->profiles.steps;
    sim.engine.start_timestamp = lc->profiles.start_timestamp;
    sim.powerflow = config.powerflow;
    sim.thresholds = config.thresholds;
    sim.periods = config.periods;

    if (!config.peak_calendar_path.empty())
        sim.peak = load_peak_calendar(config.peak_calendar_path, sim.engine.resolution_minutes);

    if (!lc->model.ess_units.empty()) {
        if (config.limit_source == LimitSource::supplied) {
            sim.limits = config.supplied_limits;
        } else {
            const TimeSeriesDataset* history = &lc->profiles;
            TimeSeriesDataset separate;
            if (!config.history_profiles_path.empty() &&
                config.history_profiles_path != config.profiles_path) {
                separate = load_profiles(config.history_profiles_path, lc->model);
                history = &separate;
            }
            sim.limits = compute_limits(zone_wind_history(lc->model, *history),
                                        sample_periods(*history, config.periods), config.sigma);
        }
    }

    for (const auto& [name, ids] : config.reserve_monitor_ids) {
        std::vector<int> gens;
        for (const std::string& id : ids)
            for (std::size_t gi = 0; gi < lc->model.generators.size(); ++gi)
                if (lc->model.generators[gi].id == id) gens.push_back(static_cast<int>(gi));
        sim.reserve_monitors.push_back({name, std::move(gens)});
    }
    return lc;
}

}  // namespace qsts
