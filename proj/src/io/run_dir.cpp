#include "qsts/io/run_dir.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "qsts/io/network_io.hpp"
#include "qsts/io/profiles.hpp"
#include "qsts/io/timeutil.hpp"

namespace qsts {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'Q', 'S', 'T', 'S', 'S', 'T', 'O', 'R'};
constexpr std::uint32_t kStatesVersion = 1;

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void copy_file_into(const std::string& src, const fs::path& dst) {
    std::error_code ec;
    fs::copy_file(src, dst, fs::copy_options::overwrite_existing, ec);
    if (ec) throw IoError("cannot copy '" + src + "' into run directory: " + ec.message());
}

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
void put_vec(std::ofstream& out, const std::vector<T>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
void take(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
}

template <typename T>
void take_vec(std::ifstream& in, std::vector<T>& v, std::size_t n) {
    v.resize(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
}

const char* mode_name(EssMode m) {
    switch (m) {
        case EssMode::charging: return "charging";
        case EssMode::discharging: return "discharging";
        case EssMode::standby: return "standby";
    }
    return "?";
}

const char* class_name(EssClassification c) {
    switch (c) {
        case EssClassification::variability_mitigation: return "variability_mitigation";
        case EssClassification::soc_balancing: return "soc_balancing";
        case EssClassification::none: return "none";
    }
    return "?";
}

}  // namespace

void write_states_bin(const std::string& path, const AnnualResultStore& store,
                      const NetworkModel& model, const std::string& start_timestamp) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.write(kMagic, sizeof kMagic);
    put(out, kStatesVersion);
    const CooldownIndex slots(model);
    const std::uint64_t counts[] = {
        model.buses.size(),        model.generators.size(), model.transformers.size(),
        model.shunts.size(),       model.branches.size(),   model.ess_units.size(),
        model.demand_resources.size(), model.interties.size(), model.loads.size(),
        slots.total(),             static_cast<std::uint64_t>(store.states.size())};
    for (auto c : counts) put(out, c);
    put(out, static_cast<std::int64_t>(store.horizon_steps));
    put(out, static_cast<std::int32_t>(store.resolution_minutes));
    const std::uint32_t ts_len = static_cast<std::uint32_t>(start_timestamp.size());
    put(out, ts_len);
    out.write(start_timestamp.data(), ts_len);

    for (const SystemState& st : store.states) {
        put(out, static_cast<std::int64_t>(st.time_index));
        put(out, st.swing_residual_mw);
        put_vec(out, st.vm);
        put_vec(out, st.va);
        put_vec(out, st.v_setpoint);
        put_vec(out, st.gen_p);
        put_vec(out, st.gen_q);
        put_vec(out, st.gen_committed);
        put_vec(out, st.tap_position);
        put_vec(out, st.shunt_steps_on);
        put_vec(out, st.branch_in_service);
        put_vec(out, st.ess_soc);
        put_vec(out, st.ess_power);
        put_vec(out, st.dr_active);
        put_vec(out, st.dr_countdown);
        put_vec(out, st.dr_remaining);
        put_vec(out, st.tie_schedule);
        put_vec(out, st.load_p);
        put_vec(out, st.load_q);
        put_vec(out, st.device_last_action);
        put_vec(out, st.device_last_direction);
    }
}

void read_states_bin(const std::string& path, const NetworkModel& model,
                     AnnualResultStore& store) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[8];
    in.read(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw IoError(path + ": not a state store");
    std::uint32_t version = 0;
    take(in, version);
    if (version != kStatesVersion) throw IoError(path + ": unsupported version");
    std::uint64_t counts[11];
    for (auto& c : counts) take(in, c);
    std::int64_t horizon = 0;
    std::int32_t resolution = 0;
    take(in, horizon);
    take(in, resolution);
    store.horizon_steps = horizon;
    store.resolution_minutes = resolution;
    std::uint32_t ts_len = 0;
    take(in, ts_len);
    std::string start_timestamp(ts_len, '\0');
    in.read(start_timestamp.data(), ts_len);

    const CooldownIndex slots(model);
    const std::uint64_t expect[] = {
        model.buses.size(),        model.generators.size(), model.transformers.size(),
        model.shunts.size(),       model.branches.size(),   model.ess_units.size(),
        model.demand_resources.size(), model.interties.size(), model.loads.size(),
        slots.total()};
    for (int i = 0; i < 10; ++i)
        if (counts[i] != expect[i]) throw IoError(path + ": model/store dimension mismatch");

    store.states.clear();
    store.states.reserve(counts[10]);
    for (std::uint64_t k = 0; k < counts[10]; ++k) {
        SystemState st;
        std::int64_t t = 0;
        take(in, t);
        st.time_index = t;
        st.timestamp = add_minutes_iso(start_timestamp, t * static_cast<long>(resolution));
        take(in, st.swing_residual_mw);
        take_vec(in, st.vm, counts[0]);
        take_vec(in, st.va, counts[0]);
        take_vec(in, st.v_setpoint, counts[0]);
        take_vec(in, st.gen_p, counts[1]);
        take_vec(in, st.gen_q, counts[1]);
        take_vec(in, st.gen_committed, counts[1]);
        take_vec(in, st.tap_position, counts[2]);
        take_vec(in, st.shunt_steps_on, counts[3]);
        take_vec(in, st.branch_in_service, counts[4]);
        take_vec(in, st.ess_soc, counts[5]);
        take_vec(in, st.ess_power, counts[5]);
        take_vec(in, st.dr_active, counts[6]);
        take_vec(in, st.dr_countdown, counts[6]);
        take_vec(in, st.dr_remaining, counts[6]);
        take_vec(in, st.tie_schedule, counts[7]);
        take_vec(in, st.load_p, counts[8]);
        take_vec(in, st.load_q, counts[8]);
        take_vec(in, st.device_last_action, counts[9]);
        take_vec(in, st.device_last_direction, counts[9]);
        if (!in) throw IoError(path + ": truncated state record");
        store.states.push_back(std::move(st));
    }
}

void write_run_directory(const std::string& dir, const AnnualResultStore& store,
                         const LoadedCase& lc, const RunPlan& plan) {
    fs::create_directories(fs::path(dir) / "inputs");
    fs::create_directories(fs::path(dir) / "metrics");
    fs::create_directories(fs::path(dir) / "diagnostics");

    copy_file_into(lc.config.network_path, fs::path(dir) / "inputs/network.json");
    copy_file_into(lc.config.profiles_path, fs::path(dir) / "inputs/profiles.csv");
    if (!lc.config.peak_calendar_path.empty())
        copy_file_into(lc.config.peak_calendar_path, fs::path(dir) / "inputs/peaks.csv");
    copy_file_into(lc.config.config_path, fs::path(dir) / "inputs/config.json");

    json manifest;
    manifest["schema"] = "qsts-run-1";
    manifest["config_hash"] = lc.config.config_hash;
    manifest["seed"] = lc.config.seed;
    manifest["resolution_minutes"] = store.resolution_minutes;
    manifest["horizon_steps"] = store.horizon_steps;
    manifest["recorded_states"] = store.states.size();
    manifest["mode"] = plan.mode == RunPlan::Mode::parallel ? "parallel" : "sequential";
    manifest["worker_count"] = plan.worker_count;
    manifest["warm_in_steps"] = plan.warm_in_steps;
    for (const auto& seg : plan.segments)
        manifest["segments"].push_back(json{{"index", seg.index},
                                            {"t0", seg.t0},
                                            {"t1", seg.t1},
                                            {"init", seg.initialization == SegmentSpec::Init::base_case
                                                         ? "base_case"
                                                         : "chained"},
                                            {"warm_in", seg.warm_in_steps}});
    if (!lc.sim.limits.empty()) {
        for (const auto& lim : lc.sim.limits)
            manifest["generation_limits"].push_back(json{{"zone", lim.zone},
                                                         {"period", lim.period},
                                                         {"mu", lim.mu},
                                                         {"sigma", lim.sigma},
                                                         {"gen_max_lim", lim.gen_max_lim},
                                                         {"gen_min_lim", lim.gen_min_lim}});
    }
    for (const auto& r : lc.sim.periods.ranges)
        manifest["periods"].push_back(
            json{{"period", r.period}, {"start_day", r.start_day}, {"end_day", r.end_day}});
    std::ofstream mf(fs::path(dir) / "manifest.json");
    mf << manifest.dump(2) << '\n';

    write_states_bin((fs::path(dir) / "states.bin").string(), store, lc.model,
                     lc.sim.engine.start_timestamp);

    {
        std::ofstream out(fs::path(dir) / "actions.csv");
        out << "step,kind,device,before,after,trigger\n";
        for (const auto& a : store.actions)
            out << a.time_index << ',' << to_string(a.kind) << ',' << a.device << ','
                << fmt17(a.before) << ',' << fmt17(a.after) << ',' << a.trigger << '\n';
    }
    {
        std::ofstream out(fs::path(dir) / "ess.csv");
        out << "step,unit,mode,power_mw,soc_pct,classification,clipped\n";
        for (const auto& r : store.ess_trace)
            out << r.time_index << ',' << lc.model.ess_units[r.unit].id << ','
                << mode_name(r.mode) << ',' << fmt17(r.power_mw) << ',' << fmt17(r.soc_pct) << ','
                << class_name(r.classification) << ',' << (r.clipped ? 1 : 0) << '\n';
    }
    {
        std::ofstream out(fs::path(dir) / "diagnostics" / "steps.csv");
        out << "step,substeps,worst_substep_residual_mw,final_residual_mw,solves,rungs,"
               "agc_reserve_mw,reserve_shortfall_mw,unresolved_deficit_mw,unresolved_violations,"
               "concession\n";
        for (const auto& d : store.diagnostics)
            out << d.time_index << ',' << d.substeps << ',' << fmt17(d.worst_substep_residual_mw)
                << ',' << fmt17(d.final_residual_mw) << ',' << d.solves << ',' << d.rungs << ','
                << fmt17(d.agc_reserve_mw) << ',' << fmt17(d.reserve_shortfall_mw) << ','
                << fmt17(d.unresolved_deficit_mw) << ',' << d.unresolved_violations << ','
                << (d.concession ? 1 : 0) << '\n';
    }
    if (!store.failures.empty()) {
        std::ofstream out(fs::path(dir) / "diagnostics" / "failures.csv");
        out << "segment,step,substep,message\n";
        for (const auto& f : store.failures)
            out << f.segment_index << ',' << f.failure.time_index << ',' << f.failure.substep
                << ",\"" << f.failure.message << "\"\n";
        // solver trace of each failed ladder, one record per iteration
        std::ofstream trace(fs::path(dir) / "diagnostics" / "failure_traces.txt");
        for (const auto& f : store.failures) {
            trace << "segment " << f.segment_index << " step " << f.failure.time_index
                  << " substep " << f.failure.substep << '\n';
            for (const auto& it : f.failure.trace)
                trace << "  " << it.stage << " iter " << it.iteration << " mismatch "
                      << fmt17(it.max_mismatch) << " damping " << it.damping << '\n';
        }
    }
}

LoadedRun load_run_directory(const std::string& dir) {
    LoadedRun run;
    run.model = load_network((fs::path(dir) / "inputs/network.json").string());

    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw IoError("no manifest.json in '" + dir + "'");
    json manifest = json::parse(mf);
    run.store.horizon_steps = manifest.value("horizon_steps", 0L);
    run.store.resolution_minutes = manifest.value("resolution_minutes", 5);
    for (const auto& p : manifest.value("periods", json::array()))
        run.periods.ranges.push_back(
            {p.at("period").get<int>(), p.at("start_day").get<int>(), p.at("end_day").get<int>()});
    for (const auto& l : manifest.value("generation_limits", json::array())) {
        GenerationLimits lim;
        lim.zone = l.at("zone").get<std::string>();
        lim.period = l.at("period").get<int>();
        lim.mu = l.at("mu").get<double>();
        lim.sigma = l.at("sigma").get<double>();
        lim.gen_max_lim = l.at("gen_max_lim").get<double>();
        lim.gen_min_lim = l.at("gen_min_lim").get<double>();
        run.limits.push_back(std::move(lim));
    }

    read_states_bin((fs::path(dir) / "states.bin").string(), run.model, run.store);

    // actions
    {
        std::ifstream in(fs::path(dir) / "actions.csv");
        if (in) {
            std::string line;
            std::getline(in, line);  // header
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                OperatorAction a;
                char kind[48] = {0}, device[96] = {0};
                double before = 0, after = 0;
                long step = 0;
                // trigger may contain spaces; parse the first five fields
                const int got = std::sscanf(line.c_str(), "%ld,%47[^,],%95[^,],%lf,%lf", &step,
                                            kind, device, &before, &after);
                if (got != 5) continue;
                a.time_index = step;
                a.kind = action_kind_from_string(kind);
                a.device = device;
                a.before = before;
                a.after = after;
                const auto pos = line.rfind(',');
                if (pos != std::string::npos) a.trigger = line.substr(pos + 1);
                run.store.actions.push_back(std::move(a));
            }
        }
    }
    // ess trace
    {
        std::ifstream in(fs::path(dir) / "ess.csv");
        if (in) {
            std::string line;
            std::getline(in, line);
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                char unit[96] = {0}, mode[24] = {0}, cls[32] = {0};
                long step = 0;
                double power = 0, soc = 0;
                int clipped = 0;
                if (std::sscanf(line.c_str(), "%ld,%95[^,],%23[^,],%lf,%lf,%31[^,],%d", &step, unit,
                                mode, &power, &soc, cls, &clipped) != 7)
                    continue;
                EssTraceRow r;
                r.time_index = step;
                r.unit = -1;
                for (std::size_t ei = 0; ei < run.model.ess_units.size(); ++ei)
                    if (run.model.ess_units[ei].id == unit) r.unit = static_cast<int>(ei);
                if (r.unit < 0) continue;
                r.mode = std::strcmp(mode, "charging") == 0      ? EssMode::charging
                         : std::strcmp(mode, "discharging") == 0 ? EssMode::discharging
                                                                 : EssMode::standby;
                r.power_mw = power;
                r.soc_pct = soc;
                r.classification = std::strcmp(cls, "variability_mitigation") == 0
                                       ? EssClassification::variability_mitigation
                                   : std::strcmp(cls, "soc_balancing") == 0
                                       ? EssClassification::soc_balancing
                                       : EssClassification::none;
                r.clipped = clipped != 0;
                run.store.ess_trace.push_back(r);
            }
        }
    }

    std::ifstream cf(fs::path(dir) / "inputs/config.json");
    if (cf) {
        run.config = load_config((fs::path(dir) / "inputs/config.json").string());
    }
    return run;
}

}  // namespace qsts
