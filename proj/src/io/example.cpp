#include "qsts/io/example.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "qsts/io/config.hpp"
#include "qsts/io/network_io.hpp"

namespace qsts {

namespace {

Bus ehv(std::string id, BusKind kind, double target, std::string zone) {
    Bus b;
    b.id = std::move(id);
    b.base_kv = 735.0;
    b.kind = kind;
    b.voltage_target = target;
    b.v_min = 0.95;
    b.v_max = 1.05;
    b.voltage_class = VoltageClass::high;
    b.zone = std::move(zone);
    return b;
}

Bus dist(std::string id, std::string zone) {
    Bus b;
    b.id = std::move(id);
    b.base_kv = 25.0;
    b.kind = BusKind::pq;
    b.voltage_target = 1.0;
    b.v_min = 0.95;
    b.v_max = 1.05;
    b.voltage_class = VoltageClass::low;
    b.zone = std::move(zone);
    return b;
}

Branch line(std::string id, std::string from, std::string to, double x, double b,
            double limit = 2500.0, bool switchable = false) {
    Branch br;
    br.id = std::move(id);
    br.from_bus = std::move(from);
    br.to_bus = std::move(to);
    br.resistance = x / 12.0;  // EHV X/R around 12
    br.reactance = x;
    br.charging = b;
    br.thermal_limit_mva = limit;
    br.switchable = switchable;
    return br;
}

Transformer interface_tr(std::string id, std::string from, std::string to) {
    Transformer tr;
    tr.id = std::move(id);
    tr.from_bus = std::move(from);
    tr.to_bus = std::move(to);
    tr.resistance = 0.0005;
    tr.reactance = 0.01;
    tr.tap_min = 0.9;
    tr.tap_max = 1.1;
    tr.tap_step = 0.0125;
    tr.tap_position = 0;
    tr.regulated_bus = tr.to_bus;
    tr.deadband = 0.015;
    return tr;
}

ShuntBank cap_bank(std::string id, std::string bus, double step, int steps) {
    ShuntBank sh;
    sh.id = std::move(id);
    sh.bus = std::move(bus);
    sh.kind = ShuntKind::capacitor;
    sh.step_mvar = step;
    sh.steps_total = steps;
    sh.steps_on = 0;
    return sh;
}

ShuntBank reactor_bank(std::string id, std::string bus, double step, int steps, int on) {
    ShuntBank sh;
    sh.id = std::move(id);
    sh.bus = std::move(bus);
    sh.kind = ShuntKind::reactor;
    sh.step_mvar = step;
    sh.steps_total = steps;
    sh.steps_on = on;
    return sh;
}

Generator hydro(std::string id, std::string bus, double p_min, double p_max, double opt,
                int priority, bool committed = true) {
    Generator g;
    g.id = std::move(id);
    g.bus = std::move(bus);
    g.kind = GeneratorKind::dispatchable;
    g.p_min = p_min;
    g.p_max = p_max;
    g.q_min = -450.0;
    g.q_max = 550.0;
    g.ramp_up = g.ramp_down = 15.0;
    g.agc_participant = true;
    g.optimal_dispatch = opt;
    g.committed = committed;
    g.startup_priority = priority;
    return g;
}

Generator condenser(std::string id, std::string bus, double range) {
    Generator g;
    g.id = std::move(id);
    g.bus = std::move(bus);
    g.kind = GeneratorKind::compensator;
    g.q_min = -range;
    g.q_max = range;
    g.committed = true;
    return g;
}

Generator wind_farm(std::string id, std::string bus, double cap) {
    Generator g;
    g.id = std::move(id);
    g.bus = std::move(bus);
    g.kind = GeneratorKind::wind;
    g.p_max = cap;
    g.committed = true;
    return g;
}

double bump(double x, double width) { return std::exp(-x * x / (2.0 * width * width)); }

}  // namespace

NetworkModel example_network(bool with_storage) {
    NetworkModel m;
    m.name = with_storage ? "twozone-s2" : "twozone-s1";
    m.system_base_mva = 100.0;
    m.zones = {"East", "NonEast"};

    // twelve EHV buses
    m.buses.push_back(ehv("N1", BusKind::slack, 1.03, "NonEast"));
    m.buses.push_back(ehv("N2", BusKind::pq, 1.03, "NonEast"));
    m.buses.push_back(ehv("N3", BusKind::pq, 1.02, "NonEast"));
    m.buses.push_back(ehv("C1", BusKind::pq, 1.02, "NonEast"));
    m.buses.push_back(ehv("C2", BusKind::pq, 1.02, "NonEast"));
    m.buses.push_back(ehv("C3", BusKind::pq, 1.02, "NonEast"));
    m.buses.push_back(ehv("S1", BusKind::pq, 1.01, "NonEast"));
    m.buses.push_back(ehv("S2", BusKind::pq, 1.01, "NonEast"));
    m.buses.push_back(ehv("S3", BusKind::pq, 1.01, "East"));
    m.buses.push_back(ehv("S4", BusKind::pq, 1.01, "East"));
    m.buses.push_back(ehv("E1", BusKind::pq, 1.01, "East"));
    m.buses.push_back(ehv("W1", BusKind::pq, 1.02, "NonEast"));

    // fourteen distribution interfaces
    const char* hosts[][2] = {{"L1", "S1"}, {"L2", "S1"}, {"L3", "S2"}, {"L4", "S2"},
                              {"L5", "S3"}, {"L6", "S3"}, {"L7", "S4"}, {"L8", "S4"},
                              {"L9", "C1"}, {"L10", "C2"}, {"L11", "C3"}, {"L12", "N2"},
                              {"L13", "N3"}, {"L14", "E1"}};
    for (const auto& h : hosts) {
        const std::string zone =
            (h[1][0] == 'S' && (h[1][1] == '3' || h[1][1] == '4')) || h[1][0] == 'E' ? "East"
                                                                                     : "NonEast";
        m.buses.push_back(dist(h[0], zone));
        m.transformers.push_back(interface_tr(std::string("T") + h[0], h[1], h[0]));
    }

    // northern ties
    m.branches.push_back(line("N1N2", "N1", "N2", 0.005, 0.30));
    m.branches.push_back(line("N2N3", "N2", "N3", 0.005, 0.30));
    // corridor A with switchable pairs
    m.branches.push_back(line("A1", "N1", "C1", 0.007, 0.40, 2500.0, true));
    m.branches.push_back(line("A2", "N1", "C1", 0.007, 0.40, 2500.0, true));
    m.branches.push_back(line("C1C2", "C1", "C2", 0.005, 0.30));
    m.branches.push_back(line("B1", "C2", "S1", 0.007, 0.40, 2500.0, true));
    m.branches.push_back(line("B2", "C2", "S1", 0.007, 0.40, 2500.0, true));
    // corridor B
    m.branches.push_back(line("D1", "N2", "C3", 0.008, 0.45, 2500.0, true));
    m.branches.push_back(line("D2", "N2", "C3", 0.008, 0.45, 2500.0, true));
    m.branches.push_back(line("E1L", "C3", "S2", 0.007, 0.40, 2500.0, true));
    m.branches.push_back(line("E2L", "C3", "S2", 0.007, 0.40, 2500.0, true));
    m.branches.push_back(line("N3C3", "N3", "C3", 0.008, 0.45));
    // southern ring
    m.branches.push_back(line("S1S2", "S1", "S2", 0.004, 0.25));
    m.branches.push_back(line("S2S3", "S2", "S3", 0.004, 0.25));
    m.branches.push_back(line("S3S4", "S3", "S4", 0.004, 0.25));
    m.branches.push_back(line("S4S1", "S4", "S1", 0.004, 0.25));
    // wind connections and cross ties
    m.branches.push_back(line("E1S3", "E1", "S3", 0.006, 0.35));
    m.branches.push_back(line("E1S4", "E1", "S4", 0.006, 0.35, 2500.0, true));
    m.branches.push_back(line("W1C3", "W1", "C3", 0.006, 0.35));
    m.branches.push_back(line("W1C1", "W1", "C1", 0.009, 0.45, 2500.0, true));
    m.branches.push_back(line("C1C3", "C1", "C3", 0.008, 0.40, 2500.0, true));

    // EHV reactors against light-load charging, distribution capacitors
    m.shunts.push_back(reactor_bank("RC1", "C1", 150.0, 2, 1));
    m.shunts.push_back(reactor_bank("RC2", "C2", 150.0, 2, 1));
    m.shunts.push_back(reactor_bank("RC3", "C3", 150.0, 2, 1));
    m.shunts.push_back(reactor_bank("RS2", "S2", 100.0, 2, 0));
    m.shunts.push_back(reactor_bank("RE1", "E1", 80.0, 2, 0));
    for (const auto& h : hosts)
        m.shunts.push_back(cap_bank(std::string("C") + h[0], h[0],
                                    h[0][1] <= '8' && h[0][2] == '\0' ? 30.0 : 20.0, 4));

    // hydro complex
    m.generators.push_back(hydro("G1a", "N1", 100.0, 1200.0, 800.0, 1));
    m.generators.push_back(hydro("G1b", "N1", 100.0, 1200.0, 700.0, 2));
    m.generators.push_back(hydro("G1c", "N1", 50.0, 800.0, 400.0, 3));
    m.generators.push_back(hydro("G1d", "N1", 50.0, 600.0, 200.0, 4, false));
    m.generators.push_back(hydro("G2a", "N2", 100.0, 1000.0, 600.0, 2));
    m.generators.push_back(hydro("G2b", "N2", 50.0, 800.0, 300.0, 5, false));
    m.generators.push_back(hydro("G3", "N3", 50.0, 700.0, 350.0, 3));
    m.generators.push_back(condenser("SC1", "S1", 400.0));
    m.generators.push_back(condenser("SC2", "S3", 400.0));
    m.generators.push_back(condenser("SC3", "C2", 600.0));
    m.generators.push_back(wind_farm("WE", "E1", 600.0));
    m.generators.push_back(wind_farm("WN", "W1", 400.0));

    // distribution loads (base values; profiles scale them)
    const double south_base = 380.0, other_base = 120.0;
    for (const auto& h : hosts) {
        const bool south = h[0][1] <= '8' && h[0][2] == '\0';
        const double p = south ? south_base : other_base;
        m.loads.push_back({std::string("LD") + (h[0] + 1), h[0], p, p * 0.24});
    }

    if (with_storage) {
        EssUnit east;
        east.id = "BESS_E";
        east.bus = "E1";
        east.zone = "East";
        east.power_capacity_mw = 86.0;
        east.energy_capacity_mwh = 344.0;
        east.soc_pct = 50.0;
        east.soc_balance_pct = 50.0;
        m.ess_units.push_back(east);
        EssUnit noneast = east;
        noneast.id = "BESS_N";
        noneast.bus = "W1";
        noneast.zone = "NonEast";
        noneast.power_capacity_mw = 64.0;
        noneast.energy_capacity_mwh = 256.0;
        m.ess_units.push_back(noneast);
    }

    Intertie imp;
    imp.id = "TIE_IMP";
    imp.bus = "S4";
    imp.direction = IntertieDirection::import;
    imp.schedule_limit_min = 0.0;
    imp.schedule_limit_max = 500.0;
    imp.current_schedule = 200.0;
    m.interties.push_back(imp);
    Intertie exp;
    exp.id = "TIE_EXP";
    exp.bus = "N3";
    exp.direction = IntertieDirection::export_;
    exp.schedule_limit_min = 0.0;
    exp.schedule_limit_max = 300.0;
    exp.current_schedule = 80.0;
    m.interties.push_back(exp);

    DemandResource idr1;
    idr1.id = "IDR1";
    idr1.bus = "L3";
    idr1.kind = DemandResourceKind::interruptible_demand;
    idr1.capacity_mw = 50.0;
    idr1.activation_delay = 0;
    idr1.max_duration = 24;
    m.demand_resources.push_back(idr1);
    DemandResource idr2 = idr1;
    idr2.id = "IDR2";
    idr2.bus = "L6";
    idr2.capacity_mw = 40.0;
    idr2.activation_delay = 1;
    m.demand_resources.push_back(idr2);
    DemandResource vr;
    vr.id = "VR1";
    vr.bus = "L1";
    vr.kind = DemandResourceKind::voltage_reduction_block;
    vr.capacity_mw = 30.0;
    vr.activation_delay = 0;
    vr.max_duration = 12;
    m.demand_resources.push_back(vr);

    m.finalize();
    return m;
}

TimeSeriesDataset example_profiles(const NetworkModel& model, int resolution_minutes, int days,
                                   unsigned seed) {
    TimeSeriesDataset ds;
    ds.resolution_minutes = resolution_minutes;
    ds.start_timestamp = "2035-01-01T00:00:00";
    const long spd = 24L * 60 / resolution_minutes;
    ds.steps = days * spd;

    const double phase_jitter = 0.37 * seed;

    auto load_shape = [&](long t, double site_phase) {
        const double day = static_cast<double>(t) / spd;
        const double hour = (t % spd) * resolution_minutes / 60.0;
        const int dow = static_cast<int>(day) % 7;
        const double season = 0.70 + 0.30 * std::cos(2.0 * M_PI * (day - 10.0) / 365.0);
        const double daily = 0.80 + 0.13 * bump(hour - 7.5, 2.0) + 0.20 * bump(hour - 18.0, 2.6);
        const double week = dow >= 5 ? 0.93 : 1.0;
        const double wobble = 1.0 + 0.015 * std::sin(2.0 * M_PI * t / 37.0 + site_phase);
        return season * daily * week * wobble;
    };
    auto wind_shape = [&](long t, double zone_phase) {
        const double day = static_cast<double>(t) / spd;
        const double season = 0.55 + 0.25 * std::cos(2.0 * M_PI * (day - 20.0) / 365.0);
        const double synoptic =
            0.5 + 0.42 * std::sin(2.0 * M_PI * t / (3.2 * spd) + zone_phase + phase_jitter) +
            0.15 * std::sin(2.0 * M_PI * t / (0.9 * spd) + 1.7 * zone_phase) +
            0.08 * std::sin(2.0 * M_PI * t / 97.0 + 2.3 * zone_phase);
        const double x = season * synoptic;
        return std::clamp(x, 0.02, 0.98);
    };

    // loads: P and Q columns per distribution load
    for (std::size_t li = 0; li < model.loads.size(); ++li) {
        const Load& ld = model.loads[li];
        TimeSeriesDataset::Series p, q;
        p.device_id = ld.id;
        p.kind = ProfileKind::load_p;
        p.device_index = static_cast<int>(li);
        q.device_id = ld.id;
        q.kind = ProfileKind::load_q;
        q.device_index = static_cast<int>(li);
        const double site_phase = 0.61 * static_cast<double>(li);
        for (long t = 0; t < ds.steps; ++t) {
            const double shape = load_shape(t, site_phase);
            p.values.push_back(ld.p_mw * shape);
            q.values.push_back(ld.q_mvar * shape);
        }
        ds.series.push_back(std::move(p));
        ds.series.push_back(std::move(q));
    }
    // wind farms
    for (std::size_t gi = 0; gi < model.generators.size(); ++gi) {
        const Generator& g = model.generators[gi];
        if (g.kind != GeneratorKind::wind) continue;
        TimeSeriesDataset::Series s;
        s.device_id = g.id;
        s.kind = ProfileKind::gen_p;
        s.device_index = static_cast<int>(gi);
        const double zone_phase = model.buses[model.bus_of(g.bus)].zone == "East" ? 0.0 : 2.1;
        for (long t = 0; t < ds.steps; ++t) s.values.push_back(g.p_max * wind_shape(t, zone_phase));
        ds.series.push_back(std::move(s));
    }
    // interties
    for (std::size_t ti = 0; ti < model.interties.size(); ++ti) {
        const Intertie& tie = model.interties[ti];
        TimeSeriesDataset::Series s;
        s.device_id = tie.id;
        s.kind = ProfileKind::intertie_schedule;
        s.device_index = static_cast<int>(ti);
        for (long t = 0; t < ds.steps; ++t) {
            const double day = static_cast<double>(t) / spd;
            const double season = 0.5 + 0.5 * std::cos(2.0 * M_PI * (day - 10.0) / 365.0);
            double v;
            if (tie.direction == IntertieDirection::import)
                v = 150.0 + 120.0 * season + 30.0 * std::sin(2.0 * M_PI * t / (1.3 * spd));
            else
                v = 60.0 + 50.0 * (1.0 - season);
            v = std::clamp(v, tie.schedule_limit_min, tie.schedule_limit_max);
            s.values.push_back(v);
        }
        ds.series.push_back(std::move(s));
    }
    return ds;
}

PeakCalendar example_peak_calendar(int resolution_minutes, int days) {
    PeakCalendar peak;
    const long spd = 24L * 60 / resolution_minutes;
    for (int day = 0; day < days; ++day) {
        if (day % 7 >= 5) continue;  // weekend
        const long base = day * spd;
        peak.add(base + 6 * 60 / resolution_minutes, base + 9 * 60 / resolution_minutes);
        peak.add(base + 16 * 60 / resolution_minutes, base + 20 * 60 / resolution_minutes);
    }
    return peak;
}

void write_example(const std::string& dir, int days, int resolution_minutes) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const NetworkModel s2 = example_network(true);
    const NetworkModel s1 = example_network(false);
    write_network(s1, (fs::path(dir) / "network_s1.json").string());
    write_network(s2, (fs::path(dir) / "network_s2.json").string());
    const TimeSeriesDataset profiles = example_profiles(s2, resolution_minutes, days);
    write_profiles(profiles, (fs::path(dir) / "profiles.csv").string());
    write_peak_calendar(example_peak_calendar(resolution_minutes, days), resolution_minutes,
                        (fs::path(dir) / "peaks.csv").string());

    auto write_config = [&](const std::string& name, const std::string& network, bool parallel) {
        std::ofstream out(fs::path(dir) / name);
        out << "{\n"
            << "  \"network\": \"" << network << "\",\n"
            << "  \"profiles\": \"profiles.csv\",\n"
            << "  \"peak_calendar\": \"peaks.csv\",\n"
            << "  \"output_dir\": \"run_out\",\n"
            << "  \"engine\": {\"max_injection_per_substep_mw\": 150, \"record_every\": 1},\n"
            << "  \"powerflow\": {\"tolerance\": 1e-8, \"max_iterations\": 30},\n"
            << "  \"operator\": {\"balance_threshold_mw\": 5, \"dguoo_band_mw\": 220,\n"
            << "                 \"agc_reserve_min_mw\": 200, \"deadband_low_pu\": 0.015,\n"
            << "                 \"deadband_high_pu\": 0.02, \"switching_cooldown_steps\": 3},\n"
            << "  \"ess\": {\"limit_source\": \"computed\", \"sigma\": \"sample\",\n"
            << "            \"periods\": [\n"
            << "              {\"period\": 1, \"start_day\": 0, \"end_day\": 58},\n"
            << "              {\"period\": 2, \"start_day\": 59, \"end_day\": 150},\n"
            << "              {\"period\": 3, \"start_day\": 151, \"end_day\": 242},\n"
            << "              {\"period\": 4, \"start_day\": 243, \"end_day\": 303},\n"
            << "              {\"period\": 5, \"start_day\": 304, \"end_day\": 366}]},\n"
            << "  \"scheduler\": {\"mode\": \"" << (parallel ? "parallel" : "sequential")
            << "\", \"workers\": 4, \"warm_in_steps\": 12},\n"
            << "  \"reserve_monitors\": {\"ten_minute\": [\"G1a\", \"G1b\", \"G2a\"]}\n"
            << "}\n";
    };
    write_config("config_s1.json", "network_s1.json", true);
    write_config("config_s2.json", "network_s2.json", true);
    write_config("config_s1_seq.json", "network_s1.json", false);
    write_config("config_s2_seq.json", "network_s2.json", false);
}

}  // namespace qsts
