#pragma once

// Shared engine-level fixture: a small mixed network plus programmatic
// profile construction.

#include <map>

#include "cases.hpp"
#include "qsts/engine/engine.hpp"

namespace qsts::testing {

/// Slack/AGC complex at b1, a wind bus, and two loads; optionally an ESS at
/// the wind bus and a low-voltage bus with a capacitor behind a transformer.
inline NetworkModel engine_net(bool with_ess = false, bool with_low_bus = false) {
    NetworkModel m;
    m.name = "enginecase";
    m.zones = {"Z"};
    m.buses.push_back(make_bus("b1", BusKind::slack, 1.0));
    m.buses.push_back(make_bus("b2", BusKind::pq));
    m.buses.push_back(make_bus("b3", BusKind::pq));
    m.buses.back().zone = "Z";
    m.branches.push_back(make_line("l12", "b1", "b2", 0.002, 0.05, 0.02, 2000.0));
    m.branches.push_back(make_line("l13", "b1", "b3", 0.002, 0.05, 0.02, 2000.0));
    m.branches.push_back(make_line("l23", "b2", "b3", 0.003, 0.08, 0.02, 2000.0));

    Generator g1;
    g1.id = "g1";
    g1.bus = "b1";
    g1.p_min = 0.0;
    g1.p_max = 1500.0;
    g1.q_min = -600.0;
    g1.q_max = 900.0;
    g1.ramp_up = g1.ramp_down = 100.0;
    g1.agc_participant = true;
    g1.optimal_dispatch = 300.0;
    m.generators.push_back(g1);

    Generator wind;
    wind.id = "w1";
    wind.bus = "b3";
    wind.kind = GeneratorKind::wind;
    wind.p_min = 0.0;
    wind.p_max = 500.0;
    wind.q_min = wind.q_max = 0.0;
    m.generators.push_back(wind);

    m.loads.push_back({"ld2", "b2", 250.0, 40.0});
    m.loads.push_back({"ld3", "b3", 100.0, 15.0});

    if (with_ess) {
        EssUnit ess;
        ess.id = "bess";
        ess.bus = "b3";
        ess.zone = "Z";
        ess.power_capacity_mw = 86.0;
        ess.energy_capacity_mwh = 344.0;
        ess.soc_pct = 50.0;
        ess.soc_balance_pct = 50.0;
        m.ess_units.push_back(ess);
    }
    if (with_low_bus) {
        m.buses.push_back(make_bus("lv", BusKind::pq, 1.0, VoltageClass::low));
        Transformer tr;
        tr.id = "tr";
        tr.from_bus = "b2";
        tr.to_bus = "lv";
        tr.reactance = 0.08;
        tr.tap_min = 0.9;
        tr.tap_max = 1.1;
        tr.tap_step = 0.0125;
        tr.regulated_bus = "lv";
        tr.deadband = 0.02;
        m.transformers.push_back(tr);
        ShuntBank cap;
        cap.id = "cap";
        cap.bus = "lv";
        cap.kind = ShuntKind::capacitor;
        cap.step_mvar = 25.0;
        cap.steps_total = 4;
        cap.steps_on = 0;
        m.shunts.push_back(cap);
        m.loads.push_back({"ldlv", "lv", 40.0, 10.0});
    }
    m.finalize();
    return m;
}

/// Builds a dataset from explicit per-device series; entries shorter than
/// `steps` are padded by repeating the last value.
inline TimeSeriesDataset make_dataset(
    const NetworkModel& model, int resolution_minutes, long steps,
    const std::map<std::string, std::vector<double>>& by_device) {
    TimeSeriesDataset ds;
    ds.resolution_minutes = resolution_minutes;
    ds.start_timestamp = "2035-01-01T00:00:00";
    ds.steps = steps;
    auto pad = [&](std::vector<double> v) {
        if (v.empty()) v.push_back(0.0);
        while (static_cast<long>(v.size()) < steps) v.push_back(v.back());
        return v;
    };
    for (const auto& [key, values] : by_device) {
        TimeSeriesDataset::Series s;
        // "<id>" for active power, "<id>/q" for reactive
        const bool reactive = key.size() > 2 && key.substr(key.size() - 2) == "/q";
        const std::string id = reactive ? key.substr(0, key.size() - 2) : key;
        s.device_id = id;
        for (std::size_t i = 0; i < model.loads.size(); ++i)
            if (model.loads[i].id == id) {
                s.kind = reactive ? ProfileKind::load_q : ProfileKind::load_p;
                s.device_index = static_cast<int>(i);
            }
        for (std::size_t i = 0; i < model.generators.size(); ++i)
            if (model.generators[i].id == id) {
                s.kind = ProfileKind::gen_p;
                s.device_index = static_cast<int>(i);
            }
        for (std::size_t i = 0; i < model.interties.size(); ++i)
            if (model.interties[i].id == id) {
                s.kind = ProfileKind::intertie_schedule;
                s.device_index = static_cast<int>(i);
            }
        if (s.device_index < 0) throw Error("fixture references unknown device " + id);
        s.values = pad(values);
        ds.series.push_back(std::move(s));
    }
    return ds;
}

inline SimulationCase make_case(const NetworkModel& model, const TimeSeriesDataset& profiles,
                                int resolution_minutes = 5) {
    SimulationCase sim;
    sim.model = &model;
    sim.profiles = &profiles;
    sim.engine.resolution_minutes = resolution_minutes;
    sim.engine.horizon_steps = profiles.steps;
    sim.engine.max_injection_per_substep_mw = 100.0;
    sim.thresholds.dguoo_band_mw = 500.0;     // commitment out of the way by default
    sim.thresholds.agc_reserve_min_mw = 10.0;
    sim.thresholds.deadband_high_pu = 0.05;   // wide EHV band for the small fixtures
    GenerationLimits lim;
    lim.zone = "Z";
    lim.period = 1;
    lim.mu = 250.0;
    lim.sigma = 100.0;
    lim.gen_min_lim = 100.0;
    lim.gen_max_lim = 400.0;
    sim.limits.push_back(lim);
    sim.periods.ranges.push_back({1, 0, 100000});
    return sim;
}

}  // namespace qsts::testing
