#include "qsts/io/network_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace qsts {

using nlohmann::json;

namespace {

std::string get_string(const json& j, const char* key, const std::string& owner) {
    if (!j.contains(key)) throw IoError(owner + ": missing field '" + key + "'");
    return j.at(key).get<std::string>();
}

double get_num(const json& j, const char* key, const std::string& owner,
               std::optional<double> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw IoError(owner + ": missing field '" + key + "'");
    }
    return j.at(key).get<double>();
}

BusKind bus_kind(const std::string& s, const std::string& owner) {
    if (s == "slack") return BusKind::slack;
    if (s == "pv") return BusKind::pv;
    if (s == "pq") return BusKind::pq;
    throw IoError(owner + ": unknown bus kind '" + s + "'");
}

}  // namespace

NetworkModel parse_network(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw IoError(origin + ": " + e.what());
    }

    NetworkModel m;
    m.name = doc.value("name", "unnamed");
    m.system_base_mva = doc.value("system_base_mva", 100.0);
    const bool ohms = doc.value("impedance_units", std::string("per_unit")) == "ohms";

    for (const auto& j : doc.value("buses", json::array())) {
        Bus b;
        b.id = get_string(j, "id", origin);
        b.base_kv = get_num(j, "base_kv", b.id);
        b.kind = bus_kind(j.value("kind", "pq"), b.id);
        b.voltage_target = j.value("voltage_target", 1.0);
        b.v_min = j.value("v_min", 0.9);
        b.v_max = j.value("v_max", 1.1);
        b.voltage_class = j.value("class", "high") == std::string("low") ? VoltageClass::low
                                                                         : VoltageClass::high;
        b.zone = j.value("zone", "");
        m.buses.push_back(std::move(b));
    }
    m.finalize();

    auto z_base = [&](const std::string& bus_id) {
        const int bi = m.bus_of(bus_id);
        if (bi < 0) return 1.0;
        const double kv = m.buses[bi].base_kv;
        return kv * kv / m.system_base_mva;
    };

    for (const auto& j : doc.value("branches", json::array())) {
        Branch br;
        br.id = get_string(j, "id", origin);
        br.from_bus = get_string(j, "from", br.id);
        br.to_bus = get_string(j, "to", br.id);
        const double zb = ohms ? z_base(br.from_bus) : 1.0;
        br.resistance = get_num(j, "r", br.id, 0.0) / zb;
        br.reactance = get_num(j, "x", br.id) / zb;
        br.charging = get_num(j, "b", br.id, 0.0) * zb;  // susceptance scales inversely
        br.thermal_limit_mva = get_num(j, "limit_mva", br.id);
        br.switchable = j.value("switchable", false);
        br.in_service = j.value("in_service", true);
        m.branches.push_back(std::move(br));
    }
    for (const auto& j : doc.value("transformers", json::array())) {
        Transformer tr;
        tr.id = get_string(j, "id", origin);
        tr.from_bus = get_string(j, "from", tr.id);
        tr.to_bus = get_string(j, "to", tr.id);
        tr.resistance = j.value("r", 0.0);
        tr.reactance = get_num(j, "x", tr.id);
        tr.tap_min = j.value("tap_min", 0.9);
        tr.tap_max = j.value("tap_max", 1.1);
        tr.tap_step = j.value("tap_step", 0.0125);
        tr.tap_position = j.value("tap_position", 0);
        tr.regulated_bus = j.value("regulated_bus", tr.to_bus);
        tr.deadband = j.value("deadband", 0.02);
        m.transformers.push_back(std::move(tr));
    }
    for (const auto& j : doc.value("shunts", json::array())) {
        ShuntBank sh;
        sh.id = get_string(j, "id", origin);
        sh.bus = get_string(j, "bus", sh.id);
        sh.kind = j.value("kind", "capacitor") == std::string("reactor") ? ShuntKind::reactor
                                                                         : ShuntKind::capacitor;
        sh.step_mvar = get_num(j, "step_mvar", sh.id);
        sh.steps_total = j.value("steps_total", 1);
        sh.steps_on = j.value("steps_on", 0);
        m.shunts.push_back(std::move(sh));
    }
    for (const auto& j : doc.value("generators", json::array())) {
        Generator g;
        g.id = get_string(j, "id", origin);
        g.bus = get_string(j, "bus", g.id);
        const std::string kind = j.value("kind", "dispatchable");
        g.kind = kind == "wind" ? GeneratorKind::wind
                 : kind == "compensator" ? GeneratorKind::compensator
                                         : GeneratorKind::dispatchable;
        g.p_min = j.value("p_min", 0.0);
        g.p_max = j.value("p_max", 0.0);
        g.q_min = j.value("q_min", 0.0);
        g.q_max = j.value("q_max", 0.0);
        g.ramp_up = j.value("ramp_up", 0.0);
        g.ramp_down = j.value("ramp_down", 0.0);
        g.agc_participant = j.value("agc", false);
        g.optimal_dispatch = j.value("optimal_dispatch", 0.0);
        g.committed = j.value("committed", true);
        g.startup_priority = j.value("startup_priority", 0);
        m.generators.push_back(std::move(g));
    }
    for (const auto& j : doc.value("loads", json::array())) {
        Load l;
        l.id = get_string(j, "id", origin);
        l.bus = get_string(j, "bus", l.id);
        l.p_mw = j.value("p_mw", 0.0);
        l.q_mvar = j.value("q_mvar", 0.0);
        m.loads.push_back(std::move(l));
    }
    for (const auto& j : doc.value("ess", json::array())) {
        EssUnit e;
        e.id = get_string(j, "id", origin);
        e.bus = get_string(j, "bus", e.id);
        e.zone = j.value("zone", "");
        e.power_capacity_mw = get_num(j, "power_mw", e.id);
        e.energy_capacity_mwh = get_num(j, "energy_mwh", e.id);
        e.soc_pct = j.value("soc_pct", 50.0);
        e.soc_balance_pct = j.value("soc_balance_pct", 50.0);
        e.charge_efficiency = j.value("charge_eff", 1.0);
        e.discharge_efficiency = j.value("discharge_eff", 1.0);
        m.ess_units.push_back(std::move(e));
    }
    for (const auto& j : doc.value("interties", json::array())) {
        Intertie t;
        t.id = get_string(j, "id", origin);
        t.bus = get_string(j, "bus", t.id);
        t.direction = j.value("direction", "import") == std::string("export")
                          ? IntertieDirection::export_
                          : IntertieDirection::import;
        t.schedule_limit_min = j.value("limit_min", 0.0);
        t.schedule_limit_max = get_num(j, "limit_max", t.id);
        t.current_schedule = j.value("schedule", 0.0);
        m.interties.push_back(std::move(t));
    }
    for (const auto& j : doc.value("demand_resources", json::array())) {
        DemandResource d;
        d.id = get_string(j, "id", origin);
        d.bus = get_string(j, "bus", d.id);
        d.kind = j.value("kind", "interruptible_demand") == std::string("voltage_reduction_block")
                     ? DemandResourceKind::voltage_reduction_block
                     : DemandResourceKind::interruptible_demand;
        d.capacity_mw = get_num(j, "capacity_mw", d.id);
        d.activation_delay = j.value("activation_delay", 0);
        d.max_duration = j.value("max_duration", 12);
        d.active = j.value("active", false);
        m.demand_resources.push_back(std::move(d));
    }
    for (const auto& z : doc.value("zones", json::array())) m.zones.push_back(z.get<std::string>());

    m.finalize();
    return m;
}

NetworkModel load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open network file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_network(ss.str(), path);
}

std::string network_to_json(const NetworkModel& m) {
    json doc;
    doc["name"] = m.name;
    doc["system_base_mva"] = m.system_base_mva;
    doc["impedance_units"] = "per_unit";
    for (const auto& b : m.buses) {
        json j{{"id", b.id},
               {"base_kv", b.base_kv},
               {"kind", b.kind == BusKind::slack ? "slack" : b.kind == BusKind::pv ? "pv" : "pq"},
               {"voltage_target", b.voltage_target},
               {"v_min", b.v_min},
               {"v_max", b.v_max},
               {"class", b.voltage_class == VoltageClass::low ? "low" : "high"}};
        if (!b.zone.empty()) j["zone"] = b.zone;
        doc["buses"].push_back(std::move(j));
    }
    for (const auto& br : m.branches)
        doc["branches"].push_back(json{{"id", br.id},
                                       {"from", br.from_bus},
                                       {"to", br.to_bus},
                                       {"r", br.resistance},
                                       {"x", br.reactance},
                                       {"b", br.charging},
                                       {"limit_mva", br.thermal_limit_mva},
                                       {"switchable", br.switchable},
                                       {"in_service", br.in_service}});
    for (const auto& tr : m.transformers)
        doc["transformers"].push_back(json{{"id", tr.id},
                                           {"from", tr.from_bus},
                                           {"to", tr.to_bus},
                                           {"r", tr.resistance},
                                           {"x", tr.reactance},
                                           {"tap_min", tr.tap_min},
                                           {"tap_max", tr.tap_max},
                                           {"tap_step", tr.tap_step},
                                           {"tap_position", tr.tap_position},
                                           {"regulated_bus", tr.regulated_bus},
                                           {"deadband", tr.deadband}});
    for (const auto& sh : m.shunts)
        doc["shunts"].push_back(json{{"id", sh.id},
                                     {"bus", sh.bus},
                                     {"kind", sh.kind == ShuntKind::reactor ? "reactor" : "capacitor"},
                                     {"step_mvar", sh.step_mvar},
                                     {"steps_total", sh.steps_total},
                                     {"steps_on", sh.steps_on}});
    for (const auto& g : m.generators)
        doc["generators"].push_back(
            json{{"id", g.id},
                 {"bus", g.bus},
                 {"kind", g.kind == GeneratorKind::wind ? "wind"
                          : g.kind == GeneratorKind::compensator ? "compensator"
                                                                 : "dispatchable"},
                 {"p_min", g.p_min},
                 {"p_max", g.p_max},
                 {"q_min", g.q_min},
                 {"q_max", g.q_max},
                 {"ramp_up", g.ramp_up},
                 {"ramp_down", g.ramp_down},
                 {"agc", g.agc_participant},
                 {"optimal_dispatch", g.optimal_dispatch},
                 {"committed", g.committed},
                 {"startup_priority", g.startup_priority}});
    for (const auto& l : m.loads)
        doc["loads"].push_back(
            json{{"id", l.id}, {"bus", l.bus}, {"p_mw", l.p_mw}, {"q_mvar", l.q_mvar}});
    for (const auto& e : m.ess_units)
        doc["ess"].push_back(json{{"id", e.id},
                                  {"bus", e.bus},
                                  {"zone", e.zone},
                                  {"power_mw", e.power_capacity_mw},
                                  {"energy_mwh", e.energy_capacity_mwh},
                                  {"soc_pct", e.soc_pct},
                                  {"soc_balance_pct", e.soc_balance_pct},
                                  {"charge_eff", e.charge_efficiency},
                                  {"discharge_eff", e.discharge_efficiency}});
    for (const auto& t : m.interties)
        doc["interties"].push_back(
            json{{"id", t.id},
                 {"bus", t.bus},
                 {"direction", t.direction == IntertieDirection::export_ ? "export" : "import"},
                 {"limit_min", t.schedule_limit_min},
                 {"limit_max", t.schedule_limit_max},
                 {"schedule", t.current_schedule}});
    for (const auto& d : m.demand_resources)
        doc["demand_resources"].push_back(
            json{{"id", d.id},
                 {"bus", d.bus},
                 {"kind", d.kind == DemandResourceKind::voltage_reduction_block
                              ? "voltage_reduction_block"
                              : "interruptible_demand"},
                 {"capacity_mw", d.capacity_mw},
                 {"activation_delay", d.activation_delay},
                 {"max_duration", d.max_duration},
                 {"active", d.active}});
    for (const auto& z : m.zones) doc["zones"].push_back(z);
    return doc.dump(2);
}

void write_network(const NetworkModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write network file '" + path + "'");
    out << network_to_json(model) << '\n';
}

}  // namespace qsts
