#include "qsts/network/model.hpp"

#include <cmath>
#include <queue>
#include <set>

namespace qsts {

int Transformer::min_position() const {
    // smallest integer p with ratio(p) >= tap_min
    return static_cast<int>(std::ceil((tap_min - 1.0) / tap_step - 1e-9));
}

int Transformer::max_position() const {
    return static_cast<int>(std::floor((tap_max - 1.0) / tap_step + 1e-9));
}

void NetworkModel::finalize() {
    bus_index.clear();
    for (std::size_t i = 0; i < buses.size(); ++i) bus_index[buses[i].id] = static_cast<int>(i);
}

namespace {

void check_ref(const NetworkModel& m, ValidationReport& rep, const std::string& owner,
               const std::string& bus_id) {
    if (m.bus_of(bus_id) < 0) {
        rep.violations.push_back({"unresolved reference", owner, 0.0,
                                  "references undefined bus '" + bus_id + "'"});
    }
}

void add(ValidationReport& rep, std::string kind, std::string device, double mag = 0.0,
         std::string detail = {}) {
    rep.violations.push_back({std::move(kind), std::move(device), mag, std::move(detail)});
}

}  // namespace

ValidationReport validate(const NetworkModel& model) {
    ValidationReport rep;
    const std::size_t n = model.buses.size();
    if (n == 0) {
        add(rep, "empty model", model.name);
        return rep;
    }
    if (model.system_base_mva <= 0.0) add(rep, "invalid base", model.name, model.system_base_mva);

    std::set<std::string> seen;
    for (const auto& bus : model.buses) {
        if (!seen.insert(bus.id).second) add(rep, "duplicate bus id", bus.id);
        if (bus.base_kv <= 0.0) add(rep, "invalid base_kv", bus.id, bus.base_kv);
        if (bus.v_min >= bus.v_max) add(rep, "limit inversion", bus.id, bus.v_min - bus.v_max);
        if (bus.kind != BusKind::pq &&
            (bus.voltage_target <= bus.v_min || bus.voltage_target > bus.v_max)) {
            add(rep, "target outside limits", bus.id, bus.voltage_target);
        }
    }

    for (const auto& br : model.branches) {
        check_ref(model, rep, br.id, br.from_bus);
        check_ref(model, rep, br.id, br.to_bus);
        if (br.from_bus == br.to_bus) add(rep, "self loop", br.id);
        if (br.reactance == 0.0) add(rep, "zero reactance", br.id);
        if (br.thermal_limit_mva <= 0.0) add(rep, "invalid thermal limit", br.id, br.thermal_limit_mva);
    }
    for (const auto& tr : model.transformers) {
        check_ref(model, rep, tr.id, tr.from_bus);
        check_ref(model, rep, tr.id, tr.to_bus);
        if (tr.reactance == 0.0) add(rep, "zero reactance", tr.id);
        if (tr.deadband <= 0.0) add(rep, "invalid deadband", tr.id, tr.deadband);
        if (tr.tap_step <= 0.0) {
            add(rep, "invalid tap step", tr.id, tr.tap_step);
        } else {
            const double ratio = tr.ratio();
            if (ratio < tr.tap_min - 1e-9 || ratio > tr.tap_max + 1e-9)
                add(rep, "tap outside range", tr.id, ratio);
        }
        if (!tr.regulated_bus.empty() && tr.regulated_bus != tr.to_bus)
            add(rep, "regulated bus must be to-side", tr.id, 0.0, tr.regulated_bus);
    }
    for (const auto& sh : model.shunts) {
        check_ref(model, rep, sh.id, sh.bus);
        if (sh.steps_on < 0 || sh.steps_on > sh.steps_total)
            add(rep, "shunt steps out of range", sh.id, sh.steps_on);
        if (sh.step_mvar <= 0.0) add(rep, "invalid shunt step size", sh.id, sh.step_mvar);
    }
    for (const auto& gen : model.generators) {
        check_ref(model, rep, gen.id, gen.bus);
        if (gen.p_min > gen.p_max) add(rep, "limit inversion", gen.id, gen.p_min - gen.p_max);
        if (gen.q_min > gen.q_max) add(rep, "limit inversion", gen.id, gen.q_min - gen.q_max);
        if (gen.kind == GeneratorKind::dispatchable &&
            (gen.optimal_dispatch < gen.p_min || gen.optimal_dispatch > gen.p_max))
            add(rep, "optimal dispatch outside range", gen.id, gen.optimal_dispatch);
        if (gen.ramp_up < 0.0 || gen.ramp_down < 0.0) add(rep, "negative ramp rate", gen.id);
    }
    for (const auto& load : model.loads) check_ref(model, rep, load.id, load.bus);
    for (const auto& ess : model.ess_units) {
        check_ref(model, rep, ess.id, ess.bus);
        if (ess.soc_pct < 0.0 || ess.soc_pct > 100.0) add(rep, "soc out of range", ess.id, ess.soc_pct);
        if (ess.soc_balance_pct <= 0.0 || ess.soc_balance_pct >= 100.0)
            add(rep, "soc balance out of range", ess.id, ess.soc_balance_pct);
        if (ess.charge_efficiency <= 0.0 || ess.charge_efficiency > 1.0 ||
            ess.discharge_efficiency <= 0.0 || ess.discharge_efficiency > 1.0)
            add(rep, "invalid efficiency", ess.id);
        if (ess.power_capacity_mw <= 0.0 || ess.energy_capacity_mwh <= 0.0)
            add(rep, "invalid ess capacity", ess.id);
    }
    for (const auto& tie : model.interties) {
        check_ref(model, rep, tie.id, tie.bus);
        if (tie.schedule_limit_min > tie.schedule_limit_max)
            add(rep, "limit inversion", tie.id);
        if (tie.current_schedule < tie.schedule_limit_min - 1e-9 ||
            tie.current_schedule > tie.schedule_limit_max + 1e-9)
            add(rep, "schedule outside limits", tie.id, tie.current_schedule);
    }
    for (const auto& dr : model.demand_resources) {
        check_ref(model, rep, dr.id, dr.bus);
        if (dr.capacity_mw <= 0.0) add(rep, "invalid capacity", dr.id, dr.capacity_mw);
        if (dr.activation_delay < 0) add(rep, "negative activation delay", dr.id);
    }

    // island analysis over in-service elements
    std::vector<std::vector<int>> adj(n);
    auto connect = [&](const std::string& a, const std::string& b) {
        int ia = model.bus_of(a), ib = model.bus_of(b);
        if (ia >= 0 && ib >= 0) {
            adj[ia].push_back(ib);
            adj[ib].push_back(ia);
        }
    };
    for (const auto& br : model.branches)
        if (br.in_service) connect(br.from_bus, br.to_bus);
    for (const auto& tr : model.transformers) connect(tr.from_bus, tr.to_bus);

    std::vector<int> island(n, -1);
    int islands = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (island[s] >= 0) continue;
        std::queue<int> q;
        q.push(static_cast<int>(s));
        island[s] = islands;
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            for (int w : adj[v])
                if (island[w] < 0) {
                    island[w] = islands;
                    q.push(w);
                }
        }
        ++islands;
    }

    std::vector<int> slack_count(islands, 0);
    std::vector<bool> has_load(islands, false);
    for (std::size_t i = 0; i < n; ++i)
        if (model.buses[i].kind == BusKind::slack) ++slack_count[island[i]];
    for (const auto& load : model.loads) {
        int ib = model.bus_of(load.bus);
        if (ib >= 0) has_load[island[ib]] = true;
    }
    for (int isl = 0; isl < islands; ++isl) {
        if (has_load[isl] && slack_count[isl] == 0) {
            std::string sample;
            for (std::size_t i = 0; i < n; ++i)
                if (island[i] == isl) {
                    sample = model.buses[i].id;
                    break;
                }
            add(rep, "load island without slack", sample, 0.0,
                "island " + std::to_string(isl));
        }
        if (slack_count[isl] > 1)
            add(rep, "multiple slack buses in island", std::to_string(isl),
                slack_count[isl]);
    }
    return rep;
}

double to_per_unit(const NetworkModel& model, Quantity q, double value, int bus) {
    if (q == Quantity::kv) {
        if (bus < 0 || bus >= static_cast<int>(model.buses.size()))
            throw ConfigError("kV per-unit conversion needs a bus");
        const double base = model.buses[bus].base_kv;
        if (base <= 0.0) throw ConfigError("zero voltage base at bus " + model.buses[bus].id);
        return value / base;
    }
    if (model.system_base_mva <= 0.0) throw ConfigError("zero system MVA base");
    return value / model.system_base_mva;
}

double from_per_unit(const NetworkModel& model, Quantity q, double value, int bus) {
    if (q == Quantity::kv) {
        if (bus < 0 || bus >= static_cast<int>(model.buses.size()))
            throw ConfigError("kV per-unit conversion needs a bus");
        const double base = model.buses[bus].base_kv;
        if (base <= 0.0) throw ConfigError("zero voltage base at bus " + model.buses[bus].id);
        return value * base;
    }
    if (model.system_base_mva <= 0.0) throw ConfigError("zero system MVA base");
    return value * model.system_base_mva;
}

}  // namespace qsts
