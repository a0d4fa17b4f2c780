#include "qsts/engine/state.hpp"

namespace qsts {

std::string to_string(ActionKind kind) {
    switch (kind) {
        case ActionKind::gen_redispatch: return "gen_redispatch";
        case ActionKind::gen_start: return "gen_start";
        case ActionKind::gen_stop: return "gen_stop";
        case ActionKind::tap_step: return "tap_step";
        case ActionKind::shunt_switch: return "shunt_switch";
        case ActionKind::line_disconnect: return "line_disconnect";
        case ActionKind::line_reconnect: return "line_reconnect";
        case ActionKind::compensator_setpoint: return "compensator_setpoint";
        case ActionKind::voltage_reduction: return "voltage_reduction";
        case ActionKind::demand_activation: return "demand_activation";
        case ActionKind::intertie_adjust: return "intertie_adjust";
    }
    return "unknown";
}

ActionKind action_kind_from_string(const std::string& s) {
    for (int k = 0; k <= static_cast<int>(ActionKind::intertie_adjust); ++k)
        if (to_string(static_cast<ActionKind>(k)) == s) return static_cast<ActionKind>(k);
    throw Error("unknown action kind '" + s + "'");
}

TopologyState SystemState::topology() const {
    TopologyState topo;
    topo.branch_in_service = branch_in_service;
    topo.tap_position = tap_position;
    topo.shunt_steps_on = shunt_steps_on;
    return topo;
}

SystemState SystemState::from_model(const NetworkModel& model) {
    SystemState s;
    const std::size_t n = model.buses.size();
    s.vm.assign(n, 1.0);
    s.va.assign(n, 0.0);
    s.v_setpoint.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.v_setpoint[i] = model.buses[i].voltage_target;
        if (model.buses[i].kind != BusKind::pq) s.vm[i] = model.buses[i].voltage_target;
    }
    s.gen_p.reserve(model.generators.size());
    for (const auto& g : model.generators) {
        s.gen_p.push_back(g.committed && g.kind == GeneratorKind::dispatchable ? g.optimal_dispatch
                                                                               : 0.0);
        s.gen_q.push_back(0.0);
        s.gen_committed.push_back(g.committed ? 1 : 0);
    }
    for (const auto& tr : model.transformers) s.tap_position.push_back(tr.tap_position);
    for (const auto& sh : model.shunts) s.shunt_steps_on.push_back(sh.steps_on);
    for (const auto& br : model.branches) s.branch_in_service.push_back(br.in_service ? 1 : 0);
    for (const auto& ess : model.ess_units) {
        s.ess_soc.push_back(ess.soc_pct);
        s.ess_power.push_back(0.0);
    }
    for (const auto& dr : model.demand_resources) {
        s.dr_active.push_back(dr.active ? 1 : 0);
        s.dr_countdown.push_back(-1);
        s.dr_remaining.push_back(dr.active ? dr.max_duration : 0);
    }
    for (const auto& tie : model.interties) s.tie_schedule.push_back(tie.current_schedule);
    for (const auto& load : model.loads) {
        s.load_p.push_back(load.p_mw);
        s.load_q.push_back(load.q_mvar);
    }
    const CooldownIndex slots(model);
    s.device_last_action.assign(slots.total(), -1000000);
    s.device_last_direction.assign(slots.total(), 0);
    return s;
}

}  // namespace qsts
