#include "qsts/operator/virtual_operator.hpp"

#include <algorithm>
#include <cmath>

namespace qsts {

OperatingContext::OperatingContext(const NetworkModel& model, PowerFlowSolver& solver,
                                   const PowerFlowSettings& settings, double vr_block_pu)
    : model_(&model), solver_(&solver), settings_(settings), vr_block_pu_(vr_block_pu) {
    for (std::size_t i = 0; i < model.buses.size(); ++i)
        if (model.buses[i].kind == BusKind::slack) slack_bus_ = static_cast<int>(i);
    for (std::size_t gi = 0; gi < model.generators.size(); ++gi) {
        const Generator& g = model.generators[gi];
        if (g.kind == GeneratorKind::dispatchable && model.bus_of(g.bus) == slack_bus_) {
            slack_unit_ = static_cast<int>(gi);
            break;
        }
    }
    if (slack_bus_ < 0) throw Error("model has no slack bus");
    if (slack_unit_ < 0) throw Error("no dispatchable unit at the slack bus");
}

double OperatingContext::effective_setpoint(const SystemState& state, int bus) const {
    double sp = state.v_setpoint[bus];
    if (model_->buses[bus].voltage_class == VoltageClass::low) {
        for (std::size_t di = 0; di < model_->demand_resources.size(); ++di)
            if (model_->demand_resources[di].kind == DemandResourceKind::voltage_reduction_block &&
                state.dr_active[di])
                sp -= vr_block_pu_;
    }
    return sp;
}

BusSpec OperatingContext::make_spec(const SystemState& state) const {
    const NetworkModel& m = *model_;
    const std::size_t n = m.buses.size();
    const double base = m.system_base_mva;
    BusSpec spec = BusSpec::sized(n);
    spec.slack = slack_bus_;

    for (std::size_t gi = 0; gi < m.generators.size(); ++gi) {
        const Generator& g = m.generators[gi];
        if (!state.gen_committed[gi]) continue;
        const int bus = m.bus_of(g.bus);
        spec.p_inj[bus] += state.gen_p[gi] / base;
        if (g.controls_voltage()) {
            spec.q_min[bus] += g.q_min / base;
            spec.q_max[bus] += g.q_max / base;
            if (spec.kind[bus] == BusKind::pq) spec.kind[bus] = BusKind::pv;
        } else {
            spec.q_inj[bus] += state.gen_q[gi] / base;
        }
    }
    for (std::size_t li = 0; li < m.loads.size(); ++li) {
        const int bus = m.bus_of(m.loads[li].bus);
        spec.p_inj[bus] -= state.load_p[li] / base;
        spec.q_inj[bus] -= state.load_q[li] / base;
    }
    for (std::size_t ei = 0; ei < m.ess_units.size(); ++ei)
        spec.p_inj[m.bus_of(m.ess_units[ei].bus)] += state.ess_power[ei] / base;
    for (std::size_t ti = 0; ti < m.interties.size(); ++ti) {
        const double signed_mw = m.interties[ti].direction == IntertieDirection::import
                                     ? state.tie_schedule[ti]
                                     : -state.tie_schedule[ti];
        spec.p_inj[m.bus_of(m.interties[ti].bus)] += signed_mw / base;
    }
    for (std::size_t di = 0; di < m.demand_resources.size(); ++di)
        if (state.dr_active[di])
            spec.p_inj[m.bus_of(m.demand_resources[di].bus)] +=
                m.demand_resources[di].capacity_mw / base;

    spec.kind[slack_bus_] = BusKind::slack;
    for (std::size_t i = 0; i < n; ++i)
        spec.v_setpoint[i] = effective_setpoint(state, static_cast<int>(i));
    return spec;
}

void OperatingContext::sync_topology(const SystemState& state) {
    const TopologyState topo = state.topology();
    if (!(solver_->topology() == topo)) solver_->set_topology(topo);
}

void OperatingContext::write_back(const PowerFlowResult& result, SystemState& state) const {
    const NetworkModel& m = *model_;
    const double base = m.system_base_mva;
    state.vm = result.state.vm;
    state.va = result.state.va;

    // distribute the solved reactive injection of each voltage-controlled bus
    // across its committed controlling units, proportional to range
    for (std::size_t i = 0; i < m.buses.size(); ++i) {
        double load_q = 0.0;
        for (std::size_t li = 0; li < m.loads.size(); ++li)
            if (m.bus_of(m.loads[li].bus) == static_cast<int>(i)) load_q += state.load_q[li];
        double wind_q = 0.0;
        std::vector<std::size_t> holders;
        double span_sum = 0.0;
        for (std::size_t gi = 0; gi < m.generators.size(); ++gi) {
            if (m.bus_of(m.generators[gi].bus) != static_cast<int>(i) || !state.gen_committed[gi])
                continue;
            if (m.generators[gi].controls_voltage()) {
                holders.push_back(gi);
                span_sum += m.generators[gi].q_max - m.generators[gi].q_min;
            } else {
                wind_q += state.gen_q[gi];
            }
        }
        if (holders.empty()) continue;
        const double gen_q_total = result.state.q_calc[i] * base + load_q - wind_q;
        for (std::size_t gi : holders) {
            const Generator& g = m.generators[gi];
            const double span = g.q_max - g.q_min;
            const double weight = span_sum > 0.0 ? span / span_sum
                                                 : 1.0 / static_cast<double>(holders.size());
            state.gen_q[gi] = gen_q_total * weight;
        }
    }

    // swing residual: what the slack bus solution demands beyond the schedule
    const double scheduled = make_spec(state).p_inj[slack_bus_];
    state.swing_residual_mw = (result.state.p_calc[slack_bus_] - scheduled) * base;
}

PowerFlowResult OperatingContext::resolve(SystemState& state) {
    sync_topology(state);
    const BusSpec spec = make_spec(state);
    VoltageSolution warm;
    warm.vm = state.vm;
    warm.va = state.va;
    PowerFlowResult result = solver_->solve_with_fallbacks(spec, warm, settings_);
    ++solves_;
    if (result.converged) {
        if (result.rung != "newton") {
            if (!rungs_.empty()) rungs_ += ",";
            rungs_ += result.rung;
        }
        write_back(result, state);
    }
    return result;
}

double OperatingContext::held_bus_q_mvar(const SystemState& state, int bus, double target_pu) {
    sync_topology(state);
    BusSpec spec = make_spec(state);
    const double scheduled_q = spec.q_inj[bus];
    spec.kind[bus] = BusKind::pv;
    spec.v_setpoint[bus] = target_pu;
    spec.q_min[bus] = -1e9;  // the temporary source is unbounded
    spec.q_max[bus] = 1e9;
    VoltageSolution warm;
    warm.vm = state.vm;
    warm.va = state.va;
    PowerFlowResult result = solver_->solve_with_fallbacks(spec, warm, settings_);
    ++solves_;
    if (!result.converged) return 0.0;
    return (result.state.q_calc[bus] - scheduled_q) * model_->system_base_mva;
}

std::vector<Violation> OperatingContext::security(const SystemState& state) const {
    return check_security(*model_, state.topology(), state.vm, state.va, state.gen_q);
}

}  // namespace qsts
