#include "qsts/engine/engine.hpp"

#include <algorithm>
#include <cmath>

#include "qsts/io/timeutil.hpp"
#include "qsts/powerflow/security.hpp"

namespace qsts {

namespace {
// residuals below this stay at the swing bus; folding them would only churn
// the last bits of the slack schedule
constexpr double kFoldFloorMw = 1e-9;
}  // namespace

QstsEngine::QstsEngine(const SimulationCase& sim)
    : sim_(&sim),
      solver_(*sim.model),
      vo_(*sim.model, sim.thresholds),
      ctx_(*sim.model, solver_, sim.powerflow, sim.thresholds.voltage_reduction_block_pu) {
    if (60 % sim.engine.resolution_minutes != 0)
        throw ConfigError("resolution must divide 60 minutes");
    steps_per_day_ = 24L * 60L / sim.engine.resolution_minutes;
}

std::string QstsEngine::timestamp_of(long t) const {
    return add_minutes_iso(sim_->engine.start_timestamp,
                           t * static_cast<long>(sim_->engine.resolution_minutes));
}

const GenerationLimits& QstsEngine::limits_for(const std::string& zone, long t) const {
    const int day = static_cast<int>(t / steps_per_day_);
    const int period = sim_->periods.period_of_day(day);
    for (const auto& lim : sim_->limits)
        if (lim.zone == zone && lim.period == period) return lim;
    throw ConfigError("no generation limits for zone '" + zone + "' period " +
                      std::to_string(period));
}

double QstsEngine::zone_wind_target(const StepPlan& plan, const std::string& zone) const {
    double total = 0.0;
    for (std::size_t gi = 0; gi < sim_->model->generators.size(); ++gi) {
        const Generator& g = sim_->model->generators[gi];
        if (g.kind != GeneratorKind::wind) continue;
        const int bus = sim_->model->bus_of(g.bus);
        if (sim_->model->buses[bus].zone == zone) total += plan.gen_p_target[gi];
    }
    return total;
}

StepPlan QstsEngine::plan_step(const SystemState& previous, long t) const {
    const NetworkModel& m = *sim_->model;
    StepPlan plan;
    plan.t = t;
    plan.load_p_target = previous.load_p;
    plan.load_q_target = previous.load_q;
    plan.gen_p_target = previous.gen_p;
    plan.tie_target = previous.tie_schedule;
    plan.ess_power_target.assign(m.ess_units.size(), 0.0);
    plan.bus_dp_mw.assign(m.buses.size(), 0.0);
    plan.bus_dq_mvar.assign(m.buses.size(), 0.0);
    plan.bus_dq_der_mvar.assign(m.buses.size(), 0.0);

    for (const auto& s : sim_->profiles->series) {
        if (t < 0 || static_cast<std::size_t>(t) >= s.values.size())
            throw MissingProfile(s.device_id, t);
        const double target = s.values[t];
        switch (s.kind) {
            case ProfileKind::load_p: {
                const int bus = m.bus_of(m.loads[s.device_index].bus);
                plan.bus_dp_mw[bus] -= target - previous.load_p[s.device_index];
                plan.load_p_target[s.device_index] = target;
                break;
            }
            case ProfileKind::load_q: {
                const int bus = m.bus_of(m.loads[s.device_index].bus);
                plan.bus_dq_mvar[bus] -= target - previous.load_q[s.device_index];
                plan.load_q_target[s.device_index] = target;
                break;
            }
            case ProfileKind::gen_p: {
                const int bus = m.bus_of(m.generators[s.device_index].bus);
                plan.bus_dp_mw[bus] += target - previous.gen_p[s.device_index];
                plan.gen_p_target[s.device_index] = target;
                break;
            }
            case ProfileKind::intertie_schedule: {
                const Intertie& tie = m.interties[s.device_index];
                const int bus = m.bus_of(tie.bus);
                const double sign = tie.direction == IntertieDirection::import ? 1.0 : -1.0;
                plan.bus_dp_mw[bus] += sign * (target - previous.tie_schedule[s.device_index]);
                plan.tie_target[s.device_index] = target;
                break;
            }
        }
    }

    // storage control decides on the step's realized wind, never on anything
    // later; the decision's power enters the ramp plan like any injection
    for (std::size_t ei = 0; ei < m.ess_units.size(); ++ei) {
        const EssUnit& unit = m.ess_units[ei];
        const GenerationLimits& lims = limits_for(unit.zone, t);
        const double gen = zone_wind_target(plan, unit.zone);
        EssDecision d = select_mode(gen, lims, previous.ess_soc[ei], unit.soc_balance_pct, t,
                                    sim_->peak, sim_->thresholds.peak_charging_block);
        const double power =
            dispatch_power(d, gen, lims, unit, previous.ess_soc[ei],
                           sim_->engine.resolution_minutes);
        d.power_mw = power;
        plan.ess_decisions.push_back(d);
        plan.ess_power_target[ei] = power;
        plan.bus_dp_mw[m.bus_of(unit.bus)] += power - previous.ess_power[ei];
    }

    for (double dp : plan.bus_dp_mw) plan.max_bus_dp_mw = std::max(plan.max_bus_dp_mw, std::abs(dp));
    plan.substeps = std::max(
        1, static_cast<int>(std::ceil(plan.max_bus_dp_mw / sim_->engine.max_injection_per_substep_mw -
                                      1e-12)));
    return plan;
}

void QstsEngine::apply_plan_fraction(SystemState& state, const SystemState& prev,
                                     const StepPlan& plan, int j) const {
    const double f = static_cast<double>(j) / plan.substeps;  // exactly 1.0 at the last sub-step
    auto mix = [f](double from, double to) { return from + (to - from) * f; };
    for (std::size_t i = 0; i < state.load_p.size(); ++i) {
        state.load_p[i] = mix(prev.load_p[i], plan.load_p_target[i]);
        state.load_q[i] = mix(prev.load_q[i], plan.load_q_target[i]);
    }
    for (std::size_t gi = 0; gi < state.gen_p.size(); ++gi)
        if (sim_->model->generators[gi].kind == GeneratorKind::wind)
            state.gen_p[gi] = mix(prev.gen_p[gi], plan.gen_p_target[gi]);
    for (std::size_t ti = 0; ti < state.tie_schedule.size(); ++ti)
        state.tie_schedule[ti] = mix(prev.tie_schedule[ti], plan.tie_target[ti]);
    for (std::size_t ei = 0; ei < state.ess_power.size(); ++ei)
        state.ess_power[ei] = mix(prev.ess_power[ei], plan.ess_power_target[ei]);
}

void QstsEngine::tick_demand_resources(SystemState& state) const {
    const NetworkModel& m = *sim_->model;
    const CooldownIndex slots(m);
    for (std::size_t di = 0; di < m.demand_resources.size(); ++di) {
        if (state.dr_active[di]) {
            if (--state.dr_remaining[di] <= 0) {
                state.dr_active[di] = 0;
                state.dr_remaining[di] = 0;
                state.device_last_action[slots.demand_resource(di)] = state.time_index;
                state.device_last_direction[slots.demand_resource(di)] = -1;
            }
        } else if (state.dr_countdown[di] > 0) {
            if (--state.dr_countdown[di] == 0) {
                state.dr_countdown[di] = -1;
                state.dr_active[di] = 1;
                state.dr_remaining[di] = m.demand_resources[di].max_duration;
            }
        } else if (state.dr_countdown[di] == 0) {
            state.dr_countdown[di] = -1;
        }
    }
}

void QstsEngine::fill_monitors(const SystemState& state, StepDiagnostics& diag) const {
    for (const auto& [name, gens] : sim_->reserve_monitors) {
        double mw = 0.0;
        for (int gi : gens)
            if (state.gen_committed[gi])
                mw += sim_->model->generators[gi].p_max - state.gen_p[gi];
        diag.reserve_monitors.push_back(mw);
    }
}

StepOutcome QstsEngine::advance(const SystemState& previous) {
    const long t = previous.time_index + 1;
    StepOutcome out;
    SystemState state = previous;
    state.time_index = t;
    state.timestamp = timestamp_of(t);
    tick_demand_resources(state);

    const StepPlan plan = plan_step(previous, t);
    StepDiagnostics diag;
    diag.time_index = t;
    diag.substeps = plan.substeps;
    ctx_.reset_counters();

    for (int j = 1; j <= plan.substeps; ++j) {
        apply_plan_fraction(state, previous, plan, j);
        const PowerFlowResult result = ctx_.resolve(state);
        if (!result.converged) {
            out.failure = StepFailure{t, j, result.failure, result.trace};
            out.state = previous;
            return out;
        }
        diag.worst_substep_residual_mw =
            std::max(diag.worst_substep_residual_mw, std::abs(state.swing_residual_mw));

        SequenceReport rep = vo_.run_sequence(ctx_, state, sim_->engine.resolution_minutes);
        out.actions.insert(out.actions.end(), rep.actions.begin(), rep.actions.end());
        diag.reserve_shortfall_mw = std::max(diag.reserve_shortfall_mw, rep.reserve_shortfall_mw);
        diag.unresolved_deficit_mw = std::max(diag.unresolved_deficit_mw, rep.unresolved_deficit_mw);
        diag.fictitious.insert(diag.fictitious.end(), rep.fictitious.begin(), rep.fictitious.end());
        if (j == plan.substeps) diag.violations = std::move(rep.unresolved_voltage);
    }

    // storage bookkeeping for the accepted step
    for (std::size_t ei = 0; ei < sim_->model->ess_units.size(); ++ei) {
        const auto upd = update_soc(sim_->model->ess_units[ei], previous.ess_soc[ei],
                                    state.ess_power[ei], sim_->engine.resolution_minutes);
        state.ess_soc[ei] = upd.soc_pct;
        EssTraceRow row;
        row.time_index = t;
        row.unit = static_cast<int>(ei);
        row.mode = plan.ess_decisions[ei].mode;
        row.power_mw = state.ess_power[ei];
        row.soc_pct = upd.soc_pct;
        row.classification = plan.ess_decisions[ei].classification;
        row.clipped = upd.clipped;
        out.ess_rows.push_back(row);
    }

    const auto security = ctx_.security(state);
    diag.unresolved_violations = static_cast<int>(security.size() + diag.violations.size());
    diag.concession = diag.unresolved_violations > 0;
    for (const auto& v : security) diag.violations.push_back(v);

    // the slack unit absorbs the residual; the recorded state carries what
    // actually ran, so conservation holds exactly on the stored matrix
    diag.final_residual_mw = state.swing_residual_mw;
    if (std::abs(state.swing_residual_mw) > kFoldFloorMw)
        state.gen_p[ctx_.slack_unit()] += state.swing_residual_mw;

    diag.solves = ctx_.solves();
    diag.rungs = ctx_.rungs_used();
    diag.agc_reserve_mw = vo_.agc_reserve_mw(state);
    fill_monitors(state, diag);

    out.state = std::move(state);
    out.diagnostics = std::move(diag);
    return out;
}

SystemState QstsEngine::initialize() { return initialize_at(0); }

SystemState QstsEngine::initialize_at(long t) {
    const NetworkModel& m = *sim_->model;
    SystemState state = SystemState::from_model(m);
    state.time_index = t;
    state.timestamp = timestamp_of(t);

    // align the planned point with the step-t profiles
    for (const auto& s : sim_->profiles->series) {
        if (t < 0 || static_cast<std::size_t>(t) >= s.values.size())
            throw MissingProfile(s.device_id, t);
        const double v = s.values[t];
        switch (s.kind) {
            case ProfileKind::load_p: state.load_p[s.device_index] = v; break;
            case ProfileKind::load_q: state.load_q[s.device_index] = v; break;
            case ProfileKind::gen_p: state.gen_p[s.device_index] = v; break;
            case ProfileKind::intertie_schedule: state.tie_schedule[s.device_index] = v; break;
        }
    }

    const PowerFlowResult preliminary = ctx_.resolve(state);
    if (!preliminary.converged)
        throw InitializationFailure("preliminary solve failed: " + preliminary.failure);

    SequenceReport rep = vo_.run_sequence(ctx_, state, sim_->engine.resolution_minutes);
    const auto security = ctx_.security(state);
    if (!security.empty() || !rep.unresolved_voltage.empty()) {
        std::string what = "initial operating point not secure:";
        for (const auto& v : security) what += " " + v.kind + "@" + v.device;
        for (const auto& v : rep.unresolved_voltage) what += " " + v.kind + "@" + v.device;
        throw InitializationFailure(what);
    }
    if (std::abs(state.swing_residual_mw) > kFoldFloorMw)
        state.gen_p[ctx_.slack_unit()] += state.swing_residual_mw;
    return state;
}

SegmentResult QstsEngine::run_segment(const SystemState& from, long t0, long t1, int segment_index,
                                      long warm_in_steps) {
    SegmentResult seg;
    seg.segment_index = segment_index;
    seg.first_step = t0;
    SystemState state = from;

    if (t0 == 0) {
        if (from.time_index != 0) throw Error("segment at the horizon start needs the t=0 state");
        seg.states.push_back(from);
    } else if (from.time_index != t0 - warm_in_steps - 1) {
        throw Error("segment initial state has the wrong time index");
    }

    while (state.time_index + 1 < t1) {
        StepOutcome out = advance(state);
        if (out.failure) {
            seg.failure = std::move(out.failure);
            break;
        }
        state = std::move(out.state);
        if (state.time_index >= t0) {
            if ((state.time_index - t0) % sim_->engine.record_every == 0)
                seg.states.push_back(state);
            seg.actions.insert(seg.actions.end(), out.actions.begin(), out.actions.end());
            seg.diagnostics.push_back(std::move(out.diagnostics));
            seg.ess_trace.insert(seg.ess_trace.end(), out.ess_rows.begin(), out.ess_rows.end());
        }
    }
    seg.final_state = std::move(state);
    return seg;
}

}  // namespace qsts
