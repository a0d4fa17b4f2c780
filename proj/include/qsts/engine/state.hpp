#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qsts/ess/ess_control.hpp"
#include "qsts/network/admittance.hpp"
#include "qsts/network/model.hpp"
#include "qsts/powerflow/solver.hpp"

namespace qsts {

enum class ActionKind {
    gen_redispatch,
    gen_start,
    gen_stop,
    tap_step,
    shunt_switch,
    line_disconnect,
    line_reconnect,
    compensator_setpoint,
    voltage_reduction,
    demand_activation,
    intertie_adjust,
};

std::string to_string(ActionKind kind);
ActionKind action_kind_from_string(const std::string& s);

struct OperatorAction {
    long time_index = 0;
    ActionKind kind = ActionKind::gen_redispatch;
    std::string device;
    double before = 0.0;
    double after = 0.0;
    std::string trigger;  // which rule fired
    bool operator==(const OperatorAction&) const = default;
};

using ActionLog = std::vector<OperatorAction>;

/// One converged, operator-accepted operating point. Everything a step needs
/// to reproduce its successor lives here, including the operator bookkeeping
/// (cooldown clocks, demand-resource timers) that makes replay bit-exact.
struct SystemState {
    long time_index = 0;
    std::string timestamp;

    std::vector<double> vm;          // per bus, pu
    std::vector<double> va;          // per bus, rad
    std::vector<double> v_setpoint;  // per bus regulated target, pu

    std::vector<double> gen_p;            // MW
    std::vector<double> gen_q;            // MVAr
    std::vector<std::uint8_t> gen_committed;

    std::vector<int> tap_position;             // per transformer
    std::vector<int> shunt_steps_on;           // per shunt
    std::vector<std::uint8_t> branch_in_service;

    std::vector<double> ess_soc;    // percent
    std::vector<double> ess_power;  // MW, positive discharging

    std::vector<std::uint8_t> dr_active;
    std::vector<int> dr_countdown;  // steps until a pending activation takes effect, -1 idle
    std::vector<int> dr_remaining;  // active steps left before forced release

    std::vector<double> tie_schedule;  // MW
    std::vector<double> load_p;        // MW
    std::vector<double> load_q;        // MVAr

    double swing_residual_mw = 0.0;

    // anti-flap bookkeeping: one slot per branch, then shunt, then
    // transformer, then demand resource, then compensator-holding bus
    std::vector<long> device_last_action;
    std::vector<std::int8_t> device_last_direction;  // +1 raise/connect, -1 lower/disconnect

    TopologyState topology() const;
    bool operator==(const SystemState&) const = default;

    static SystemState from_model(const NetworkModel& model);
};

/// Cooldown slot layout inside SystemState::device_last_action.
struct CooldownIndex {
    explicit CooldownIndex(const NetworkModel& m)
        : branches(m.branches.size()),
          shunts(m.shunts.size()),
          transformers(m.transformers.size()),
          demand(m.demand_resources.size()),
          buses(m.buses.size()),
          generators(m.generators.size()) {}
    std::size_t branches, shunts, transformers, demand, buses, generators;
    std::size_t branch(std::size_t i) const { return i; }
    std::size_t shunt(std::size_t i) const { return branches + i; }
    std::size_t transformer(std::size_t i) const { return branches + shunts + i; }
    std::size_t demand_resource(std::size_t i) const { return branches + shunts + transformers + i; }
    std::size_t compensator_bus(std::size_t i) const {
        return branches + shunts + transformers + demand + i;
    }
    std::size_t generator(std::size_t i) const {
        return branches + shunts + transformers + demand + buses + i;
    }
    std::size_t total() const {
        return branches + shunts + transformers + demand + buses + generators;
    }
};

/// Accounting for one fictitious voltage hold during low-level control.
struct FictitiousAccount {
    int bus = -1;
    double q_needed_mvar = 0.0;     // injection the temporary source supplied
    double q_delivered_mvar = 0.0;  // what the switched devices provide
    double residual_mvar = 0.0;
};

struct StepFailure {
    long time_index = 0;
    int substep = 0;
    std::string message;
    std::vector<IterationRecord> trace;
};

struct StepDiagnostics {
    long time_index = 0;
    int substeps = 1;
    double worst_substep_residual_mw = 0.0;  // swing residual before balancing
    double final_residual_mw = 0.0;
    int solves = 0;
    std::string rungs;  // solver rungs used beyond plain newton, comma separated
    double agc_reserve_mw = 0.0;
    double reserve_shortfall_mw = 0.0;
    double unresolved_deficit_mw = 0.0;
    int unresolved_violations = 0;
    bool concession = false;  // accepted despite unresolved security findings
    std::vector<Violation> violations;
    std::vector<FictitiousAccount> fictitious;
    std::vector<double> reserve_monitors;  // user-configured pass-through monitors
};

struct EssTraceRow {
    long time_index = 0;
    int unit = 0;
    EssMode mode = EssMode::standby;
    double power_mw = 0.0;
    double soc_pct = 0.0;
    EssClassification classification = EssClassification::none;
    bool clipped = false;
};

struct SegmentResult {
    int segment_index = 0;
    long first_step = 0;  // first recorded step
    std::vector<SystemState> states;
    ActionLog actions;
    std::vector<StepDiagnostics> diagnostics;
    std::vector<EssTraceRow> ess_trace;
    std::optional<StepFailure> failure;
    /// last solved state regardless of record_every; chains segments
    std::optional<SystemState> final_state;
};

}  // namespace qsts
