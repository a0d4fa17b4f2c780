#pragma once

#include <vector>

#include "qsts/engine/state.hpp"
#include "qsts/powerflow/security.hpp"
#include "qsts/powerflow/solver.hpp"

namespace qsts {

struct OperatorThresholds {
    double balance_threshold_mw = 5.0;
    double dguoo_band_mw = 100.0;
    double agc_reserve_min_mw = 100.0;
    double deadband_low_pu = 0.02;
    double deadband_high_pu = 0.02;
    int switching_cooldown_steps = 3;
    double voltage_reduction_block_pu = 0.02;
    double compensator_step_pu = 0.01;
    int max_control_passes = 3;
    int max_sequence_passes = 2;
    PeakChargingBlock peak_charging_block = PeakChargingBlock::surplus_only;
};

/// Bridges device-level state and the voltage-level solver: builds the bus
/// spec from a SystemState, runs the fallback ladder warm-started from the
/// state's voltages, and writes the solution back (voltages, reactive
/// allocation, swing residual).
class OperatingContext {
public:
    OperatingContext(const NetworkModel& model, PowerFlowSolver& solver,
                     const PowerFlowSettings& settings, double vr_block_pu);

    BusSpec make_spec(const SystemState& state) const;

    /// Solve the state as scheduled and write the solution back. Returns the
    /// full result; state is untouched when the ladder fails.
    PowerFlowResult resolve(SystemState& state);

    /// Reactive injection (MVAr) a temporary unbounded source at `bus` must
    /// add to hold `target_pu` there. The state is left untouched.
    double held_bus_q_mvar(const SystemState& state, int bus, double target_pu);

    std::vector<Violation> security(const SystemState& state) const;

    int solves() const { return solves_; }
    const std::string& rungs_used() const { return rungs_; }
    void reset_counters() { solves_ = 0; rungs_.clear(); }

    const NetworkModel& model() const { return *model_; }
    /// Effective regulated target at a bus: base setpoint lowered by the
    /// conservation-voltage-reduction block while one is active.
    double effective_setpoint(const SystemState& state, int bus) const;
    int slack_bus() const { return slack_bus_; }
    int slack_unit() const { return slack_unit_; }

private:
    void sync_topology(const SystemState& state);
    void write_back(const PowerFlowResult& result, SystemState& state) const;

    const NetworkModel* model_;
    PowerFlowSolver* solver_;
    PowerFlowSettings settings_;
    double vr_block_pu_;
    int slack_bus_ = -1;
    int slack_unit_ = -1;
    int solves_ = 0;
    std::string rungs_;
};

struct SequenceReport {
    std::vector<OperatorAction> actions;
    double unresolved_deficit_mw = 0.0;
    double reserve_shortfall_mw = 0.0;
    std::vector<FictitiousAccount> fictitious;
    std::vector<Violation> unresolved_voltage;
};

/// The rule-based decision core: supply-demand balance, commitment tracking
/// against optimal dispatch, reserve enforcement with the corrective-action
/// ladder, and the two-level voltage control. Stateless over
/// (state, model, thresholds); cooldown clocks live in the state itself.
class VirtualOperator {
public:
    VirtualOperator(const NetworkModel& model, const OperatorThresholds& thresholds);

    /// Full resolution sequence after a solved sub-step, in order: balance,
    /// commitment, reserves, low-level voltage, high-level voltage.
    SequenceReport run_sequence(OperatingContext& ctx, SystemState& state,
                                int resolution_minutes);

    std::vector<OperatorAction> restore_balance(OperatingContext& ctx, SystemState& state,
                                                int resolution_minutes,
                                                double* unresolved_deficit_mw = nullptr);
    std::vector<OperatorAction> enforce_dguoo(OperatingContext& ctx, SystemState& state,
                                              int resolution_minutes, bool* exhausted = nullptr);
    double agc_reserve_mw(const SystemState& state) const;
    std::vector<OperatorAction> corrective_hierarchy(OperatingContext& ctx, SystemState& state,
                                                     int resolution_minutes,
                                                     double extra_deficit_mw,
                                                     double* shortfall_mw = nullptr);
    std::vector<OperatorAction> control_voltage_low(OperatingContext& ctx, SystemState& state,
                                                    std::vector<FictitiousAccount>* accounts,
                                                    std::vector<Violation>* unresolved);
    std::vector<OperatorAction> control_voltage_high(OperatingContext& ctx, SystemState& state,
                                                     std::vector<Violation>* unresolved);

    const OperatorThresholds& thresholds() const { return thresholds_; }

private:
    bool cooldown_allows(const SystemState& state, std::size_t slot, int direction) const;
    void mark_action(SystemState& state, std::size_t slot, int direction) const;
    std::vector<OperatorAction> redistribute_to_optimal(OperatingContext& ctx, SystemState& state,
                                                        int resolution_minutes);

    const NetworkModel* model_;
    OperatorThresholds thresholds_;
    CooldownIndex slots_;
};

}  // namespace qsts
