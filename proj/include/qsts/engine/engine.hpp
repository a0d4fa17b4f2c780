#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qsts/engine/state.hpp"
#include "qsts/ess/ess_control.hpp"
#include "qsts/io/profiles.hpp"
#include "qsts/operator/virtual_operator.hpp"
#include "qsts/powerflow/solver.hpp"

namespace qsts {

struct EngineConfig {
    int resolution_minutes = 5;  // 5 | 15 | 30 | 60
    long horizon_steps = 0;
    std::string start_timestamp = "2035-01-01T00:00:00";
    double max_injection_per_substep_mw = 100.0;  // sizes the incremental updates
    int record_every = 1;
};

/// Everything one simulation run consumes. Model and profiles are shared
/// immutable inputs; engines never mutate them.
struct SimulationCase {
    const NetworkModel* model = nullptr;
    const TimeSeriesDataset* profiles = nullptr;
    EngineConfig engine;
    PowerFlowSettings powerflow;
    OperatorThresholds thresholds;
    PeakCalendar peak;
    std::vector<GenerationLimits> limits;
    PeriodMap periods;
    /// named committed-capability monitors (generator index lists) reported
    /// per step alongside the AGC reserve
    std::vector<std::pair<std::string, std::vector<int>>> reserve_monitors;
};

struct StepPlan {
    long t = 0;        // step being advanced into
    int substeps = 1;  // J
    std::vector<double> load_p_target, load_q_target;  // per load
    std::vector<double> gen_p_target;                  // per generator
    std::vector<double> tie_target;                    // per intertie
    std::vector<double> ess_power_target;              // per ESS unit
    std::vector<EssDecision> ess_decisions;
    std::vector<double> bus_dp_mw;   // per-bus aggregate active delta
    std::vector<double> bus_dq_mvar; // per-bus aggregate reactive delta (DER share tracked below)
    std::vector<double> bus_dq_der_mvar;
    double max_bus_dp_mw = 0.0;
};

struct StepOutcome {
    SystemState state;
    std::vector<OperatorAction> actions;
    StepDiagnostics diagnostics;
    std::vector<EssTraceRow> ess_rows;
    std::optional<StepFailure> failure;
};

class InitializationFailure : public Error {
public:
    using Error::Error;
};

/// Advances the system through the horizon one step at a time: profile
/// deltas applied as incremental sub-updates, a power-flow solve and the
/// operator sequence after each, the accepted state recorded per step.
/// One engine per segment worker; instances share only immutable inputs.
class QstsEngine {
public:
    explicit QstsEngine(const SimulationCase& sim);

    /// Operator-accepted t=0 state: device setpoints aligned, preliminary
    /// solve converged, operator pass clean. Throws InitializationFailure.
    SystemState initialize();

    /// As initialize(), but re-targeted to the profiles of an arbitrary step;
    /// used for independent (base-case) segment starts.
    SystemState initialize_at(long t);

    StepPlan plan_step(const SystemState& previous, long t) const;
    StepOutcome advance(const SystemState& previous);

    /// Records states for t in [t0, t1). When t0 == 0 `from` must be the
    /// initialized t=0 state (it is recorded as-is); otherwise `from` is the
    /// state at t0-1 and only advanced states are recorded.
    SegmentResult run_segment(const SystemState& from, long t0, long t1, int segment_index = 0,
                              long warm_in_steps = 0);

    const SimulationCase& sim() const { return *sim_; }
    std::string timestamp_of(long t) const;

private:
    void apply_plan_fraction(SystemState& state, const SystemState& prev, const StepPlan& plan,
                             int j) const;
    void tick_demand_resources(SystemState& state) const;
    double zone_wind_target(const StepPlan& plan, const std::string& zone) const;
    const GenerationLimits& limits_for(const std::string& zone, long t) const;
    void fill_monitors(const SystemState& state, StepDiagnostics& diag) const;

    const SimulationCase* sim_;
    PowerFlowSolver solver_;
    VirtualOperator vo_;
    OperatingContext ctx_;
    long steps_per_day_ = 0;
};

}  // namespace qsts
