#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qsts/network/admittance.hpp"
#include "qsts/network/model.hpp"

namespace qsts {

struct PowerFlowSettings {
    enum class Mode { newton_raphson, fast_decoupled };
    double tolerance = 1e-8;      // pu mismatch
    int max_iterations = 30;
    std::vector<double> damping_schedule = {0.5, 0.25};
    Mode mode = Mode::newton_raphson;
    bool enforce_q_limits = true;
};

/// Effective per-bus specification for one solve. Injections are per unit on
/// the system base; kinds may differ from the static model (Q-limit
/// switching, fictitious voltage holds).
struct BusSpec {
    std::vector<BusKind> kind;
    std::vector<double> p_inj;        // scheduled P injection, all buses (slack ignored)
    std::vector<double> q_inj;        // scheduled Q injection, PQ buses
    std::vector<double> v_setpoint;   // magnitude target for slack/pv
    std::vector<double> q_min;        // aggregate reactive capability at pv buses
    std::vector<double> q_max;
    int slack = -1;

    static BusSpec sized(std::size_t n);
};

struct VoltageSolution {
    std::vector<double> vm;         // pu
    std::vector<double> va;         // rad
    std::vector<double> p_calc;     // solved injections, pu
    std::vector<double> q_calc;
};

struct IterationRecord {
    std::string stage;      // rung or solver phase
    int iteration = 0;
    double max_mismatch = 0.0;
    double damping = 1.0;
};

struct PowerFlowResult {
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;
    VoltageSolution state;
    std::vector<IterationRecord> trace;
    std::vector<std::uint8_t> pv_switched_to_pq;  // per bus
    std::string rung;      // fallback rung that produced the result
    std::string failure;   // non-empty when !converged
};

/// Newton-Raphson power-flow solver with a fast-decoupled variant. One
/// instance per thread; holds per-solve scratch and the admittance matrix of
/// the current topology. The model itself is shared and immutable.
class PowerFlowSolver {
public:
    explicit PowerFlowSolver(const NetworkModel& model);

    /// Rebuilds the admittance matrix (and drops cached fast-decoupled
    /// factorizations) when the topology changed.
    void set_topology(const TopologyState& topo);
    const TopologyState& topology() const { return topo_; }
    const AdmittanceMatrix& admittance() const { return y_; }

    /// Flat-start voltages for the given spec.
    VoltageSolution flat_start(const BusSpec& spec) const;

    PowerFlowResult solve(const BusSpec& spec, const VoltageSolution& initial,
                          const PowerFlowSettings& settings);

    /// Runs the fallback ladder: plain Newton-Raphson, damped retries per the
    /// damping schedule, fast-decoupled, and finally a Q-limit relaxation that
    /// is re-tightened on success. Returns the first converged rung; a failed
    /// ladder carries the full trace.
    PowerFlowResult solve_with_fallbacks(const BusSpec& spec, const VoltageSolution& initial,
                                         const PowerFlowSettings& settings);

private:
    PowerFlowResult solve_newton(const BusSpec& spec, const VoltageSolution& initial,
                                 const PowerFlowSettings& settings, double damping,
                                 const std::string& stage);
    PowerFlowResult solve_fast_decoupled(const BusSpec& spec, const VoltageSolution& initial,
                                         const PowerFlowSettings& settings);
    /// Evaluates P/Q at all buses into p_calc_/q_calc_ and fills the t/u term
    /// matrices used by the Jacobian. Returns max mismatch.
    double evaluate(const BusSpec& spec, const std::vector<BusKind>& kind,
                    const std::vector<double>& q_pinned, const std::vector<double>& vm,
                    const std::vector<double>& va);
    std::string islanded_bus(const BusSpec& spec) const;

    const NetworkModel* model_;
    TopologyState topo_;
    AdmittanceMatrix y_;

    // scratch, sized n
    std::vector<double> cosd_, sind_, p_calc_, q_calc_;
    std::vector<double> t_, u_;  // n*n injection terms of the last evaluate()
};

}  // namespace qsts
