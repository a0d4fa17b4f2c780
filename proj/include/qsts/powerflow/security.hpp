#pragma once

#include <vector>

#include "qsts/network/admittance.hpp"
#include "qsts/network/model.hpp"

namespace qsts {

struct BranchFlow {
    double p_from = 0.0;  // pu, positive into the branch at the from side
    double q_from = 0.0;
    double p_to = 0.0;
    double q_to = 0.0;
    double loss_p() const { return p_from + p_to; }
    double mva_max(double base) const;
};

/// Flow on one branch/transformer from terminal voltages. Transformer flows
/// account for the off-nominal tap ratio.
BranchFlow branch_flow(double r, double x, double charging, double tap_ratio,
                       double vf, double af, double vt, double at);

/// Flows for all in-service branches followed by all transformers, in model
/// order. Out-of-service branches yield zero flow.
std::vector<BranchFlow> all_branch_flows(const NetworkModel& model, const TopologyState& topo,
                                         const std::vector<double>& vm,
                                         const std::vector<double>& va);

/// Total network active-power loss in pu (sum of branch I^2 R).
double total_loss(const NetworkModel& model, const TopologyState& topo,
                  const std::vector<double>& vm, const std::vector<double>& va);

/// One record per bus outside [v_min, v_max], per element above its thermal
/// limit and per generator outside its reactive range. Empty means secure.
std::vector<Violation> check_security(const NetworkModel& model, const TopologyState& topo,
                                      const std::vector<double>& vm, const std::vector<double>& va,
                                      const std::vector<double>& gen_q_mvar);

}  // namespace qsts
