#include "qsts/powerflow/security.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace qsts {

double BranchFlow::mva_max(double base) const {
    const double sf = std::hypot(p_from, q_from);
    const double st = std::hypot(p_to, q_to);
    return std::max(sf, st) * base;
}

BranchFlow branch_flow(double r, double x, double charging, double tap_ratio, double vf, double af,
                       double vt, double at) {
    const std::complex<double> ys = 1.0 / std::complex<double>(r, x);
    const std::complex<double> ysh(0.0, charging / 2.0);
    const double a = tap_ratio;
    const std::complex<double> Vf = std::polar(vf, af);
    const std::complex<double> Vt = std::polar(vt, at);
    const std::complex<double> If = (ys + ysh) / (a * a) * Vf - ys / a * Vt;
    const std::complex<double> It = (ys + ysh) * Vt - ys / a * Vf;
    const std::complex<double> Sf = Vf * std::conj(If);
    const std::complex<double> St = Vt * std::conj(It);
    return {Sf.real(), Sf.imag(), St.real(), St.imag()};
}

std::vector<BranchFlow> all_branch_flows(const NetworkModel& model, const TopologyState& topo,
                                         const std::vector<double>& vm,
                                         const std::vector<double>& va) {
    std::vector<BranchFlow> flows;
    flows.reserve(model.branches.size() + model.transformers.size());
    for (std::size_t bi = 0; bi < model.branches.size(); ++bi) {
        const Branch& br = model.branches[bi];
        if (!topo.branch_in_service[bi]) {
            flows.push_back({});
            continue;
        }
        const int f = model.bus_of(br.from_bus);
        const int t = model.bus_of(br.to_bus);
        flows.push_back(branch_flow(br.resistance, br.reactance, br.charging, 1.0, vm[f], va[f],
                                    vm[t], va[t]));
    }
    for (std::size_t ti = 0; ti < model.transformers.size(); ++ti) {
        const Transformer& tr = model.transformers[ti];
        const int f = model.bus_of(tr.from_bus);
        const int t = model.bus_of(tr.to_bus);
        flows.push_back(branch_flow(tr.resistance, tr.reactance, 0.0,
                                    tr.ratio(topo.tap_position[ti]), vm[f], va[f], vm[t], va[t]));
    }
    return flows;
}

double total_loss(const NetworkModel& model, const TopologyState& topo,
                  const std::vector<double>& vm, const std::vector<double>& va) {
    double loss = 0.0;
    for (const BranchFlow& flow : all_branch_flows(model, topo, vm, va)) loss += flow.loss_p();
    return loss;
}

std::vector<Violation> check_security(const NetworkModel& model, const TopologyState& topo,
                                      const std::vector<double>& vm, const std::vector<double>& va,
                                      const std::vector<double>& gen_q_mvar) {
    std::vector<Violation> out;
    for (std::size_t i = 0; i < model.buses.size(); ++i) {
        const Bus& bus = model.buses[i];
        if (vm[i] > bus.v_max)
            out.push_back({"overvoltage", bus.id, vm[i] - bus.v_max, ""});
        else if (vm[i] < bus.v_min)
            out.push_back({"undervoltage", bus.id, bus.v_min - vm[i], ""});
    }

    const auto flows = all_branch_flows(model, topo, vm, va);
    for (std::size_t bi = 0; bi < model.branches.size(); ++bi) {
        if (!topo.branch_in_service[bi]) continue;
        const double mva = flows[bi].mva_max(model.system_base_mva);
        if (mva > model.branches[bi].thermal_limit_mva)
            out.push_back({"thermal", model.branches[bi].id,
                           mva - model.branches[bi].thermal_limit_mva, ""});
    }

    for (std::size_t gi = 0; gi < model.generators.size(); ++gi) {
        const Generator& gen = model.generators[gi];
        const double q = gen_q_mvar.empty() ? 0.0 : gen_q_mvar[gi];
        const double tol = 1e-6 * std::max(1.0, std::abs(gen.q_max));
        if (q > gen.q_max + tol)
            out.push_back({"q-limit", gen.id, q - gen.q_max, ""});
        else if (q < gen.q_min - tol)
            out.push_back({"q-limit", gen.id, gen.q_min - q, ""});
    }
    return out;
}

}  // namespace qsts
