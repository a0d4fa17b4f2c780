#include "qsts/network/admittance.hpp"

namespace qsts {

TopologyState TopologyState::from_model(const NetworkModel& model) {
    TopologyState topo;
    topo.branch_in_service.reserve(model.branches.size());
    for (const auto& br : model.branches) topo.branch_in_service.push_back(br.in_service ? 1 : 0);
    topo.tap_position.reserve(model.transformers.size());
    for (const auto& tr : model.transformers) topo.tap_position.push_back(tr.tap_position);
    topo.shunt_steps_on.reserve(model.shunts.size());
    for (const auto& sh : model.shunts) topo.shunt_steps_on.push_back(sh.steps_on);
    return topo;
}

AdmittanceMatrix build_admittance(const NetworkModel& model, const TopologyState& topo) {
    const std::size_t n = model.buses.size();
    if (n == 0) throw Error("cannot build admittance matrix for empty model");

    AdmittanceMatrix y;
    y.n = n;
    y.g.assign(n * n, 0.0);
    y.b.assign(n * n, 0.0);

    auto stamp = [&](int f, int t, std::complex<double> yff, std::complex<double> yft,
                     std::complex<double> ytf, std::complex<double> ytt) {
        y.G(f, f) += yff.real();
        y.B(f, f) += yff.imag();
        y.G(f, t) += yft.real();
        y.B(f, t) += yft.imag();
        y.G(t, f) += ytf.real();
        y.B(t, f) += ytf.imag();
        y.G(t, t) += ytt.real();
        y.B(t, t) += ytt.imag();
    };

    for (std::size_t bi = 0; bi < model.branches.size(); ++bi) {
        if (!topo.branch_in_service[bi]) continue;
        const Branch& br = model.branches[bi];
        const int f = model.bus_of(br.from_bus);
        const int t = model.bus_of(br.to_bus);
        const std::complex<double> ys = 1.0 / std::complex<double>(br.resistance, br.reactance);
        const std::complex<double> ysh(0.0, br.charging / 2.0);
        stamp(f, t, ys + ysh, -ys, -ys, ys + ysh);
    }

    for (std::size_t ti = 0; ti < model.transformers.size(); ++ti) {
        const Transformer& tr = model.transformers[ti];
        const int f = model.bus_of(tr.from_bus);
        const int t = model.bus_of(tr.to_bus);
        const double a = tr.ratio(topo.tap_position[ti]);
        const std::complex<double> ys = 1.0 / std::complex<double>(tr.resistance, tr.reactance);
        stamp(f, t, ys / (a * a), -ys / a, -ys / a, ys);
    }

    for (std::size_t si = 0; si < model.shunts.size(); ++si) {
        const ShuntBank& sh = model.shunts[si];
        const int bus = model.bus_of(sh.bus);
        const double sign = sh.kind == ShuntKind::capacitor ? 1.0 : -1.0;
        y.B(bus, bus) += sign * topo.shunt_steps_on[si] * sh.step_mvar / model.system_base_mva;
    }

    return y;
}

AdmittanceMatrix build_admittance(const NetworkModel& model) {
    return build_admittance(model, TopologyState::from_model(model));
}

}  // namespace qsts
