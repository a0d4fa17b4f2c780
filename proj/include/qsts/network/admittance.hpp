#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "qsts/network/model.hpp"

namespace qsts {

/// Dense bus admittance matrix, stored as separate row-major real (G) and
/// imaginary (B) parts so the injection kernels can stream them directly.
struct AdmittanceMatrix {
    std::size_t n = 0;
    std::vector<double> g;  // n*n row-major
    std::vector<double> b;

    double& G(std::size_t i, std::size_t k) { return g[i * n + k]; }
    double& B(std::size_t i, std::size_t k) { return b[i * n + k]; }
    double G(std::size_t i, std::size_t k) const { return g[i * n + k]; }
    double B(std::size_t i, std::size_t k) const { return b[i * n + k]; }
    std::complex<double> Y(std::size_t i, std::size_t k) const {
        return {G(i, k), B(i, k)};
    }
    const double* g_row(std::size_t i) const { return g.data() + i * n; }
    const double* b_row(std::size_t i) const { return b.data() + i * n; }
};

/// Per-solve topology snapshot: which branches are in, tap positions and
/// energized shunt steps. Defaults come from the model.
struct TopologyState {
    std::vector<std::uint8_t> branch_in_service;
    std::vector<int> tap_position;
    std::vector<int> shunt_steps_on;

    static TopologyState from_model(const NetworkModel& model);
    bool operator==(const TopologyState&) const = default;
};

/// Assembles Y from in-service branches, current tap ratios and energized
/// shunt steps. Transformer taps stamp as an ideal from-side ratio in series
/// with the impedance. Throws Error for an empty model.
AdmittanceMatrix build_admittance(const NetworkModel& model, const TopologyState& topo);
AdmittanceMatrix build_admittance(const NetworkModel& model);

}  // namespace qsts
