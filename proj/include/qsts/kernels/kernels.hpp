#pragma once

#include <cstddef>
#include <string>

// Arithmetic inner loops of the power-flow solver. The bus power injections
//
//   P_i = V_i * sum_k V_k * (G_ik cos(d_i - d_k) + B_ik sin(d_i - d_k))
//   Q_i = V_i * sum_k V_k * (G_ik sin(d_i - d_k) - B_ik cos(d_i - d_k))
//
// and the Jacobian entries they induce are evaluated once per Newton
// iteration over a dense row-major G/B pair. That loop dominates runtime for
// a year-long chained run, so it exists as a scalar reference kernel and an
// AVX2 variant selected at runtime. Everything else in the solver calls
// through the dispatch table; the two variants are equivalence-tested
// against each other.

namespace qsts::kernels {

enum class Backend { scalar, avx2 };

bool avx2_supported();

/// Active backend. Defaults to the widest supported one; the QSTS_KERNEL
/// environment variable ("scalar" | "avx2") overrides at startup.
Backend active();
void select(Backend b);
std::string backend_name(Backend b);

/// Row i of the injection evaluation. Inputs are the dense admittance row
/// (g, b), per-bus voltage magnitudes vm and angle cosines/sines (cosd,
/// sind), and the row bus's own vi = vm[i], ci = cos(d_i), si = sin(d_i).
/// Writes the P-terms into t and the Q-terms into u:
///   t[k] = vi*vm[k]*(g[k]*cos(d_i-d_k) + b[k]*sin(d_i-d_k))
///   u[k] = vi*vm[k]*(g[k]*sin(d_i-d_k) - b[k]*cos(d_i-d_k))
/// so P_i = sum(t) and Q_i = sum(u).
void injection_terms_row(std::size_t n, const double* g, const double* b,
                         const double* vm, const double* cosd, const double* sind,
                         double vi, double ci, double si, double* t, double* u);

double sum(const double* x, std::size_t n);

namespace scalar {
void injection_terms_row(std::size_t n, const double* g, const double* b,
                         const double* vm, const double* cosd, const double* sind,
                         double vi, double ci, double si, double* t, double* u);
double sum(const double* x, std::size_t n);
}  // namespace scalar

#if defined(QSTS_HAVE_AVX2)
namespace avx2 {
void injection_terms_row(std::size_t n, const double* g, const double* b,
                         const double* vm, const double* cosd, const double* sind,
                         double vi, double ci, double si, double* t, double* u);
double sum(const double* x, std::size_t n);
}  // namespace avx2
#endif

}  // namespace qsts::kernels
