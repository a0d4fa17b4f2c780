#include "qsts/kernels/kernels.hpp"

namespace qsts::kernels::scalar {

void injection_terms_row(std::size_t n, const double* g, const double* b,
                         const double* vm, const double* cosd, const double* sind,
                         double vi, double ci, double si, double* t, double* u) {
    for (std::size_t k = 0; k < n; ++k) {
        // angle-difference identities keep the loop free of trig calls
        const double cdk = ci * cosd[k] + si * sind[k];
        const double sdk = si * cosd[k] - ci * sind[k];
        const double w = vi * vm[k];
        t[k] = w * (g[k] * cdk + b[k] * sdk);
        u[k] = w * (g[k] * sdk - b[k] * cdk);
    }
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += x[k];
    return acc;
}

}  // namespace qsts::kernels::scalar
