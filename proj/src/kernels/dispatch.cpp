#include "qsts/kernels/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace qsts::kernels {

bool avx2_supported() {
#if defined(QSTS_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

Backend initial_backend() {
    if (const char* env = std::getenv("QSTS_KERNEL")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0 && avx2_supported()) return Backend::avx2;
    }
    return avx2_supported() ? Backend::avx2 : Backend::scalar;
}

Backend g_active = initial_backend();

}  // namespace

Backend active() { return g_active; }

void select(Backend b) {
    if (b == Backend::avx2 && !avx2_supported()) b = Backend::scalar;
    g_active = b;
}

std::string backend_name(Backend b) {
    return b == Backend::avx2 ? "avx2" : "scalar";
}

void injection_terms_row(std::size_t n, const double* g, const double* b,
                         const double* vm, const double* cosd, const double* sind,
                         double vi, double ci, double si, double* t, double* u) {
#if defined(QSTS_HAVE_AVX2)
    if (g_active == Backend::avx2) {
        avx2::injection_terms_row(n, g, b, vm, cosd, sind, vi, ci, si, t, u);
        return;
    }
#endif
    scalar::injection_terms_row(n, g, b, vm, cosd, sind, vi, ci, si, t, u);
}

double sum(const double* x, std::size_t n) {
#if defined(QSTS_HAVE_AVX2)
    if (g_active == Backend::avx2) return avx2::sum(x, n);
#endif
    return scalar::sum(x, n);
}

}  // namespace qsts::kernels
