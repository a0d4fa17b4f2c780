#include "qsts/kernels/kernels.hpp"

#if defined(QSTS_HAVE_AVX2)

#include <immintrin.h>

namespace qsts::kernels::avx2 {

void injection_terms_row(std::size_t n, const double* g, const double* b,
                         const double* vm, const double* cosd, const double* sind,
                         double vi, double ci, double si, double* t, double* u) {
    const __m256d vvi = _mm256_set1_pd(vi);
    const __m256d vci = _mm256_set1_pd(ci);
    const __m256d vsi = _mm256_set1_pd(si);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d ck = _mm256_loadu_pd(cosd + k);
        const __m256d sk = _mm256_loadu_pd(sind + k);
        // cos(di-dk) = ci*ck + si*sk, sin(di-dk) = si*ck - ci*sk
        const __m256d cdk = _mm256_fmadd_pd(vci, ck, _mm256_mul_pd(vsi, sk));
        const __m256d sdk = _mm256_fmsub_pd(vsi, ck, _mm256_mul_pd(vci, sk));
        const __m256d w = _mm256_mul_pd(vvi, _mm256_loadu_pd(vm + k));
        const __m256d gk = _mm256_loadu_pd(g + k);
        const __m256d bk = _mm256_loadu_pd(b + k);
        const __m256d tp = _mm256_fmadd_pd(gk, cdk, _mm256_mul_pd(bk, sdk));
        const __m256d uq = _mm256_fmsub_pd(gk, sdk, _mm256_mul_pd(bk, cdk));
        _mm256_storeu_pd(t + k, _mm256_mul_pd(w, tp));
        _mm256_storeu_pd(u + k, _mm256_mul_pd(w, uq));
    }
    for (; k < n; ++k) {
        const double cdk = ci * cosd[k] + si * sind[k];
        const double sdk = si * cosd[k] - ci * sind[k];
        const double w = vi * vm[k];
        t[k] = w * (g[k] * cdk + b[k] * sdk);
        u[k] = w * (g[k] * sdk - b[k] * cdk);
    }
}

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + k));
    __m128d lo = _mm256_castpd256_pd128(acc);
    __m128d hi = _mm256_extractf128_pd(acc, 1);
    lo = _mm_add_pd(lo, hi);
    double tail = _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
    for (; k < n; ++k) tail += x[k];
    return tail;
}

}  // namespace qsts::kernels::avx2

#endif  // QSTS_HAVE_AVX2
