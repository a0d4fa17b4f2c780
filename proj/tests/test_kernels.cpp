#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "qsts/kernels/kernels.hpp"

using namespace qsts;

namespace {

struct RowCase {
    std::vector<double> g, b, vm, cosd, sind;
    double vi, ci, si;
};

RowCase random_row(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> adm(-40.0, 40.0);
    std::uniform_real_distribution<double> mag(0.85, 1.15);
    std::uniform_real_distribution<double> ang(-0.6, 0.6);
    RowCase c;
    c.g.resize(n);
    c.b.resize(n);
    c.vm.resize(n);
    c.cosd.resize(n);
    c.sind.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        c.g[k] = adm(rng);
        c.b[k] = adm(rng);
        c.vm[k] = mag(rng);
        const double a = ang(rng);
        c.cosd[k] = std::cos(a);
        c.sind[k] = std::sin(a);
    }
    c.vi = mag(rng);
    const double ai = ang(rng);
    c.ci = std::cos(ai);
    c.si = std::sin(ai);
    return c;
}

}  // namespace

TEST_CASE("scalar kernel matches direct trig evaluation") {
    const std::size_t n = 17;
    RowCase c = random_row(n, 7);
    std::vector<double> t(n), u(n);
    kernels::scalar::injection_terms_row(n, c.g.data(), c.b.data(), c.vm.data(), c.cosd.data(),
                                         c.sind.data(), c.vi, c.ci, c.si, t.data(), u.data());
    const double ai = std::atan2(c.si, c.ci);
    for (std::size_t k = 0; k < n; ++k) {
        const double ak = std::atan2(c.sind[k], c.cosd[k]);
        const double d = ai - ak;
        const double w = c.vi * c.vm[k];
        CHECK(t[k] == doctest::Approx(w * (c.g[k] * std::cos(d) + c.b[k] * std::sin(d))).epsilon(1e-12));
        CHECK(u[k] == doctest::Approx(w * (c.g[k] * std::sin(d) - c.b[k] * std::cos(d))).epsilon(1e-12));
    }
}

TEST_CASE("avx2 variant is equivalent to the scalar reference") {
    if (!kernels::avx2_supported()) return;
    for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 30u, 129u}) {
        RowCase c = random_row(n, 100 + static_cast<unsigned>(n));
        std::vector<double> ts(n), us(n), tv(n), uv(n);
        kernels::scalar::injection_terms_row(n, c.g.data(), c.b.data(), c.vm.data(), c.cosd.data(),
                                             c.sind.data(), c.vi, c.ci, c.si, ts.data(), us.data());
#if defined(QSTS_HAVE_AVX2)
        kernels::avx2::injection_terms_row(n, c.g.data(), c.b.data(), c.vm.data(), c.cosd.data(),
                                           c.sind.data(), c.vi, c.ci, c.si, tv.data(), uv.data());
#endif
        for (std::size_t k = 0; k < n; ++k) {
            CHECK(tv[k] == doctest::Approx(ts[k]).epsilon(1e-13));
            CHECK(uv[k] == doctest::Approx(us[k]).epsilon(1e-13));
        }
        double ss = kernels::scalar::sum(ts.data(), n);
#if defined(QSTS_HAVE_AVX2)
        double sv = kernels::avx2::sum(ts.data(), n);
        CHECK(sv == doctest::Approx(ss).epsilon(1e-13));
#else
        (void)ss;
#endif
    }
}

TEST_CASE("backend selection is sticky and env-safe") {
    const kernels::Backend before = kernels::active();
    kernels::select(kernels::Backend::scalar);
    CHECK(kernels::active() == kernels::Backend::scalar);
    kernels::select(kernels::Backend::avx2);
    if (kernels::avx2_supported())
        CHECK(kernels::active() == kernels::Backend::avx2);
    else
        CHECK(kernels::active() == kernels::Backend::scalar);
    kernels::select(before);
    CHECK(kernels::backend_name(kernels::Backend::scalar) == "scalar");
}
