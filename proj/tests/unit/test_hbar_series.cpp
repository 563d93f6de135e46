#include <cmath>
#include <random>

#include "doctest.h"
#include "exwkb/errors.hpp"
#include "exwkb/hbar_series.hpp"
#include "exwkb/wkb.hpp"
#include "helpers.hpp"

using namespace exwkb;

namespace {

TSeries random_tseries(std::mt19937& rng, std::size_t n) {
    std::normal_distribution<double> d;
    std::vector<cplx> c;
    for (std::size_t i = 0; i < n; ++i) c.emplace_back(d(rng), d(rng));
    return TSeries(c);
}

}  // namespace

TEST_CASE("borel transform examples") {
    auto b = borel_transform(HbarSeries({0.0, 1.0}));
    REQUIRE(b.order() == 1);
    CHECK(b[0] == cplx(1.0));

    b = borel_transform(HbarSeries({3.0, 0.0, 0.0, 0.0}));
    for (const auto& c : b.coeffs()) CHECK(c == cplx{});

    std::vector<cplx> a;
    double f = 1.0;
    for (int k = 0; k <= 6; ++k) {
        if (k > 0) f *= k;
        a.emplace_back(f);
    }
    b = borel_transform(HbarSeries(a));
    REQUIRE(b.order() == 6);
    for (std::size_t k = 0; k < 6; ++k) CHECK(std::abs(b[k] - 1.0) < 1e-15);

    CHECK_THROWS_AS(borel_transform(HbarSeries({1.0})), InputError);
    CHECK_THROWS_AS(HbarSeries({cplx(NAN, 0.0)}), InputError);
}

TEST_CASE("borel transform is linear and inverted by formal laplace") {
    const HbarSeries f({1.0, 2.0, cplx(0, 3), -4.0, 5.0});
    const HbarSeries g({0.5, cplx(1, 1), 7.0, 2.0, -1.0});
    const cplx al(2, -1), be(0.5, 3);
    const auto lhs = borel_transform(al * f + be * g);
    const auto bf = borel_transform(f), bg = borel_transform(g);
    for (std::size_t k = 0; k < lhs.order(); ++k) {
        CHECK(std::abs(lhs[k] - (al * bf[k] + be * bg[k])) <= 1e-15 * (1.0 + std::abs(lhs[k])));
    }

    const auto back = formal_laplace(bf, f[0]);
    for (std::size_t k = 0; k <= f.order(); ++k) CHECK(std::abs(back[k] - f[k]) < 1e-13);
}

TEST_CASE("truncated convolution") {
    const auto one_one = convolve_truncated(TSeries({1.0, 0.0, 0.0}), TSeries({1.0, 0.0, 0.0}));
    CHECK(one_one[0] == cplx{});
    CHECK(std::abs(one_one[1] - 1.0) < 1e-15);

    const auto tt = convolve_truncated(TSeries({0.0, 1.0, 0.0, 0.0}), TSeries({0.0, 1.0, 0.0, 0.0}));
    CHECK(std::abs(tt[3] - 1.0 / 6.0) < 1e-15);
    CHECK(std::abs(tt[2]) < 1e-15);

    CHECK_THROWS_AS(convolve_truncated(TSeries({1.0}), TSeries({1.0, 2.0})), InputError);

    std::mt19937 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const auto f = random_tseries(rng, 8), g = random_tseries(rng, 8), h = random_tseries(rng, 8);
        const auto fg = convolve_truncated(f, g), gf = convolve_truncated(g, f);
        const auto l = convolve_truncated(fg, h), r = convolve_truncated(f, convolve_truncated(g, h));
        for (std::size_t k = 0; k < 8; ++k) {
            CHECK(std::abs(fg[k] - gf[k]) <= 1e-12 * (1.0 + std::abs(fg[k])));
            CHECK(std::abs(l[k] - r[k]) <= 1e-12 * (1.0 + std::abs(l[k])));
        }
    }
}

TEST_CASE("factorial type estimate") {
    std::vector<cplx> a, b;
    double f = 1.0;
    for (int k = 0; k <= 12; ++k) {
        if (k > 0) f *= k;
        a.emplace_back(f);
        b.emplace_back(f * std::pow(2.0, k));
    }
    CHECK(std::abs(factorial_type_estimate(HbarSeries(a)).M - 1.0) < 1e-6);
    CHECK(std::abs(factorial_type_estimate(HbarSeries(b)).M - 2.0) < 1e-6);
    const auto z = factorial_type_estimate(HbarSeries(std::vector<cplx>(6, cplx{})));
    CHECK(z.C == 0.0);
    CHECK(z.M == 0.0);
    CHECK_THROWS_AS(factorial_type_estimate(HbarSeries({1.0, 1.0})), InputError);

    // Airy f-hat coefficients at x = 1 (closed-form recursion y_k = c_k x^{(1-3k)/2}).
    std::vector<double> c{1.0};
    for (int k = 1; k <= 21; ++k) {
        const double e = (1.0 - 3.0 * (k - 1)) / 2.0;
        double s = c[std::size_t(k - 1)] * e;
        for (int i = 1; i < k; ++i) s -= c[std::size_t(i)] * c[std::size_t(k - i)];
        c.push_back(s / 2.0);
    }
    std::vector<cplx> fk{0.0, 0.0};
    for (int k = 2; k <= 20; ++k) fk.emplace_back(c[std::size_t(k + 1)] / 2.0);
    const auto fit = factorial_type_estimate(HbarSeries(fk));
    CHECK(std::isfinite(fit.M));
    CHECK(fit.M > 0.0);
    CHECK(fit.residual < 0.5);
}

TEST_CASE("json round trip") {
    const HbarSeries f({1.0, cplx(2, -3)});
    const nlohmann::json j = f;
    CHECK(j.dump() == "[[1.0,0.0],[2.0,-3.0]]");
    const auto g = j.get<HbarSeries>();
    CHECK(g[1] == cplx(2, -3));
}
