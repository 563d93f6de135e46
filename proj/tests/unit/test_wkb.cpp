#include <cmath>
#include <numbers>
#include <random>

#include <boost/multiprecision/cpp_complex.hpp>

#include "doctest.h"
#include "exwkb/errors.hpp"
#include "exwkb/wkb.hpp"
#include "helpers.hpp"

using namespace exwkb;
using testing::airy;
using testing::weber;
using mp = boost::multiprecision::cpp_complex_50;

namespace {

// Airy: y_k = c_k x^{e_k} with e_k = (1 - 3k)/2.
std::vector<double> airy_c(int n) {
    std::vector<double> c{1.0};
    for (int k = 1; k <= n; ++k) {
        const double e = (1.0 - 3.0 * (k - 1)) / 2.0;
        double s = c[std::size_t(k - 1)] * e;
        for (int i = 1; i < k; ++i) s -= c[std::size_t(i)] * c[std::size_t(k - i)];
        c.push_back(s / 2.0);
    }
    return c;
}

// Potential with all of Q_0..Q_3 nonzero.
Potential deformed() {
    return Potential({RationalFn({-1.0, 0.0, 1.0}, {1.0}), RationalFn({cplx(0.3, 0.2), 0.5}, {1.0}),
                      RationalFn({0.7, cplx(0, -0.4)}, {1.0}), RationalFn({0.25, 0.1}, {1.0})});
}

template <class F>
double log_slope(F residual) {
    std::vector<double> lx, ly;
    for (int i = 0; i <= 8; ++i) {
        const double h = std::pow(10.0, -3.0 + 2.0 * i / 8.0);
        lx.push_back(std::log(h));
        ly.push_back(std::log(residual(h)));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= double(lx.size());
    my /= double(ly.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxy / sxx;
}

}  // namespace

TEST_CASE("Airy recursion at x = 1") {
    const auto w = wkb_recursion(airy(), {1.0, 1}, 6);
    const auto c = airy_c(6);
    CHECK(std::abs(w.y[0] - 1.0) < 1e-15);
    CHECK(std::abs(w.y[1] - 0.25) < 1e-12);
    CHECK(std::abs(w.y[2] + 5.0 / 32.0) < 1e-12);
    for (int k = 0; k <= 6; ++k) CHECK(std::abs(w.y[std::size_t(k)] - c[std::size_t(k)]) < 1e-12);

    const cplx x(2.0, -1.5);
    const auto w2 = wkb_recursion(airy(), x, std::sqrt(x), 6);
    for (int k = 0; k <= 6; ++k) {
        const cplx expect = c[std::size_t(k)] * std::pow(std::sqrt(x), 1.0 - 3.0 * k);
        CHECK(std::abs(w2.y[std::size_t(k)] - expect) < 1e-12 * std::abs(expect));
    }
    CHECK_THROWS_AS(wkb_recursion(airy(), {0.0, 1}, 3), InputError);
}

TEST_CASE("leading coefficient squares to Q_0") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 10; ++i) {
        const cplx x(u(rng), u(rng));
        const auto w = wkb_recursion(weber(), {x, i % 2 ? 1 : -1}, 4);
        CHECK(std::abs(w.y[0] * w.y[0] - (x * x - 1.0)) <= 1e-10 * std::abs(x * x - 1.0));
    }
}

TEST_CASE("transformation law") {
    CHECK(transform_check(airy(), RationalFn({0.0, 1.0}, {1.0}), {1.0, 1}, 4) == 0.0);
    CHECK(transform_check(airy(), RationalFn({0.0, 2.0}, {1.0}), {1.0, 1}, 4) < 1e-9);
    CHECK(transform_check(airy(), RationalFn({0.0, 1.0, 0.1}, {1.0}), {1.0, 1}, 4) < 1e-8);
    CHECK(transform_check(weber(), RationalFn({1.0, 2.0}, {cplx(1.0, 0.5), 1.0}), {cplx(2.0, 0.3), -1}, 6) <
          1e-8);
    CHECK_THROWS_AS(transform_check(airy(), RationalFn({0.0, 0.0, 1.0}, {1.0}), {1e-6, 1}, 4), InputError);
}

TEST_CASE("canonical generator") {
    CHECK(canonical_generator_log(testing::constant(), {0.0, cplx(1.0, 2.0), 3.0}) == cplx{});
    CHECK(std::abs(canonical_generator_log(airy(), {1.0, 4.0}) + 0.25 * std::log(4.0)) < 1e-13);
    std::vector<cplx> loop;
    for (int k = 0; k <= 12; ++k) loop.push_back(std::polar(1.0, 2.0 * std::numbers::pi * k / 12));
    CHECK(std::abs(canonical_generator_log(airy(), loop) + 0.25 * cplx(0, 2.0 * std::numbers::pi)) < 1e-12);
    CHECK_THROWS_AS(canonical_generator_log(airy(), {-1.0, 0.0, 1.0}), InputError);
}

TEST_CASE("formal WKB differential") {
    const auto lam = formal_wkb_differential(weber(), {cplx(1.3, 0.4), 1}, 3);
    CHECK(std::abs(lam[0]) < 1e-14);
    const auto la = formal_wkb_differential(airy(), {1.0, 1}, 2);
    CHECK(std::abs(la[1] + 5.0 / 32.0) < 1e-13);

    // With Q_1 present, Lambda_0 = Q_1 / (2 y_0) in the sign convention of hbar Y' = Y^2 - Q.
    const auto p = deformed();
    const cplx x(0.4, 1.2);
    const cplx y0 = liouville(p, {x, 1});
    const auto ld = formal_wkb_differential(p, {x, 1}, 2);
    CHECK(std::abs(ld[0] - p.Q(1)(x) / (2.0 * y0)) < 1e-13);
}

TEST_CASE("Lambda transforms as a differential under affine charts") {
    // x = a u + b applied to Weber: Q~_0(u) = ((a u + b)^2 - 1) a^2.
    const cplx a(2.0, 0.5), b(0.1, -0.3);
    const Poly q0u = poly_mul(Poly{a * a}, Poly{b * b - 1.0, 2.0 * a * b, a * a});
    const Potential pu({RationalFn(q0u, {1.0})});
    const cplx u(0.7, 0.2);
    const cplx x = a * u + b;
    const cplx y0 = liouville(weber(), {x, 1});
    const auto lx = formal_wkb_differential(weber(), x, y0, 4);
    const auto lu = formal_wkb_differential(pu, u, y0 * a, 4);
    for (std::size_t k = 0; k <= 4; ++k) CHECK(std::abs(lu[k] - lx[k] * a) <= 1e-8 * std::max(1.0, std::abs(lx[k] * a)));
}

TEST_CASE("Riccati data for Airy") {
    const auto rd = riccati_data(airy(), 4);
    const auto v = rd.at(1.0, 1.0);
    CHECK(v.w == cplx{});
    CHECK(std::abs(v.W[0] - 5.0 / 64.0) < 1e-14);
    CHECK(std::abs(v.f[0] + 5.0 / 64.0) < 1e-14);
    const auto c = airy_c(6);
    for (int k = 1; k <= 4; ++k) CHECK(std::abs(v.f[std::size_t(k - 1)] - c[std::size_t(k + 1)] / 2.0) < 1e-13);
    CHECK(RiccatiData::omega(v, 0.7) == cplx{});
    CHECK_THROWS_AS(rd.at(0.0, 1.0), InputError);

    const auto g = borel_germ(airy(), 1.0, 1.0, 5);
    CHECK(std::abs(g[0] - v.f[0]) < 1e-15);
    CHECK(std::abs(g[3] - v.f[3] / 6.0) < 1e-15);
}

TEST_CASE("sheet swap") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 5; ++i) {
        const cplx x(u(rng), u(rng));
        const auto rd = riccati_data(weber(), 5);
        const cplx y0 = liouville(weber(), {x, 1});
        const auto vp = rd.at(x, y0), vm = rd.at(x, -y0);
        CHECK(vp.w == vm.w);
        for (int k = 1; k <= 5; ++k) {
            const double s = k % 2 ? 1.0 : -1.0;
            CHECK(std::abs(vm.f[std::size_t(k - 1)] - s * vp.f[std::size_t(k - 1)]) <=
                  1e-12 * (1.0 + std::abs(vp.f[std::size_t(k - 1)])));
        }
        const auto path = path_from_polyline(weber(), {x, x + cplx(0.3, 0.2)}, y0, 8);
        const auto sp = assemble_solution(weber(), path, 2);
        const auto sm = assemble_solution(weber(), sheet_flipped(path), 2);
        CHECK(std::abs(sp.S + sm.S) < 1e-12);
    }
}

TEST_CASE("residual orders vanish through N") {
    // Includes Q_1..Q_3, which pins down the sign with which they enter the recursion.
    for (int N : {3, 6}) {
        const auto p = deformed();
        const cplx x(1.7, 0.6);
        const cplx y0 = liouville(p, {x, 1});
        const double ss = log_slope([&](double h) {
            return double(abs(schrodinger_residual<mp>(p, x, y0, N, mp(h))));
        });
        const double sr = log_slope([&](double h) {
            return double(abs(riccati_residual<mp>(p, x, y0, N, mp(h))));
        });
        CHECK(std::abs(ss - (N + 1)) < 0.2);
        CHECK(std::abs(sr - (N + 1)) < 0.2);
    }
}

TEST_CASE("assembled solution") {
    auto path = path_from_points(airy(), {1.0, 1.0}, 1.0);
    auto s = assemble_solution(airy(), path, 3);
    CHECK(s.S == cplx{});
    CHECK(s.amplitude[0] == cplx(1.0));
    for (std::size_t k = 1; k <= 3; ++k) CHECK(s.amplitude[k] == cplx{});

    path = path_from_polyline(testing::constant(), {0.0, 1.0}, 1.0, 4);
    s = assemble_solution(testing::constant(), path, 3);
    CHECK(std::abs(s.S - 1.0) < 1e-14);
    for (std::size_t k = 0; k <= 3; ++k) CHECK(std::abs(s.amplitude[k] - (k == 0 ? 1.0 : 0.0)) < 1e-14);

    // Exact integrals of y_2 = -5/32 x^{-5/2} and y_3 = 15/64 x^{-4} over [1, 2].
    path = path_from_polyline(airy(), {1.0, 2.0}, 1.0, 16);
    s = assemble_solution(airy(), path, 2);
    const double I1 = -5.0 / 32.0 * (2.0 / 3.0) * (1.0 - std::pow(2.0, -1.5));
    const double I2 = 15.0 / 64.0 * (7.0 / 24.0);
    CHECK(std::abs(s.amplitude[0] - 1.0) < 1e-12);
    CHECK(std::abs(s.amplitude[1] + I1) < 1e-8);
    CHECK(std::abs(s.amplitude[2] - (-I2 + 0.5 * I1 * I1)) < 1e-8);
    CHECK(std::abs(s.S - (2.0 / 3.0) * (std::pow(2.0, 1.5) - 1.0)) < 1e-12);
    CHECK(std::abs(s.a0_log + 0.25 * std::log(2.0)) < 1e-12);
}
