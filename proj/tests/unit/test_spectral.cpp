#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "exwkb/errors.hpp"
#include "exwkb/spectral.hpp"
#include "helpers.hpp"

using namespace exwkb;
using testing::airy;
using testing::weber;

namespace {

std::vector<cplx> circle(cplx c, double r, int n) {
    std::vector<cplx> v;
    for (int k = 0; k <= n; ++k) v.push_back(c + std::polar(r, 2.0 * std::numbers::pi * k / n));
    return v;
}

}  // namespace

TEST_CASE("liouville values and antisymmetry") {
    CHECK(liouville(testing::constant(), {cplx(0.3, -2.0), 1}) == cplx(1.0));
    CHECK(std::abs(liouville(airy(), {1.0, 1}) - 1.0) < 1e-15);
    CHECK_THROWS_AS(liouville(airy(), {0.0, 1}), InputError);

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const auto w = weber();
    for (int i = 0; i < 20; ++i) {
        const cplx x(u(rng), u(rng));
        const cplx a = liouville(w, {x, 1});
        CHECK(liouville(w, {x, -1}) == -a);
        CHECK(std::abs(a * a - (x * x - 1.0)) < 1e-12 * (1.0 + std::norm(x)));
    }
}

TEST_CASE("central charge examples") {
    const auto seg = path_from_polyline(testing::constant(), {0.0, 1.0}, 1.0, 8);
    CHECK(std::abs(central_charge(testing::constant(), seg) - 2.0) < 1e-14);
    CHECK(std::abs(seg.total_Z() - 2.0) < 1e-14);

    // Airy 1 -> eps: (4/3)(eps^{3/2} - 1) -> -4/3.
    for (double eps : {1e-4, 1e-6, 1e-8}) {
        const auto path = path_from_polyline(airy(), {1.0, eps}, 1.0, 256);
        const cplx z = central_charge(airy(), path);
        CHECK(std::abs(z - (4.0 / 3.0) * (std::pow(eps, 1.5) - 1.0)) < 1e-6);
    }
    CHECK(std::abs(z_to_critical(airy(), 1.0, 1.0, 0.0) + 4.0 / 3.0) < 1e-12);
    CHECK(std::abs(z_to_critical(airy(), cplx(2.0, 1.0), std::sqrt(cplx(2.0, 1.0)), 0.0) +
                   (4.0 / 3.0) * std::pow(cplx(2.0, 1.0), 1.5)) < 1e-12);

    // Weber: integral of sigma from -1 to 1 along the upper side is i pi up to sign.
    const cplx zw = z_to_critical(weber(), cplx(0.0, 1e-300), cplx(0.0, 1.0), 1.0) -
                    z_to_critical(weber(), cplx(0.0, 1e-300), cplx(0.0, 1.0), -1.0);
    CHECK(std::abs(std::abs(zw) - std::numbers::pi) < 1e-10);
}

TEST_CASE("concatenation and sheet flip") {
    const auto p = weber();
    const cplx y0 = liouville(p, {2.0, 1});
    const auto a = path_from_polyline(p, {2.0, cplx(2.0, 1.0)}, y0, 32);
    const auto b = path_from_polyline(p, {cplx(2.0, 1.0), cplx(0.5, 2.0), cplx(-0.5, 1.5)}, a.y0.back(), 32);
    const auto ab = concatenate(a, b);
    CHECK(std::abs(central_charge(p, ab) - central_charge(p, a) - central_charge(p, b)) < 1e-10);
    CHECK(std::abs(ab.total_Z() - a.total_Z() - b.total_Z()) < 1e-10);
    CHECK(std::abs(central_charge(p, sheet_flipped(ab)) + central_charge(p, ab)) < 1e-10);
    CHECK_THROWS_AS(concatenate(b, a), InputError);
    CHECK_THROWS_AS(path_from_polyline(p, {2.0, 0.0}, y0, 8), InputError);
}

TEST_CASE("monodromy of the sheet") {
    // Around a simple zero the sheet flips.
    const auto loop = path_from_polyline(airy(), circle(0.0, 1.0, 16), 1.0, 16);
    CHECK(loop.sheet.front() == -loop.sheet.back());
    CHECK(std::abs(loop.y0.back() + loop.y0.front()) < 1e-12);

    // Around a double pole it does not.
    const Potential dp({RationalFn({4.0}, {0.0, 0.0, 1.0})});
    const auto loop2 = path_from_polyline(dp, circle(0.0, 1.0, 16), 2.0, 16);
    CHECK(loop2.sheet.front() == loop2.sheet.back());
    CHECK(std::abs(loop2.y0.back() - loop2.y0.front()) < 1e-12);
}

TEST_CASE("flow of V") {
    auto path = flow_V(testing::constant(), {cplx(0.5, 0.5), 1}, 3.0, 10);
    CHECK(std::abs(path.x.back() - cplx(2.0, 0.5)) < 1e-10);

    const double t = 4.0 / 3.0 * (std::pow(2.0, 1.5) - 1.0);
    path = flow_V(airy(), {1.0, 1}, t, 20);
    CHECK(std::abs(path.x.back() - 2.0) < 1e-6);
    for (std::size_t i = 0; i < path.size(); ++i) {
        const double r = path.s[i];
        const cplx exact = std::pow(1.0 + 0.75 * r, 2.0 / 3.0);
        CHECK(std::abs(path.x[i] - exact) < 1e-8);
    }
    CHECK(std::abs(central_charge(airy(), path) - t) < 1e-8 * (1.0 + t));

    const cplx tc(0.7, 1.1);
    const auto fwd = flow_V(weber(), {2.0, 1}, tc, 16);
    CHECK(std::abs(central_charge(weber(), fwd) - tc) < 1e-8 * (1.0 + std::abs(tc)));
    const auto back = flow_V(weber(), fwd.x.back(), fwd.y0.back(), -tc, 16);
    CHECK(std::abs(back.x.back() - 2.0) < 1e-8);
    CHECK(back.sheet.back() == 1);
}

TEST_CASE("flow stops at a transition point") {
    bool thrown = false;
    try {
        flow_V(airy(), {1.0, 1}, -1.5, 10);
    } catch (const FlowError& e) {
        thrown = true;
        CHECK(std::abs(e.transition_point) < 1e-12);
        CHECK(e.z_distance < 1e-2);
    }
    CHECK(thrown);
}

TEST_CASE("flow leaves to infinity through the inverted chart") {
    // Q0 = 1: x moves linearly; a long flow crosses |x| = 1e6.
    const auto path = flow_V(testing::constant(), {0.0, 1}, 4e6, 4);
    CHECK(std::abs(path.x.back() - 2e6) < 1e-3);
}

TEST_CASE("csv export") {
    const auto path = path_from_points(testing::constant(), {0.0, 1.0}, 1.0);
    const std::string csv = path_to_csv(path);
    CHECK(csv.rfind("s,re_x,im_x,sheet,re_Z,im_Z\n0,0,0,1,0,0\n1,1,0,1,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
