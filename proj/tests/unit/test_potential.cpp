#include <cmath>

#include "doctest.h"
#include "exwkb/errors.hpp"
#include "exwkb/potential.hpp"
#include "helpers.hpp"

using namespace exwkb;
using testing::airy;
using testing::weber;

namespace {

const CriticalPoint* find_infinity(const std::vector<CriticalPoint>& cps) {
    for (const auto& c : cps) {
        if (c.at_infinity) return &c;
    }
    return nullptr;
}

// Sum of zero orders minus sum of pole orders of phi_0 on the sphere.
int divisor_degree(const std::vector<CriticalPoint>& cps) {
    int d = 0;
    for (const auto& c : cps) d += c.kind == CriticalKind::zero ? c.order : -c.order;
    return d;
}

Potential rational(Poly num, Poly den) { return Potential({RationalFn(std::move(num), std::move(den))}); }

}  // namespace

TEST_CASE("classify Airy, constant and Weber") {
    auto cps = classify(airy());
    REQUIRE(cps.size() == 2);
    CHECK(cps[0].kind == CriticalKind::zero);
    CHECK(std::abs(cps[0].location) < 1e-12);
    CHECK(cps[0].has_label("simple_turning_point"));
    const auto* inf = find_infinity(cps);
    REQUIRE(inf != nullptr);
    CHECK(inf->kind == CriticalKind::pole);
    CHECK(inf->order == 5);
    CHECK_FALSE(inf->even);
    CHECK(inf->has_label("virtual_zero"));

    cps = classify(testing::constant());
    REQUIRE(cps.size() == 1);
    CHECK(cps[0].at_infinity);
    CHECK(cps[0].order == 4);
    CHECK(cps[0].even);

    cps = classify(weber());
    REQUIRE(cps.size() == 3);
    CHECK(find_infinity(cps)->order == 6);
    int zeros = 0;
    for (const auto& c : cps) {
        if (c.kind == CriticalKind::zero) {
            ++zeros;
            CHECK(std::abs(std::abs(c.location) - 1.0) < 1e-12);
        }
    }
    CHECK(zeros == 2);
}

TEST_CASE("label invariants and sum rule") {
    const std::vector<Potential> ps{
        airy(), weber(), testing::constant(),
        rational({1.0}, {0.0, 1.0}),                        // 1/x
        rational({4.0}, {0.0, 0.0, 1.0}),                   // 4/x^2
        rational({1.0, 6.0, 9.0}, {0.0, 0.0, 0.0, 0.0, 1.0}),  // (1/x^2 + 3/x)^2
        testing::poly_potential({{0.0, -1.0, 0.0, 1.0}}),
        rational({1.0, 0.0, 1.0}, {0.0, 1.0, 0.0, 2.0}),
    };
    for (const auto& p : ps) {
        const auto cps = classify(p);
        CHECK(divisor_degree(cps) == -4);
        for (const auto& c : cps) {
            CHECK(c.even == (c.order % 2 == 0));
            if (c.kind == CriticalKind::zero) CHECK(c.has_label("turning_point"));
            if (c.kind == CriticalKind::pole) {
                const bool tp = c.has_label("turning_point") && !c.has_label("simple_turning_point");
                CHECK((c.order == 1) == tp);
            }
        }
    }
}

TEST_CASE("degree bookkeeping at infinity") {
    for (int d = 0; d <= 7; ++d) {
        Poly num(std::size_t(d) + 1, cplx{0.5});
        num.back() = 1.0;
        num[0] = 2.0 + d;
        const auto cps = classify(rational(num, {1.0}));
        CHECK(find_infinity(cps)->order == d + 4);
    }
}

TEST_CASE("divisor minimality check") {
    // zero at 1 + 1e-9, pole at 1
    CHECK_THROWS_WITH_AS(classify(rational({-(1.0 + 1e-9), 1.0}, {-1.0, 1.0})),
                         "divisor not minimal at desk tolerance", InputError);
}

TEST_CASE("quadratic residues") {
    auto p = rational({4.0}, {0.0, 0.0, 1.0});
    auto cps = classify(p);
    for (const auto& c : cps) {
        if (!c.at_infinity) CHECK(std::abs(quadratic_residue(p, c) - 4.0) < 1e-12);
    }

    cps = classify(airy());
    CHECK(quadratic_residue(airy(), *find_infinity(cps)) == cplx{});
    for (const auto& c : cps) {
        if (c.kind == CriticalKind::zero) CHECK_THROWS_AS(quadratic_residue(airy(), c), InputError);
    }

    // (1/x^2 + 3/x)^2 = (1 + 6x + 9x^2)/x^4
    p = rational({1.0, 6.0, 9.0}, {0.0, 0.0, 0.0, 0.0, 1.0});
    for (const auto& c : classify(p)) {
        if (!c.at_infinity && c.kind == CriticalKind::pole) {
            CHECK(c.order == 4);
            CHECK(std::abs(quadratic_residue(p, c) - 9.0) < 1e-10);
        }
    }
}

TEST_CASE("quadratic residue is invariant under affine recoordination") {
    // Q0 dx^2 with x = a u + b: Q0(a u + b) a^2 du^2.
    const cplx a(1.5, -0.5), b(0.3, 2.0);
    const Poly num{1.0, 6.0, 9.0};
    const auto p = rational(num, {0.0, 0.0, 0.0, 0.0, 1.0});
    // numerator (1 + 6x + 9x^2) a^2 in u, denominator x^4 in u
    const Poly xu{b, a};
    const Poly n2{a * a};
    Poly numu{cplx{}};
    Poly powx{1.0};
    for (const auto& c : num) {
        Poly term = poly_mul(powx, Poly{c});
        numu.resize(std::max(numu.size(), term.size()));
        for (std::size_t i = 0; i < term.size(); ++i) numu[i] += term[i];
        powx = poly_mul(powx, xu);
    }
    numu = poly_mul(numu, n2);
    const Poly denu = poly_mul(poly_mul(xu, xu), poly_mul(xu, xu));
    const auto q = rational(numu, denu);
    cplx r1{}, r2{};
    for (const auto& c : classify(p)) {
        if (!c.at_infinity && c.kind == CriticalKind::pole) r1 = quadratic_residue(p, c);
    }
    for (const auto& c : classify(q)) {
        if (!c.at_infinity && c.kind == CriticalKind::pole) r2 = quadratic_residue(q, c);
    }
    CHECK(std::abs(r1 - r2) <= 1e-8 * std::abs(r1));
}

TEST_CASE("simple and complete") {
    auto s = is_simple_complete(airy());
    CHECK(s.simple);
    CHECK(s.complete);
    s = is_simple_complete(testing::poly_potential({{0.0, 0.0, 1.0}}));
    CHECK_FALSE(s.simple);
    CHECK_FALSE(s.complete);
    s = is_simple_complete(rational({1.0}, {0.0, 1.0}));
    CHECK(s.simple);
    CHECK_FALSE(s.complete);
}

TEST_CASE("potential validation and json") {
    CHECK_THROWS_AS(rational({0.0}, {1.0}), InputError);
    CHECK_THROWS_AS(RationalFn({1.0}, {0.0}), InputError);
    // Q_1 with a pole where Q_0 has none.
    CHECK_THROWS_AS(Potential({RationalFn({0.0, 1.0}, {1.0}), RationalFn({1.0}, {0.0, 1.0})}), InputError);

    const auto j = nlohmann::json::parse(R"({"Q": [{"num": [0, 1]}, {"num": [[0, 1]], "den": [1]}]})");
    const auto p = Potential::from_json(j);
    CHECK(p.hbar_degree() == 1);
    CHECK(p.Q(1)(2.0) == cplx(0, 1));
    CHECK(Potential::from_json(p.to_json()).to_json() == p.to_json());
    CHECK_THROWS_AS(Potential::from_json(nlohmann::json::parse(R"({"Q": [{"num": [1]}], "x": 1})")), InputError);
    CHECK_THROWS_AS(Potential::from_json(nlohmann::json::parse(R"({"Q": [{"nom": [1]}]})")), InputError);
}

TEST_CASE("common roots cancel") {
    const RationalFn f({-1.0, 1.0}, {-1.0, 0.0, 1.0});  // (x-1)/(x^2-1) = 1/(x+1)
    CHECK(poly_degree(f.num()) == 0);
    CHECK(poly_degree(f.den()) == 1);
    CHECK(std::abs(f(2.0) - 1.0 / 3.0) < 1e-14);
}
