// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/multiprecision/cpp_complex.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "exwkb/borel_engine.hpp"
#include "exwkb/resummation.hpp"
#include "exwkb/trajectories.hpp"
#include "exwkb/wkb.hpp"

using namespace exwkb;
using mp = boost::multiprecision::cpp_complex_50;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

Potential airy() { return Potential({RationalFn({0.0, 1.0}, {1.0})}); }
Potential weber() { return Potential({RationalFn({-1.0, 0.0, 1.0}, {1.0})}); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double quad(const std::function<double(double)>& f, double a, double b) {
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate(f, a, b);
}

// Central charges by independent quadrature.
double airy_xi() { return quad([](double x) { return 2.0 * std::sqrt(x); }, 0.0, 1.0); }
double weber_z21() { return quad([](double x) { return 2.0 * std::sqrt(x * x - 1.0); }, 1.0, 2.0); }
double weber_period() { return quad([](double x) { return 2.0 * std::sqrt(1.0 - x * x); }, -1.0, 1.0); }

cplx horner(const std::vector<cplx>& a, cplx t) {
    cplx s{};
    for (std::size_t k = a.size(); k-- > 0;) s = s * t + a[k];
    return s;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / x.size();
        my += y[i] / y.size();
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

Outcome wkb_exactness() {
    // Q = x: y0 = sqrt x, y1 = y0'/(2 y0) = 1/(4x), y2 = (y1' - y1^2)/(2 y0) = -5/(32 x^{5/2})
    const auto y = wkb_recursion(airy(), {1.0, 1}, 2).y;
    const double e1 = std::abs(y[1] - 0.25), e2 = std::abs(y[2] + 5.0 / 32.0);
    return {e1 < 1e-12 && e2 < 1e-12, fmt("|y1 - 1/4| = %.1e, |y2 + 5/32| = %.1e", e1, e2)};
}

Outcome residual_slopes() {
    std::string d;
    bool ok = true;
    const cplx x(1.7, 0.6);
    for (const auto& [name, p] : {std::pair{"Airy", airy()}, std::pair{"Weber", weber()}}) {
        const cplx y0 = liouville(p, {x, 1});
        for (int N : {4, 8}) {
            std::vector<double> lx, ls, lr;
            for (int i = 0; i <= 8; ++i) {
                const double h = std::pow(10.0, -3.0 + 2.0 * i / 8.0);
                lx.push_back(std::log(h));
                ls.push_back(std::log(double(abs(schrodinger_residual<mp>(p, x, y0, N, mp(h))))));
                lr.push_back(std::log(double(abs(riccati_residual<mp>(p, x, y0, N, mp(h))))));
            }
            const double ss = fit_slope(lx, ls), sr = fit_slope(lx, lr);
            ok &= std::abs(ss - (N + 1)) <= 0.2 && std::abs(sr - (N + 1)) <= 0.2;
            d += fmt("%s N=%d: %.3f/%.3f ", name, N, ss, sr);
        }
    }
    return {ok, d + "(Schrodinger/Riccati slopes)"};
}

Outcome germ_agreement() {
    double worst = 0.0;
    struct Base {
        Potential p;
        cplx x, y0;
        std::vector<double> phases;
    };
    const std::vector<Base> bases{{airy(), 1.0, 1.0, {0.0, 1.0, -2.0, 3.0}},
                                  {weber(), 2.0, std::sqrt(3.0), {0.0, 1.5, -2.5, 3.0}}};
    for (const auto& b : bases) {
        const auto germ = borel_germ(b.p, b.x, b.y0, 40);
        for (double a : b.phases) {
            const auto g = continue_phi(b.p, geodesic_ray(b.p, b.x, b.y0, a, 1.0, 512), 16);
            for (int n = 0; n <= g.M() / 10; ++n) {
                const cplx ref = horner(germ, g.r(n) * std::polar(1.0, a));
                worst = std::max(worst, std::abs(g.phi_total[std::size_t(n)] - ref) / std::abs(ref));
            }
        }
    }
    return {worst <= 1e-6, fmt("max relative deviation %.2e over 8 rays (K=16, M=512)", worst)};
}

Outcome singularity_match() {
    const double xi_a = -airy_xi();
    double da = 1e300;
    for (const auto& q : detect_pade(borel_germ(airy(), 1.0, 1.0, 24))) {
        if (q.stable) da = std::min(da, std::abs(q.location - xi_a));
    }
    const double xi_w = -weber_z21();
    const auto det = detect_pade(borel_germ(weber(), 2.0, std::sqrt(3.0), 32));
    cplx nearest{1e300};
    for (const auto& q : det) {
        if (q.stable && std::abs(q.location) < std::abs(nearest)) nearest = q.location;
    }
    const double dw = std::abs(nearest - xi_w);
    return {da < 2e-2 && dw < 2e-2,
            fmt("Airy |pole - (%.6f)| = %.1e; Weber nearest pole (%.5f%+.5fi) vs %.6f: %.1e", xi_a, da,
                nearest.real(), nearest.imag(), xi_w, dw)};
}

Outcome stokes_geometry() {
    const auto legs = stokes_graph(airy(), 0.0);
    std::vector<double> dirs;
    for (const auto& l : legs) dirs.push_back(std::arg(l.trajectory.path.x[1] - l.trajectory.path.x[0]));
    std::sort(dirs.begin(), dirs.end());
    double de = 0.0;
    const double want[3] = {-2 * pi / 3, 0.0, 2 * pi / 3};
    if (dirs.size() == 3) {
        for (int i = 0; i < 3; ++i) de = std::max(de, std::abs(dirs[std::size_t(i)] - want[i]));
    }
    const auto s = saddle_scan(weber(), 0.0, pi, 16);
    const double period = weber_period();
    bool saddle = s.size() == 1 && std::abs(s[0].alpha - pi / 2) <= 1e-4 &&
                  std::abs(std::abs(s[0].period) - period) < 1e-6;
    return {legs.size() == 3 && de <= 1e-3 && saddle,
            fmt("Airy legs %zu, direction error %.1e rad; Weber saddles %zu at %.7f, |period| - %.6f = %.1e",
                legs.size(), de, s.size(), s.empty() ? 0.0 : s[0].alpha, period,
                s.empty() ? 1.0 : std::abs(s[0].period) - period)};
}

Outcome envelope() {
    struct Ray {
        Potential p;
        cplx x, y0;
        double alpha;
    };
    const cplx xa(-0.5, 1.0);
    const std::vector<Ray> rays{{airy(), 1.0, 1.0, 0.0},       {airy(), 1.0, 1.0, pi / 2},
                                {airy(), 1.0, 1.0, 2.5},       {airy(), 1.0, 1.0, -2.5},
                                {airy(), xa, std::sqrt(xa), 0.7}, {weber(), 2.0, std::sqrt(3.0), 0.0},
                                {weber(), 2.0, std::sqrt(3.0), pi / 2}, {weber(), 2.0, std::sqrt(3.0), 2.5}};
    int violations = 0;
    for (const auto& r : rays) {
        const auto path = geodesic_ray(r.p, r.x, r.y0, r.alpha, 1.0, 512);
        violations += envelope_violations(continue_phi(r.p, path, 16), order_envelope(r.p, path));
    }
    return {violations == 0, fmt("%d violations over %zu grids", violations, rays.size())};
}

Outcome motzkin() {
    const std::vector<std::uint64_t> listed{1, 1, 2, 4, 9, 21, 51, 127, 323, 835};
    const auto m = motzkin_bound(20);
    bool ok = std::equal(listed.begin(), listed.end(), m.begin());
    // g = 1 + z g + z^2 g^2
    for (int k = 1; k <= 20; ++k) {
        std::uint64_t rhs = m[std::size_t(k - 1)];
        for (int i = 0; i + 2 <= k; ++i) rhs += m[std::size_t(i)] * m[std::size_t(k - 2 - i)];
        ok &= m[std::size_t(k)] == rhs;
    }
    return {ok, fmt("m_20 = %llu", (unsigned long long)m[20])};
}

Outcome resum_vs_ode() {
    const auto p = airy();
    const auto v = resum_wkb(p, {1.0, 2.0}, 1.0, 0.0, {0.1, 0.05, 0.02});
    double worst = 0.0;
    std::string d;
    for (const auto& r : v) {
        // oracle seeded at x = 2 with the resummed data, propagated back to x = 1 where psi = 1
        const auto o = ode_oracle(p, 2.0, 1.0, r.hbar, {r.value, r.derivative});
        const double e = std::abs(1.0 / o.value - 1.0);
        worst = std::max(worst, e);
        d += fmt("hbar=%.2f: %.1e  ", r.hbar.real(), e);
    }
    return {worst <= 1e-4, d + "(Airy 1 -> 2, alpha = 0)"};
}

Outcome jump_exponent() {
    std::vector<double> hs;
    for (int i = 0; i < 6; ++i) hs.push_back(0.02 * std::pow(5.0, i / 5.0));
    const auto rep = jump_fit(airy(), 1.0, 1.0, pi, hs);
    const double want = airy_xi();
    const double rel = std::abs(rep.exponent / want - 1.0);
    return {rel <= 0.05, fmt("fitted %.6f vs %.6f (relative %.1e, prefactor power %.3f)", rep.exponent, want, rel,
                             rep.power)};
}

Outcome homotopy() {
    // Path A: straight ray 0 -> w. Path B: ray 0 -> c, then a Taylor disc about c to w.
    // For w above the real axis A and B bound no singularity; for w below, the
    // closed loop encircles the predicted singularity at -4/3.
    const auto p = airy();
    const auto f = principal_star(p, 1.0, 1.0, 16, 512);
    const cplx c(-2.0, 0.25);
    const auto disc = taylor_disc(f, c, 0.15, 48, 1e-12);
    const cplx up = c + cplx(0, 0.3), down = c - cplx(0, 0.3);
    const double same = std::abs(disc(up) - f(up));
    const double across = std::abs(disc(down) - f(down));
    double xi = 0.0;
    for (const auto& r : predict_singularities(p, {1.0, 1}, 2.0)) {
        if (r.depth == 0 && r.status == PathStatus::resolved) xi = r.xi.real();
    }
    const bool enclosed = xi > down.real() && xi < 0.0;
    const double tol = 1e-5;
    return {same < tol && across > 10 * tol && enclosed,
            fmt("homotopic %.1e (< %.0e), separated by xi = %.4f: %.3f (> %.0e)", same, tol, xi, across, 10 * tol)};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        Outcome (*run)();
        double budget;  // seconds; 0 = none
    };
    const std::vector<Criterion> criteria{
        {1, "WKB recursion exactness", wkb_exactness, 1.0},
        {2, "Riccati and Schrodinger residual slopes", residual_slopes, 10.0},
        {3, "germ agreement", germ_agreement, 30.0},
        {4, "singularity match", singularity_match, 60.0},
        {5, "Stokes geometry", stokes_geometry, 30.0},
        {6, "order envelope", envelope, 0.0},
        {7, "Motzkin sequence", motzkin, 0.0},
        {8, "resummation vs ODE", resum_vs_ode, 120.0},
        {9, "jump exponent", jump_exponent, 120.0},
        {10, "homotopy invariance", homotopy, 0.0},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.budget == 0.0 || dt < c.budget;
        if (!in_time) o.detail += fmt(" [over the %.0f s budget]", c.budget);
        const bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("%s [%d] %s: %s (%.2f s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), dt);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
    return failures;
}
