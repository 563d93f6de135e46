#include "exwkb/wkb.hpp"

#include <algorithm>
#include <cmath>

#include "exwkb/errors.hpp"
#include "exwkb/quadrature.hpp"

namespace exwkb {

namespace {

std::vector<Jet<cplx>> jets_at(const Potential& p, cplx x, cplx y0, int N, std::size_t extra) {
    if (N < 0) throw InputError("wkb: order must be non-negative");
    const std::size_t L = std::size_t(N) + 1 + extra;
    const auto Q = potential_jets<cplx>(p, x, L);
    if (Q[0][0] == cplx{}) throw InputError("wkb: base point is a zero of Q_0");
    return wkb_jets<cplx>(Q, y0, std::size_t(N));
}

void check_base(const Potential& p, cplx x) {
    for (const auto& z : p.zeros()) {
        if (std::abs(x - z.location) < 1e-12) throw InputError("wkb: base point is a zero of Q_0");
    }
    for (const auto& q : p.poles()) {
        if (std::abs(x - q.location) < 1e-12) throw InputError("wkb: base point is a pole of Q_0");
    }
}

}  // namespace

WkbCoefficients wkb_recursion(const Potential& p, cplx x, cplx y0, int N) {
    check_base(p, x);
    const auto y = jets_at(p, x, y0, N, 0);
    WkbCoefficients r;
    r.base = {x, sheet_label(p, x, y[0][0])};
    for (const auto& j : y) r.y.push_back(j[0]);
    return r;
}

WkbCoefficients wkb_recursion(const Potential& p, const SpectralPoint& sp, int N) {
    return wkb_recursion(p, sp.x, liouville(p, sp), N);
}

double transform_check(const Potential& p, const RationalFn& chart, const SpectralPoint& sp, int N,
                       double disc_radius) {
    if (N < 0) throw InputError("transform_check: order must be non-negative");
    // Preimage of the base point nearest to it.
    const Poly eq = poly_sub(chart.num(), poly_mul(chart.den(), Poly{sp.x}));
    const auto pre = poly_roots(eq);
    if (pre.empty()) throw InputError("transform_check: chart does not reach the base point");
    cplx xt = pre[0];
    for (const auto& r : pre) {
        if (std::abs(r - sp.x) < std::abs(xt - sp.x)) xt = r;
    }
    // The chart must be a local biholomorphism on the disc.
    const Poly dnum = poly_sub(poly_mul(poly_derivative(chart.num()), chart.den()),
                               poly_mul(chart.num(), poly_derivative(chart.den())));
    if (poly_degree(poly_trim(dnum, 1e-14)) == 0 && std::abs(poly_trim(dnum, 1e-14)[0]) == 0.0) {
        throw InputError("transform_check: chart is constant");
    }
    for (const auto& r : poly_roots(poly_trim(dnum, 1e-14))) {
        if (std::abs(r - xt) < disc_radius) throw InputError("transform_check: chart is singular near the base point");
    }
    for (const auto& r : poly_roots(chart.den())) {
        if (std::abs(r - xt) < disc_radius) throw InputError("transform_check: chart has a pole near the base point");
    }

    const std::size_t L = std::size_t(N) + 4;
    const Jet<cplx> X = chart.on_jet(Jet<cplx>::variable(xt, L));
    const Jet<cplx> d1 = X.derivative();
    const Jet<cplx> d2 = d1.derivative();
    const Jet<cplx> d3 = d2.derivative();
    const Jet<cplx> inv1 = reciprocal(d1);
    const Jet<cplx> r2 = d2 * inv1;
    const Jet<cplx> schwarz = d3 * inv1 - 1.5 * (r2 * r2);
    const Jet<cplx> d1sq = d1 * d1;

    std::vector<Jet<cplx>> Qt;
    for (const auto& f : p.coefficients()) Qt.push_back((f.on_jet(X) * d1sq).truncated(L - 3));
    while (Qt.size() < 3) Qt.emplace_back(L - 3);
    Qt[2] -= 0.5 * schwarz.truncated(L - 3);

    const cplx y0 = liouville(p, sp);
    const cplx xdot = d1[0];
    const auto yt = wkb_jets<cplx>(Qt, y0 * xdot, std::size_t(N));
    const auto y = wkb_recursion(p, sp.x, y0, N).y;

    double dev = 0.0;
    for (int k = 0; k <= N; ++k) {
        cplx expected = y[std::size_t(k)] * xdot;
        if (k == 1) expected += 0.5 * d2[0] / xdot;
        const double d = std::abs(yt[std::size_t(k)][0] - expected) / std::max(1.0, std::abs(expected));
        dev = std::max(dev, d);
    }
    return dev;
}

cplx canonical_generator_log(const Potential& p, const std::vector<cplx>& vertices) {
    if (vertices.size() < 2) return {};
    for (const auto& v : vertices) {
        for (const auto& c : p.critical_locations()) {
            if (std::abs(v - c) < 1e-9) throw InputError("canonical generator: path touches a critical point");
        }
    }
    const Poly& num = p.Q(0).num();
    const Poly& den = p.Q(0).den();
    const Poly dn = poly_derivative(num);
    const Poly dd = poly_derivative(den);
    const auto& g = gauss_legendre(16);
    constexpr int pieces = 32;
    cplx sum{};
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
        const cplx a = vertices[i];
        const cplx b = vertices[i + 1];
        for (int j = 0; j < pieces; ++j) {
            const cplx pa = a + (b - a) * (double(j) / pieces);
            const cplx pb = a + (b - a) * (double(j + 1) / pieces);
            const cplx half = 0.5 * (pb - pa);
            const cplx mid = 0.5 * (pa + pb);
            for (std::size_t k = 0; k < g.nodes.size(); ++k) {
                const cplx x = mid + g.nodes[k] * half;
                const cplx dlog = poly_eval(dn, x) / poly_eval(num, x) - poly_eval(dd, x) / poly_eval(den, x);
                sum += g.weights[k] * dlog * half;
            }
        }
    }
    return -0.25 * sum;
}

std::vector<cplx> formal_wkb_differential(const Potential& p, cplx x, cplx y0, int N) {
    check_base(p, x);
    const auto y = jets_at(p, x, y0, N + 1, 1);
    const cplx q0 = y[0][0] * y[0][0];
    const cplx dq0 = 2.0 * y[0][0] * y[0][1];
    std::vector<cplx> lam;
    lam.push_back(y[1][0] - dq0 / (4.0 * q0));
    for (int k = 1; k <= N; ++k) lam.push_back(y[std::size_t(k) + 1][0]);
    return lam;
}

std::vector<cplx> formal_wkb_differential(const Potential& p, const SpectralPoint& sp, int N) {
    return formal_wkb_differential(p, sp.x, liouville(p, sp), N);
}

RiccatiData::RiccatiData(const Potential& p, int N) : p_(p), N_(N) {
    if (N < 1) throw InputError("riccati data: order must be at least 1");
}

RiccatiData riccati_data(const Potential& p, int N) { return RiccatiData(p, N); }

cplx RiccatiData::w(cplx x) const {
    if (p_.hbar_degree() < 1) return {};
    return p_.Q(1)(x) / (2.0 * p_.Q0(x));
}

RiccatiValues RiccatiData::at(cplx x, cplx y0) const {
    check_base(p_, x);
    const auto y = jets_at(p_, x, y0, N_ + 1, 0);
    RiccatiValues v;
    v.y0 = y[0][0];
    for (const auto& j : y) v.y.push_back(j[0]);
    const cplx two_y0 = 2.0 * v.y0;
    const cplx q0 = v.y0 * v.y0;
    v.w = w(x);
    v.W.push_back(-v.y[2] / two_y0);
    for (std::size_t k = 3; k <= p_.hbar_degree(); ++k) v.W.push_back(-p_.Q(k)(x) / (4.0 * q0));
    for (int k = 1; k <= N_; ++k) v.f.push_back(v.y[std::size_t(k) + 1] / two_y0);
    return v;
}

cplx RiccatiData::omega(const RiccatiValues& v, cplx t) {
    cplx s{};
    cplx term{1.0};
    for (std::size_t k = 1; k < v.W.size(); ++k) {
        s += v.W[k] * term;
        term *= t / double(k);
    }
    return s;
}

std::vector<cplx> borel_germ(const Potential& p, cplx x, cplx y0, int n) {
    if (n < 1) throw InputError("borel germ: length must be positive");
    const auto v = RiccatiData(p, n).at(x, y0);
    std::vector<cplx> b;
    double fact = 1.0;
    for (int k = 0; k < n; ++k) {
        if (k > 0) fact *= k;
        b.push_back(v.f[std::size_t(k)] / fact);
    }
    return b;
}

WkbSolution assemble_solution(const Potential& p, const SigmaPath& path, int N) {
    if (path.size() < 2) throw InputError("assemble_solution: path needs at least two points");
    if (N < 0) throw InputError("assemble_solution: order must be non-negative");
    const auto& g = gauss_legendre(16);
    std::vector<cplx> I(std::size_t(N) + 1, cplx{});
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const cplx a = path.x[i];
        const cplx b = path.x[i + 1];
        const cplx half = 0.5 * (b - a);
        const cplx mid = 0.5 * (a + b);
        cplx y = path.y0[i];
        for (std::size_t k = 0; k < g.nodes.size(); ++k) {
            const cplx x = mid + g.nodes[k] * half;
            y = nearest_y0(p, x, y);
            const auto lam = formal_wkb_differential(p, x, y, N);
            for (int j = 0; j <= N; ++j) I[std::size_t(j)] += g.weights[k] * lam[std::size_t(j)] * half;
        }
    }
    WkbSolution s;
    s.base = path.point(0);
    s.S = 0.5 * central_charge(p, path);
    std::vector<cplx> neg;
    for (const auto& v : I) neg.push_back(-v);
    s.amplitude = exp(HbarSeries(neg));
    s.a0_log = canonical_generator_log(p, path.x);
    return s;
}

}  // namespace exwkb
