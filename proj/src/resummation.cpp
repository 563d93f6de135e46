#include "exwkb/resummation.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "exwkb/errors.hpp"
#include "exwkb/quadrature.hpp"
#include "exwkb/trajectories.hpp"
#include "exwkb/wkb.hpp"

namespace exwkb {

namespace {

constexpr double kPi = std::numbers::pi;

double angle_diff(double a, double b) {
    double d = std::fmod(a - b, 2.0 * kPi);
    if (d > kPi) d -= 2.0 * kPi;
    if (d <= -kPi) d += 2.0 * kPi;
    return d;
}

// Exponent of e^{-t/hbar} per unit r along the ray.
cplx decay_rate(double alpha, cplx hbar) { return std::polar(1.0, alpha) / hbar; }

void check_sector(const BorelGrid& g, cplx hbar, const char* who) {
    if (hbar == cplx{}) throw InputError(std::string(who) + ": hbar must be nonzero");
    const double re = decay_rate(g.alpha, hbar).real();
    if (!(re > g.bound.K_exp)) {
        std::ostringstream os;
        os << who << ": hbar outside the sector, Re(e^{i alpha}/hbar) = " << re
           << " is not greater than K_exp = " << g.bound.K_exp;
        throw InputError(os.str());
    }
}

// Integral of phi_total e^{-kappa r} e^{i alpha} dr over [r0, r1] by
// Gauss-Legendre panels no wider than one decay length.
cplx laplace_segment(const BorelGrid& g, cplx kappa, double r0, double r1) {
    if (r1 <= r0) return {};
    const auto& gl = gauss_legendre(16);
    const double width = std::min(r1 - r0, std::max(2.0 / std::abs(kappa), 4.0 * g.tau / std::max(1, g.M())));
    const int panels = std::max(1, int(std::ceil((r1 - r0) / width)));
    const double w = (r1 - r0) / panels;
    cplx s{};
    for (int k = 0; k < panels; ++k) {
        const double mid = r0 + (k + 0.5) * w;
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            const double r = mid + 0.5 * w * gl.nodes[i];
            s += gl.weights[i] * 0.5 * w * g.interpolate(r) * std::exp(-kappa * r);
        }
    }
    return s * std::polar(1.0, g.alpha);
}

double tail_bound(const BorelGrid& g, cplx hbar) {
    const double re = decay_rate(g.alpha, hbar).real();
    const double gap = re - g.bound.K_exp;
    return g.bound.C * std::exp(-gap * g.tau) / gap;
}

BorelGrid ray_grid(const Potential& p, cplx x, cplx y0, double alpha, double tau, int M, int K) {
    ContinueOptions co;
    co.self_check = false;
    return continue_phi(p, geodesic_ray(p, x, y0, alpha, tau, M), K, co);
}

}  // namespace

std::string to_string(Side s) {
    switch (s) {
        case Side::none: return "none";
        case Side::left: return "L";
        case Side::right: return "R";
    }
    return "?";
}

ResummedValue laplace_ray(const BorelGrid& g, cplx hbar) {
    check_sector(g, hbar, "laplace_ray");
    ResummedValue v;
    v.hbar = hbar;
    v.alpha = g.alpha;
    v.value = laplace_segment(g, decay_rate(g.alpha, hbar), 0.0, g.tau);
    v.tail_bound = tail_bound(g, hbar);
    return v;
}

OptimalTruncation optimal_truncation(const std::vector<cplx>& f, cplx hbar) {
    if (f.empty()) throw InputError("optimal_truncation: empty series");
    OptimalTruncation best;
    best.smallest = std::numeric_limits<double>::infinity();
    int k_star = 1;
    cplx hk = 1.0;
    for (std::size_t k = 1; k <= f.size(); ++k) {
        hk *= hbar;
        const double term = std::abs(f[k - 1] * hk);
        if (term < best.smallest) {
            best.smallest = term;
            k_star = int(k);
        }
    }
    cplx s{};
    hk = 1.0;
    for (int k = 1; k <= k_star; ++k) {
        hk *= hbar;
        s += f[std::size_t(k - 1)] * hk;
    }
    best.value = s;
    best.order = k_star;
    return best;
}

std::vector<ResummedValue> resum_wkb(const Potential& p, const std::vector<cplx>& vertices, cplx y0_start,
                                     double alpha, const std::vector<cplx>& hbars, const ResumOptions& opt) {
    if (vertices.size() < 2) throw InputError("resum_wkb: path needs at least two vertices");
    if (opt.nodes < 1) throw InputError("resum_wkb: need at least one node per segment");
    constexpr int samples = 64;
    const SigmaPath path = path_from_polyline(p, vertices, y0_start, samples);
    const cplx S = 0.5 * central_charge(p, path);
    const cplx a0_log = canonical_generator_log(p, vertices);
    const auto& gl = gauss_legendre(std::size_t(opt.nodes));

    struct Node {
        cplx weight;  // quadrature weight times dx
        cplx lambda0;
        cplx sigma;
        BorelGrid grid;
    };
    auto make_grid = [&](cplx x, cplx y0) {
        const auto t = trace(p, x, y0, alpha);
        if (t.termination == Termination::hits_transition) {
            std::ostringstream os;
            os << "resum_wkb: alpha = " << alpha << " is a Stokes phase at x = " << x
               << "; use lateral_resum";
            throw InputError(os.str());
        }
        return ray_grid(p, x, y0, alpha, opt.tau, opt.M, opt.K);
    };

    std::vector<Node> nodes;
    for (std::size_t j = 0; j + 1 < vertices.size(); ++j) {
        const cplx a = vertices[j], b = vertices[j + 1];
        const cplx half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            const double u = 0.5 * (gl.nodes[i] + 1.0);
            const auto hint = std::size_t(std::lround((double(j) + u) * samples));
            const cplx x = mid + gl.nodes[i] * half;
            const cplx y0 = nearest_y0(p, x, path.y0[std::min(hint, path.size() - 1)]);
            const cplx lam0 = formal_wkb_differential(p, x, y0, 0)[0];
            nodes.push_back({gl.weights[i] * half, lam0, 2.0 * y0, make_grid(x, y0)});
        }
    }
    const cplx x_end = vertices.back();
    const cplx y0_end = path.y0.back();
    const auto y_end = wkb_recursion(p, x_end, y0_end, 1).y;
    const BorelGrid end_grid = make_grid(x_end, y0_end);

    std::vector<ResummedValue> out;
    for (const cplx hbar : hbars) {
        cplx integral{};
        double tail = 0.0;
        for (const auto& n : nodes) {
            const auto f = laplace_ray(n.grid, hbar);
            integral += n.weight * (n.lambda0 + n.sigma * f.value);
            tail += std::abs(n.weight * n.sigma) * f.tail_bound;
        }
        const auto f_end = laplace_ray(end_grid, hbar);
        ResummedValue v;
        v.hbar = hbar;
        v.alpha = alpha;
        v.value = std::exp(a0_log - S / hbar - integral);
        const cplx Y = y_end[0] + hbar * y_end[1] + hbar * 2.0 * y_end[0] * f_end.value;
        v.derivative = -Y / hbar * v.value;
        v.tail_bound = std::abs(v.value) * (tail + f_end.tail_bound);
        out.push_back(v);
    }
    return out;
}

std::vector<cplx> on_ray_singularities(const Potential& p, const SpectralPoint& sp, double alpha, double radius,
                                       double phase_tol) {
    std::vector<cplx> out;
    for (const auto& r : predict_singularities(p, sp, radius)) {
        if (r.status != PathStatus::resolved || std::abs(r.xi) == 0.0) continue;
        if (std::abs(angle_diff(std::arg(r.xi), alpha)) < phase_tol) out.push_back(r.xi);
    }
    return out;
}

namespace {

double lateral_tau(const std::vector<cplx>& sing, const LateralOptions& opt) {
    if (opt.tau > 0) return opt.tau;
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& s : sing) nearest = std::min(nearest, std::abs(s));
    return std::isfinite(nearest) ? std::max(4.0, 3.0 * nearest) : 4.0;
}

// Rejects predicted singularities strictly inside the sectors swept by the rotation.
void check_sectors(const Potential& p, cplx x, cplx y0, double alpha, double delta, double tau) {
    const SpectralPoint sp{x, sheet_label(p, x, y0)};
    for (const auto& r : predict_singularities(p, sp, tau)) {
        if (r.status != PathStatus::resolved || std::abs(r.xi) == 0.0) continue;
        const double d = std::abs(angle_diff(std::arg(r.xi), alpha));
        if (d > 1e-6 && d <= delta) {
            std::ostringstream os;
            os << "lateral_resum: predicted singularity " << r.xi << " lies within the diversion sector; "
               << "use a smaller rotation than " << delta;
            throw InputError(os.str());
        }
    }
}

}  // namespace

ResummedValue lateral_resum(const Potential& p, cplx x, cplx y0, double alpha, Side side, cplx hbar,
                            const std::vector<cplx>& singularities, const LateralOptions& opt) {
    const double tau = lateral_tau(singularities, opt);
    if (singularities.empty()) {
        auto v = laplace_ray(ray_grid(p, x, y0, alpha, tau, opt.M, opt.K), hbar);
        v.lateral = side;
        return v;
    }
    if (side == Side::none) throw InputError("lateral_resum: side must be left or right");
    check_sectors(p, x, y0, alpha, opt.delta, tau);
    const double phase = alpha + (side == Side::left ? opt.delta : -opt.delta);
    auto v = laplace_ray(ray_grid(p, x, y0, phase, tau, opt.M, opt.K), hbar);
    v.alpha = alpha;
    v.lateral = side;
    return v;
}

std::vector<JumpSample> lateral_jumps(const Potential& p, cplx x, cplx y0, double alpha,
                                      const std::vector<double>& hbar_abs, const JumpOptions& opt) {
    const SpectralPoint sp{x, sheet_label(p, x, y0)};
    const double tau = opt.lateral.tau > 0 ? opt.lateral.tau : 50.0;
    const auto sing = on_ray_singularities(p, sp, alpha, tau);
    std::vector<JumpSample> out;
    if (sing.empty()) {
        // Nothing to divert around: both sides are the plain ray.
        const auto g = ray_grid(p, x, y0, alpha, lateral_tau(sing, opt.lateral), opt.lateral.M, opt.lateral.K);
        for (double h : hbar_abs) out.push_back({std::polar(h, alpha), {}, 2.0 * tail_bound(g, std::polar(h, alpha))});
        return out;
    }
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& s : sing) nearest = std::min(nearest, std::abs(s));
    const double outer_tau = lateral_tau(sing, opt.lateral);
    const double delta = opt.lateral.delta;
    check_sectors(p, x, y0, alpha, delta, outer_tau);

    const auto left = ray_grid(p, x, y0, alpha + delta, outer_tau, opt.lateral.M, opt.lateral.K);
    const auto right = ray_grid(p, x, y0, alpha - delta, outer_tau, opt.lateral.M, opt.lateral.K);
    const double rho = opt.arc_fraction * nearest;
    const auto& gl = gauss_legendre(std::size_t(opt.arc_nodes));
    std::vector<double> theta;
    std::vector<cplx> arc_phi;
    for (double u : gl.nodes) {
        const double th = alpha + delta * u;
        theta.push_back(th);
        arc_phi.push_back(ray_grid(p, x, y0, th, rho, opt.arc_M, opt.lateral.K).phi_total.back());
    }

    for (double h : hbar_abs) {
        const cplx hbar = std::polar(h, alpha);
        check_sector(left, hbar, "lateral_jumps");
        check_sector(right, hbar, "lateral_jumps");
        cplx arc{};
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const cplx t = std::polar(rho, theta[i]);
            arc += gl.weights[i] * delta * arc_phi[i] * std::exp(-t / hbar) * cplx(0, 1) * t;
        }
        const cplx outer_l = laplace_segment(left, decay_rate(left.alpha, hbar), rho, outer_tau);
        const cplx outer_r = laplace_segment(right, decay_rate(right.alpha, hbar), rho, outer_tau);
        out.push_back({hbar, arc + outer_l - outer_r, tail_bound(left, hbar) + tail_bound(right, hbar)});
    }
    return out;
}

JumpReport jump_fit(const Potential& p, cplx x, cplx y0, double alpha, const std::vector<double>& hbar_abs,
                    const JumpOptions& opt) {
    JumpReport rep;
    rep.alpha = alpha;
    rep.samples = lateral_jumps(p, x, y0, alpha, hbar_abs, opt);
    const SpectralPoint sp{x, sheet_label(p, x, y0)};
    const auto sing = on_ray_singularities(p, sp, alpha, 50.0);
    rep.predicted = sing.empty() ? 0.0 : std::abs(sing.front());

    // Least squares for log|jump| = a + beta log h - s / h.
    std::array<std::array<double, 4>, 3> A{};
    int valid = 0;
    for (const auto& s : rep.samples) {
        const double mag = std::abs(s.jump);
        if (!(mag > 10.0 * s.tail_bound) || mag == 0.0) continue;
        const double h = std::abs(s.hbar);
        const std::array<double, 3> row{1.0, std::log(h), -1.0 / h};
        const double rhs = std::log(mag);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) A[i][j] += row[i] * row[j];
            A[i][3] += row[i] * rhs;
        }
        ++valid;
    }
    if (valid < 4) throw NumericalError("jump_fit: fewer than 4 jump samples above their tail bound");
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r) {
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        }
        std::swap(A[c], A[piv]);
        for (int r = 0; r < 3; ++r) {
            if (r == c) continue;
            const double m = A[r][c] / A[c][c];
            for (int k = c; k < 4; ++k) A[r][k] -= m * A[c][k];
        }
    }
    rep.power = A[1][3] / A[1][1];
    rep.exponent = A[2][3] / A[2][2];
    if (!(rep.exponent > 0)) throw NumericalError("jump_fit: fitted exponent is not positive");
    return rep;
}

OdeValue ode_oracle(const Potential& p, const std::vector<cplx>& path, cplx hbar, OdeValue init, double rel_tol) {
    namespace odeint = boost::numeric::odeint;
    using State = std::array<cplx, 2>;
    if (path.size() < 2) throw InputError("ode_oracle: path needs an anchor and an end point");
    if (hbar == cplx{}) throw InputError("ode_oracle: hbar must be nonzero");
    State y{init.value, init.derivative};
    for (std::size_t j = 0; j + 1 < path.size(); ++j) {
        const cplx a = path[j], d = path[j + 1] - path[j];
        // s in [0, 1]; u = (psi, dpsi/dx).
        auto rhs = [&](const State& u, State& du, double s) {
            du[0] = d * u[1];
            du[1] = d * p.evaluate(a + s * d, hbar) / (hbar * hbar) * u[0];
        };
        auto stepper = odeint::make_controlled(1e-300, rel_tol, odeint::runge_kutta_fehlberg78<State>());
        double s = 0.0;
        double ds = 1e-3;
        int steps = 0;
        while (s < 1.0) {
            ds = std::min(ds, 1.0 - s);
            if (ds < 1e-14) {
                std::ostringstream os;
                os << "ode_oracle: step size collapsed near x = " << a + s * d << " (pole of Q?)";
                throw NumericalError(os.str());
            }
            const double s_before = s;
            if (stepper.try_step(rhs, y, s, ds) == odeint::success && s >= 1.0 - 1e-15) break;
            if (s == s_before && ++steps > 100000) throw NumericalError("ode_oracle: too many rejected steps");
            if (!std::isfinite(std::abs(y[0])) || !std::isfinite(std::abs(y[1])))
                throw NumericalError("ode_oracle: solution overflowed");
        }
    }
    return {y[0], y[1]};
}

OdeValue ode_oracle(const Potential& p, cplx x_anchor, cplx x_eval, cplx hbar, OdeValue init, double rel_tol) {
    return ode_oracle(p, std::vector<cplx>{x_anchor, x_eval}, hbar, init, rel_tol);
}

nlohmann::json to_json(const ResummedValue& v) {
    return {{"hbar", complex_to_json(v.hbar)},
            {"value", complex_to_json(v.value)},
            {"alpha", v.alpha},
            {"lateral", to_string(v.lateral)},
            {"tail_bound", v.tail_bound}};
}

nlohmann::json to_json(const JumpReport& r) {
    nlohmann::json s = nlohmann::json::array();
    for (const auto& x : r.samples) {
        s.push_back({{"hbar", complex_to_json(x.hbar)}, {"jump", complex_to_json(x.jump)}, {"tail_bound", x.tail_bound}});
    }
    return {{"alpha", r.alpha}, {"samples", s}, {"exponent", r.exponent}, {"power", r.power}, {"predicted", r.predicted}};
}

std::string to_csv(const std::vector<ResummedValue>& values) {
    std::ostringstream os;
    os.precision(17);
    os << "re_hbar,im_hbar,re_value,im_value,tail_bound\n";
    for (const auto& v : values) {
        os << v.hbar.real() << ',' << v.hbar.imag() << ',' << v.value.real() << ',' << v.value.imag() << ','
           << v.tail_bound << '\n';
    }
    return os.str();
}

}  // namespace exwkb
