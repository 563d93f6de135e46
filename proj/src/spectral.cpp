#include "exwkb/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "exwkb/quadrature.hpp"
#include "flow_integrator.hpp"

namespace exwkb {

cplx principal_y0(const Potential& p, cplx x) { return std::sqrt(p.Q0(x)); }

cplx nearest_y0(const Potential& p, cplx x, cplx ref) {
    const cplx r = principal_y0(p, x);
    return std::abs(r - ref) <= std::abs(-r - ref) ? r : -r;
}

int sheet_label(const Potential& p, cplx x, cplx y0) {
    const cplx r = principal_y0(p, x);
    return std::abs(y0 - r) <= std::abs(y0 + r) ? 1 : -1;
}

cplx q0_derivative(const Potential& p, cplx x) {
    const auto j = p.Q(0).on_jet(Jet<cplx>::variable(x, 2));
    return j[1];
}

double branch_distance(const Potential& p, cplx x) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& b : p.branch_points()) d = std::min(d, std::abs(x - b));
    return d;
}

cplx liouville(const Potential& p, const SpectralPoint& sp, double branch_tol) {
    if (branch_distance(p, sp.x) <= branch_tol) {
        throw InputError("liouville: point lies on a branch point of the cover");
    }
    for (const auto& q : p.poles()) {
        if (std::abs(sp.x - q.location) <= branch_tol) {
            throw InputError("liouville: point lies on a pole of Q_0");
        }
    }
    return double(sp.sheet) * principal_y0(p, sp.x);
}

namespace {

double segment_distance(cplx a, cplx b, cplx q) {
    const cplx d = b - a;
    const double len2 = std::norm(d);
    double t = len2 > 0 ? ((q - a) * std::conj(d)).real() / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(a + t * d - q);
}

void check_chord(const Potential& p, cplx a, cplx b, double tol) {
    for (const auto& bp : p.branch_points()) {
        if (segment_distance(a, b, bp) <= tol) {
            throw InputError("path passes within branch tolerance of a branch point");
        }
    }
}

void fill_phase(SigmaPath& path) {
    const std::size_t n = path.size();
    path.phase.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) path.phase[i] = std::arg(path.Z[i + 1] - path.Z[i]);
    if (n >= 2) path.phase[n - 1] = path.phase[n - 2];
}

}  // namespace

cplx chord_Z(const Potential& p, cplx xa, cplx y0a, cplx xb, cplx* y0_b) {
    const auto& g = gauss_legendre(8);
    const cplx half = 0.5 * (xb - xa);
    const cplx mid = 0.5 * (xa + xb);
    cplx y = y0a;
    cplx sum{};
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const cplx x = mid + g.nodes[i] * half;
        y = nearest_y0(p, x, y);
        sum += g.weights[i] * 2.0 * y;
    }
    if (y0_b) *y0_b = nearest_y0(p, xb, y);
    return sum * half;
}

SigmaPath path_from_points(const Potential& p, const std::vector<cplx>& xs, cplx y0_start,
                           double branch_tol) {
    if (xs.empty()) throw InputError("path needs at least one point");
    if (branch_distance(p, xs[0]) <= branch_tol) {
        throw InputError("path starts at a branch point");
    }
    SigmaPath path;
    cplx y = nearest_y0(p, xs[0], y0_start);
    cplx z{};
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i > 0) {
            check_chord(p, xs[i - 1], xs[i], branch_tol);
            cplx yb;
            z += chord_Z(p, xs[i - 1], y, xs[i], &yb);
            y = yb;
            s += std::abs(xs[i] - xs[i - 1]);
        }
        path.s.push_back(s);
        path.x.push_back(xs[i]);
        path.y0.push_back(y);
        path.sheet.push_back(sheet_label(p, xs[i], y));
        path.Z.push_back(z);
    }
    fill_phase(path);
    return path;
}

SigmaPath path_from_polyline(const Potential& p, const std::vector<cplx>& vertices, cplx y0_start,
                             int samples, double branch_tol) {
    if (vertices.empty()) throw InputError("polyline needs at least one vertex");
    if (samples < 1) throw InputError("polyline needs at least one sample per segment");
    std::vector<cplx> xs{vertices[0]};
    for (std::size_t v = 1; v < vertices.size(); ++v) {
        for (int k = 1; k <= samples; ++k) {
            xs.push_back(vertices[v - 1] + (double(k) / samples) * (vertices[v] - vertices[v - 1]));
        }
    }
    return path_from_points(p, xs, y0_start, branch_tol);
}

cplx central_charge(const Potential& p, const SigmaPath& path, double branch_tol) {
    if (path.empty()) return {};
    cplx z{};
    for (std::size_t i = 1; i < path.size(); ++i) {
        check_chord(p, path.x[i - 1], path.x[i], branch_tol);
        z += chord_Z(p, path.x[i - 1], path.y0[i - 1], path.x[i]);
    }
    return z;
}

SigmaPath concatenate(const SigmaPath& a, const SigmaPath& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    const double scale = std::max(1.0, std::abs(a.x.back()));
    if (std::abs(a.x.back() - b.x.front()) > 1e-9 * scale ||
        std::abs(a.y0.back() - b.y0.front()) > 1e-7 * std::max(1.0, std::abs(a.y0.back()))) {
        throw InputError("concatenate: paths do not meet on the same sheet");
    }
    SigmaPath r = a;
    const cplx z0 = a.Z.back();
    const double s0 = a.s.back();
    for (std::size_t i = 1; i < b.size(); ++i) {
        r.s.push_back(s0 + b.s[i] - b.s[0]);
        r.x.push_back(b.x[i]);
        r.y0.push_back(b.y0[i]);
        r.sheet.push_back(b.sheet[i]);
        r.Z.push_back(z0 + b.Z[i] - b.Z[0]);
    }
    fill_phase(r);
    return r;
}

SigmaPath sheet_flipped(const SigmaPath& path) {
    SigmaPath r = path;
    for (auto& y : r.y0) y = -y;
    for (auto& s : r.sheet) s = -s;
    for (auto& z : r.Z) z = -z;
    fill_phase(r);
    return r;
}

cplx z_to_critical(const Potential& p, cplx x, cplx y0, cplx tp) {
    // y_0 behaves like v^e near v = 0, so y_0 / v^e is continued instead.
    int e = 0;
    for (const auto& z : p.zeros()) {
        if (std::abs(z.location - tp) < 1e-9 * std::max(1.0, std::abs(tp))) e = z.multiplicity;
    }
    for (const auto& q : p.poles()) {
        if (std::abs(q.location - tp) < 1e-9 * std::max(1.0, std::abs(tp))) e = -q.multiplicity;
    }
    const cplx d = x - tp;
    const auto& g = gauss_legendre(16);
    const int panels = 4;
    cplx gv = y0;  // value of y_0 / v^e at v = 1
    cplx sum{};
    for (int pan = panels - 1; pan >= 0; --pan) {
        const double a = double(pan) / panels;
        const double b = double(pan + 1) / panels;
        for (std::size_t i = g.nodes.size(); i-- > 0;) {
            const double v = 0.5 * (a + b) + 0.5 * (b - a) * g.nodes[i];
            const cplx xv = tp + d * v * v;
            const double ve = std::pow(v, e);
            const cplx r = principal_y0(p, xv) / ve;
            gv = std::abs(r - gv) <= std::abs(-r - gv) ? r : -r;
            sum += 0.5 * (b - a) * g.weights[i] * 2.0 * gv * ve * 2.0 * d * v;
        }
    }
    return -sum;
}

SigmaPath flow_V(const Potential& p, cplx x0, cplx y0, cplx t, int n_steps,
                 const SpectralOptions& opt) {
    if (n_steps < 1) throw InputError("flow_V needs n_steps >= 1");
    if (branch_distance(p, x0) <= opt.branch_tol) {
        throw InputError("flow_V: start point on a branch point");
    }
    const double len = std::abs(t);
    const double theta = len > 0 ? std::arg(t) : 0.0;
    const auto tps = p.transition_points();

    SigmaPath path;
    auto record = [&](double s, cplx x, cplx y) {
        path.s.push_back(s);
        path.x.push_back(x);
        path.y0.push_back(y);
        path.sheet.push_back(sheet_label(p, x, y));
        path.Z.push_back(len > 0 ? std::polar(s, theta) : cplx{});
    };
    y0 = nearest_y0(p, x0, y0);
    record(0.0, x0, y0);
    if (len == 0.0) {
        for (int k = 1; k <= n_steps; ++k) record(0.0, x0, y0);
        fill_phase(path);
        return path;
    }

    detail::FlowIntegrator integ(p, x0, y0, theta, opt.rel_tol,
                                 std::min(1e-2, len / n_steps));
    double closest_d = std::numeric_limits<double>::infinity();
    cplx closest_x = x0, closest_tp{};
    auto check_exclusion = [&]() {
        const cplx x = integ.x();
        for (const auto& tp : tps) {
            const double dx = std::abs(x - tp);
            if (dx < closest_d) {
                closest_d = dx;
                closest_x = x;
                closest_tp = tp;
            }
            if (dx < 0.25) {
                const double dz = std::abs(z_to_critical(p, x, integ.y0(), tp));
                if (dz < opt.exclusion_radius) {
                    throw FlowError("flow entered the exclusion radius of a transition point", x,
                                    tp, dz);
                }
            }
        }
    };
    for (int k = 1; k <= n_steps; ++k) {
        const double target = len * double(k) / n_steps;
        while (integ.s() < target - 1e-15 * len) {
            if (!integ.step(target - integ.s(), 1e-12 * (1.0 + len))) {
                const double dz = closest_d < std::numeric_limits<double>::infinity()
                                      ? std::abs(z_to_critical(p, integ.x(), integ.y0(), closest_tp))
                                      : closest_d;
                throw FlowError("flow step collapsed", closest_x, closest_tp, dz);
            }
            check_exclusion();
        }
        record(target, integ.x(), integ.y0());
    }
    fill_phase(path);
    return path;
}

SigmaPath flow_V(const Potential& p, const SpectralPoint& sp, cplx t, int n_steps,
                 const SpectralOptions& opt) {
    return flow_V(p, sp.x, liouville(p, sp, opt.branch_tol), t, n_steps, opt);
}

std::vector<LegStart> leg_starts(const Potential& p, cplx tp, double alpha, double z0) {
    int e = 0;
    for (const auto& z : p.zeros()) {
        if (std::abs(z.location - tp) < 1e-9 * std::max(1.0, std::abs(tp))) e = z.multiplicity;
    }
    for (const auto& q : p.poles()) {
        if (std::abs(q.location - tp) < 1e-9 * std::max(1.0, std::abs(tp))) e = -q.multiplicity;
    }
    if (e != 1 && e != -1) throw InputError("leg_starts: point is not a simple transition point");
    // Leading coefficient c of Q_0 ~ c (x - tp)^e.
    cplx c;
    if (e == 1) {
        c = q0_derivative(p, tp);
    } else {
        const Poly d = poly_deflate(p.Q(0).den(), tp);
        c = poly_eval(p.Q(0).num(), tp) / poly_eval(d, tp);
    }
    const double pi = std::acos(-1.0);
    const double asc = std::arg(std::sqrt(c));
    std::vector<LegStart> out;
    const int nlegs = e == 1 ? 3 : 1;
    // Z ~ (4/3) sqrt(c) d^{3/2} at a zero, 4 sqrt(c) d^{1/2} at a simple pole.
    const double k = e == 1 ? 4.0 / 3.0 : 4.0;
    const double pw = e == 1 ? 1.5 : 0.5;
    const double rad = std::pow(z0 / (k * std::sqrt(std::abs(c))), 1.0 / pw);
    for (int n = 0; n < nlegs; ++n) {
        const double theta = (alpha - asc + n * pi) / pw;
        const cplx x = tp + std::polar(rad, theta);
        cplx y = principal_y0(p, x);
        const cplx dir = std::polar(1.0, theta);
        if (std::cos(std::arg(2.0 * y * dir) - alpha) < 0.0) y = -y;
        out.push_back({x, y, -z_to_critical(p, x, y, tp)});
    }
    return out;
}

cplx segment_period(const Potential& p, cplx a, cplx b) {
    const cplx mid = 0.5 * (a + b);
    const cplx y = principal_y0(p, mid);
    return z_to_critical(p, mid, y, b) - z_to_critical(p, mid, y, a);
}

bool verify_saddle(const Potential& p, cplx a, cplx b, cplx period, double rel_tol, const SpectralOptions& opt) {
    const double len = std::abs(period);
    if (len == 0.0) return false;
    const double alpha = std::arg(period);
    const double z0 = std::min(1e-3, 1e-2 * len);
    SpectralOptions o = opt;
    o.exclusion_radius = std::min(opt.exclusion_radius, 0.5 * z0);
    for (const auto& leg : leg_starts(p, a, alpha, z0)) {
        const cplx rest = period - leg.Z_from_tp;
        // Stop short of b and close the gap with the local substitution.
        const cplx t = rest * (1.0 - std::min(0.01, 10.0 * z0 / len));
        try {
            const auto path = flow_V(p, leg.x, leg.y0, t, 64, o);
            const cplx tail = z_to_critical(p, path.x.back(), path.y0.back(), b);
            const double rem = std::abs(path.x.back() - b);
            if (rem < 0.1 * std::max(1.0, std::abs(b)) &&
                std::abs(leg.Z_from_tp + t + tail - period) < rel_tol * std::max(1.0, len) * 1e2 &&
                std::abs(tail) < 0.02 * len) {
                return true;
            }
        } catch (const NumericalError&) {
        }
    }
    return false;
}

std::string path_to_csv(const SigmaPath& path) {
    std::ostringstream os;
    os.precision(17);
    os << "s,re_x,im_x,sheet,re_Z,im_Z\n";
    for (std::size_t i = 0; i < path.size(); ++i) {
        os << path.s[i] << ',' << path.x[i].real() << ',' << path.x[i].imag() << ','
           << path.sheet[i] << ',' << path.Z[i].real() << ',' << path.Z[i].imag() << '\n';
    }
    return os.str();
}

}  // namespace exwkb
