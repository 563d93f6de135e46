#include "exwkb/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include "exwkb/errors.hpp"
#include "flow_integrator.hpp"

namespace exwkb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool same_point(cplx a, cplx b) { return std::abs(a - b) < 1e-9 * std::max(1.0, std::abs(a)); }

double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    if (a < 0) a += kTwoPi;
    return a;
}

// Signed phase distance a - b in (-pi, pi].
double angle_diff(double a, double b) {
    double d = std::fmod(a - b, kTwoPi);
    if (d > std::numbers::pi) d -= kTwoPi;
    if (d <= -std::numbers::pi) d += kTwoPi;
    return d;
}

// Half the distance from tp to the nearest other zero or pole: the disc in
// which the straight-segment substitution toward tp is trusted.
double local_radius(const Potential& p, cplx tp) {
    double d = kInf;
    for (const auto& z : p.zeros()) {
        if (!same_point(z.location, tp)) d = std::min(d, std::abs(z.location - tp));
    }
    for (const auto& q : p.poles()) {
        if (!same_point(q.location, tp)) d = std::min(d, std::abs(q.location - tp));
    }
    return 0.5 * d;
}

struct Watched {
    cplx tp;
    double radius;
    Approach best;
    bool passed = false;
    std::optional<double> prev_re;
    std::optional<double> prev_im;
};

void push_sample(SigmaPath& path, const Potential& p, double s, cplx x, cplx y0, cplx Z) {
    path.s.push_back(s);
    path.x.push_back(x);
    path.y0.push_back(y0);
    path.sheet.push_back(y0 == cplx{} ? (path.sheet.empty() ? 1 : path.sheet.back()) : sheet_label(p, x, y0));
    path.Z.push_back(Z);
}

// Phase of sigma along each recorded chord, measured independently of the
// flow by quadrature of 2 y_0 dx.
void measure_phase(const Potential& p, Trajectory& t, std::size_t exact_tail) {
    auto& path = t.path;
    const std::size_t n = path.size();
    path.phase.assign(n, t.phase);
    double dev = 0.0;
    for (std::size_t i = 0; i + 1 + exact_tail < n; ++i) {
        const cplx dZ = path.Z[i + 1] - path.Z[i];
        if (std::abs(dZ) == 0.0) continue;
        const cplx c = chord_Z(p, path.x[i], path.y0[i], path.x[i + 1]);
        path.phase[i] = std::arg(c);
        dev = std::max(dev, std::abs(angle_diff(std::arg(c), t.phase)));
    }
    if (n >= 2 && exact_tail == 0) path.phase[n - 1] = path.phase[n - 2];
    t.phase_deviation = dev;
}

Trajectory trace_once(const Potential& p, cplx x0, cplx y00, double alpha, const TraceOptions& opt) {
    if (branch_distance(p, x0) <= 1e-9) throw InputError("trace: start point is a branch point");
    Trajectory t;
    t.phase = alpha;
    y00 = nearest_y0(p, x0, y00);
    t.start = {x0, sheet_label(p, x0, y00)};
    const cplx dir = std::polar(1.0, alpha);

    std::vector<Watched> watched;
    for (const auto& tp : p.transition_points()) {
        bool skip = false;
        for (const auto& g : opt.ignore) skip |= same_point(g, tp);
        if (!skip) watched.push_back({tp, local_radius(p, tp), {tp, kInf, 0.0, false}, false, std::nullopt, std::nullopt});
    }
    std::vector<cplx> high_poles;
    for (const auto& q : p.poles()) {
        if (q.multiplicity >= 2) high_poles.push_back(q.location);
    }

    detail::FlowIntegrator integ(p, x0, y00, alpha, opt.rel_tol, 1e-3);
    push_sample(t.path, p, 0.0, x0, y00, {});
    std::size_t exact_tail = 0;
    for (int step = 0;; ++step) {
        const cplx x = integ.x();
        const cplx y = integ.y0();
        const double s = integ.s();
        double near = kInf;
        bool hit = false;
        for (auto& w : watched) {
            if (std::abs(x - w.tp) >= w.radius) {
                w.prev_re.reset();
                continue;
            }
            const cplx zc = z_to_critical(p, x, y, w.tp);
            const cplx v = zc * std::conj(dir);
            near = std::min(near, std::abs(zc));
            if (std::abs(zc) < opt.capture) {
                t.termination = Termination::hits_transition;
                t.endpoint = w.tp;
                t.hit_length = s + v.real();
                t.miss = v.imag();
                w.best = {w.tp, std::abs(zc), v.imag(), true};
                w.passed = true;
                push_sample(t.path, p, s + v.real(), w.tp, cplx{}, std::polar(s, alpha) + zc);
                exact_tail = 1;
                hit = true;
                break;
            }
            // passing abreast: the remaining Z turns from ahead to behind
            if (w.prev_re && *w.prev_re > 0.0 && v.real() <= 0.0) {
                const double f = *w.prev_re / (*w.prev_re - v.real());
                const double miss = *w.prev_im + f * (v.imag() - *w.prev_im);
                if (!w.passed || std::abs(miss) < std::abs(w.best.miss)) {
                    w.best = {w.tp, std::abs(miss), miss, true};
                    w.passed = true;
                }
            }
            w.prev_re = v.real();
            w.prev_im = v.imag();
            if (!w.passed && std::abs(zc) < w.best.dz) w.best = {w.tp, std::abs(zc), v.imag(), false};
        }
        if (hit) break;
        if (s >= opt.max_length) {
            t.termination = Termination::max_length;
            t.possibly_divergent = true;
            break;
        }
        if (step >= opt.max_steps) {
            t.termination = Termination::max_length;
            t.possibly_divergent = true;
            break;
        }
        double ds_max = opt.max_length - s;
        if (near < kInf) ds_max = std::min(ds_max, std::max(0.5 * near, 0.25 * opt.capture));
        if (!integ.step(ds_max, 1e-12 * (1.0 + s))) {
            t.termination = Termination::numerical_stall;
            break;
        }
        const cplx xn = integ.x();
        push_sample(t.path, p, integ.s(), xn, integ.y0(), std::polar(integ.s(), alpha));
        if (std::abs(xn) > opt.escape) {
            t.termination = Termination::enters_pole;
            t.at_infinity = true;
            break;
        }
        bool in_pole = false;
        for (const auto& q : high_poles) {
            if (std::abs(xn - q) < opt.pole_radius) {
                t.termination = Termination::enters_pole;
                t.endpoint = q;
                in_pole = true;
            }
        }
        if (in_pole) break;
    }
    for (const auto& w : watched) {
        if (w.best.dz < kInf) t.approaches.push_back(w.best);
    }
    measure_phase(p, t, exact_tail);
    return t;
}

// Signed transverse miss of a trajectory at tp, nullopt if it never passes tp.
std::optional<double> signed_miss(const Trajectory& t, cplx tp) {
    if (t.termination == Termination::hits_transition && same_point(t.endpoint, tp)) return t.miss;
    for (const auto& a : t.approaches) {
        if (same_point(a.tp, tp) && a.passed) return a.miss;
    }
    return std::nullopt;
}

bool hits(const Trajectory& t) { return t.termination == Termination::hits_transition; }

// Bisects the sign change of the miss at tp between phases lo and hi.
// Returns the phase and the final trajectory if it ends on a verified hit.
template <class TraceAt>
std::optional<std::pair<double, Trajectory>> bisect_hit(TraceAt trace_at, cplx tp, double lo, double hi,
                                                        double m_lo, double tol) {
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        auto tr = trace_at(mid);
        const auto m = signed_miss(tr, tp);
        if (!m) return std::nullopt;
        if (*m == 0.0) return std::make_pair(mid, std::move(tr));
        // captures inside the 1e-4 radius still carry a signed offset, so keep bisecting
        if ((*m > 0) == (m_lo > 0)) {
            lo = mid;
            m_lo = *m;
        } else {
            hi = mid;
        }
    }
    const double mid = 0.5 * (lo + hi);
    auto tr = trace_at(mid);
    if (hits(tr) && same_point(tr.endpoint, tp)) return std::make_pair(mid, std::move(tr));
    return std::nullopt;
}

// Sign changes of the miss at each watched point between consecutive scan phases.
struct Bracket {
    cplx tp;
    double lo, hi, m_lo;
};

template <class TraceAt>
std::vector<Bracket> brackets(TraceAt trace_at, const std::vector<cplx>& tps, const std::vector<double>& phases,
                              std::vector<Trajectory>* scanned = nullptr) {
    std::vector<Trajectory> tr;
    tr.reserve(phases.size());
    for (double a : phases) tr.push_back(trace_at(a));
    std::vector<Bracket> out;
    for (std::size_t i = 0; i + 1 < phases.size(); ++i) {
        for (const auto& tp : tps) {
            const auto a = signed_miss(tr[i], tp);
            const auto b = signed_miss(tr[i + 1], tp);
            if (!a || !b) continue;
            if (*a == 0.0) {
                out.push_back({tp, phases[i], phases[i], 0.0});
            } else if (*b != 0.0 && (*a > 0) != (*b > 0)) {
                out.push_back({tp, phases[i], phases[i + 1], *a});
            }
        }
    }
    if (scanned) *scanned = std::move(tr);
    return out;
}

}  // namespace

std::string to_string(Termination t) {
    switch (t) {
        case Termination::hits_transition: return "hits_transition";
        case Termination::enters_pole: return "enters_pole";
        case Termination::max_length: return "max_length";
        case Termination::numerical_stall: return "numerical_stall";
    }
    return "unknown";
}

std::string to_string(Stability s) {
    switch (s) {
        case Stability::stable: return "stable";
        case Stability::semi_stable: return "semi_stable";
        case Stability::unstable: return "unstable";
    }
    return "unknown";
}

Trajectory trace(const Potential& p, cplx x, cplx y0, double alpha, const TraceOptions& opt) {
    Trajectory t = trace_once(p, x, y0, alpha, opt);
    if (t.phase_deviation > 1e-6) {
        // one retry with a tighter integrator before reporting the defect
        TraceOptions o = opt;
        o.rel_tol = std::max(1e-14, opt.rel_tol * 1e-2);
        t = trace_once(p, x, y0, alpha, o);
        if (t.phase_deviation > 1e-6) t.termination = Termination::numerical_stall;
    }
    return t;
}

Trajectory trace(const Potential& p, const SpectralPoint& sp, double alpha, const TraceOptions& opt) {
    return trace(p, sp.x, liouville(p, sp), alpha, opt);
}

StokesDiagram stokes_diagram(const Potential& p, const SpectralPoint& sp, int n_phases, const DiagramOptions& opt) {
    if (n_phases < 4) throw InputError("stokes_diagram: need at least 4 phases");
    const cplx y0 = liouville(p, sp);
    auto trace_at = [&](double a) { return trace(p, sp.x, y0, a, opt.trace); };
    std::vector<double> phases;
    for (int j = 0; j <= n_phases; ++j) phases.push_back(kTwoPi * j / n_phases);
    const auto tps = p.transition_points();
    std::vector<Trajectory> scanned;
    const auto br = brackets(trace_at, tps, phases, &scanned);

    StokesDiagram d;
    d.at = sp;
    for (int j = 0; j < n_phases; ++j) {
        if (!hits(scanned[std::size_t(j)])) d.regular.push_back(phases[std::size_t(j)]);
    }
    std::vector<CriticalPhase> unresolved;
    for (const auto& b : br) {
        std::optional<std::pair<double, Trajectory>> r;
        if (b.lo == b.hi) {
            auto tr = trace_at(b.lo);
            r = std::make_pair(b.lo, std::move(tr));
        } else {
            r = bisect_hit(trace_at, b.tp, b.lo, b.hi, b.m_lo, opt.bisect_tol);
        }
        if (r) {
            d.critical.push_back({wrap_angle(r->first), b.tp, r->second.hit_length, Stability::unstable, false});
        } else {
            unresolved.push_back({wrap_angle(0.5 * (b.lo + b.hi)), b.tp, 0.0, Stability::unstable, true});
        }
    }
    // a topology change at another point's critical phase also flips the sign
    for (const auto& u : unresolved) {
        bool dup = false;
        for (const auto& c : d.critical) dup |= std::abs(angle_diff(c.alpha, u.alpha)) < 1e-3;
        if (!dup) d.critical.push_back(u);
    }
    std::sort(d.critical.begin(), d.critical.end(),
              [](const CriticalPhase& a, const CriticalPhase& b) { return a.alpha < b.alpha; });
    d.critical.erase(std::unique(d.critical.begin(), d.critical.end(),
                                 [](const CriticalPhase& a, const CriticalPhase& b) {
                                     return std::abs(angle_diff(a.alpha, b.alpha)) < 10 * 1e-6 &&
                                            same_point(a.terminal, b.terminal);
                                 }),
                     d.critical.end());

    for (std::size_t i = 0; i < d.critical.size(); ++i) {
        auto& c = d.critical[i];
        if (c.unresolved) continue;
        double gap = std::numbers::pi;
        for (std::size_t j = 0; j < d.critical.size(); ++j) {
            if (j != i) gap = std::min(gap, std::abs(angle_diff(d.critical[j].alpha, c.alpha)));
        }
        bool regular_around = true;
        for (double delta : {1e-4, 1e-3, 1e-2}) {
            if (delta >= 0.5 * gap) break;
            for (double sgn : {-1.0, 1.0}) regular_around &= !hits(trace_at(c.alpha + sgn * delta));
        }
        if (regular_around) {
            c.stability = Stability::stable;
            continue;
        }
        // transverse segment through sp at the same phase
        const cplx xdot = std::polar(1.0, c.alpha) / (2.0 * y0);
        const cplx nrm = cplx(0, 1) * xdot / std::abs(xdot);
        bool transverse_regular = true;
        const int half = opt.transverse_points / 2;
        for (int k = -half; k <= half; ++k) {
            if (k == 0) continue;
            const cplx xs = sp.x + double(k) / std::max(1, half) * opt.transverse_offset * nrm;
            transverse_regular &= !hits(trace(p, xs, nearest_y0(p, xs, y0), c.alpha, opt.trace));
        }
        c.stability = transverse_regular ? Stability::semi_stable : Stability::unstable;
    }
    return d;
}

std::vector<Leg> stokes_graph(const Potential& p, double alpha, const TraceOptions& opt) {
    for (const auto& z : p.zeros()) {
        if (z.multiplicity != 1) throw InputError("stokes_graph: all zeros of Q_0 must be simple");
    }
    std::vector<Leg> legs;
    for (const auto& tp : p.transition_points()) {
        const auto starts = leg_starts(p, tp, alpha, 1e-3);
        for (std::size_t i = 0; i < starts.size(); ++i) {
            TraceOptions o = opt;
            o.ignore.push_back(tp);
            Trajectory tr = trace(p, starts[i].x, starts[i].y0, alpha, o);
            // prepend the launch point itself
            const cplx z0 = starts[i].Z_from_tp;
            SigmaPath full;
            push_sample(full, p, 0.0, tp, cplx{}, {});
            for (std::size_t k = 0; k < tr.path.size(); ++k) {
                full.s.push_back(tr.path.s[k] + std::abs(z0));
                full.x.push_back(tr.path.x[k]);
                full.y0.push_back(tr.path.y0[k]);
                full.sheet.push_back(tr.path.sheet[k]);
                full.Z.push_back(tr.path.Z[k] + z0);
            }
            full.phase.assign(1, alpha);
            full.phase.insert(full.phase.end(), tr.path.phase.begin(), tr.path.phase.end());
            tr.path = std::move(full);
            if (tr.termination == Termination::hits_transition) tr.hit_length += std::abs(z0);
            legs.push_back({tp, int(i), std::move(tr)});
        }
    }
    return legs;
}

std::vector<Saddle> saddle_scan(const Potential& p, double alpha_lo, double alpha_hi, int n, const DiagramOptions& opt) {
    if (!(alpha_hi > alpha_lo)) throw InputError("saddle_scan: empty phase range");
    for (const auto& z : p.zeros()) {
        if (z.multiplicity != 1) throw InputError("saddle_scan: all zeros of Q_0 must be simple");
    }
    const auto tps = p.transition_points();
    auto in_range = [&](double a) {
        const double w = alpha_lo + wrap_angle(a - alpha_lo);
        return w <= alpha_hi + 1e-12 ? std::optional<double>(w) : std::nullopt;
    };
    std::vector<Saddle> out;
    auto add = [&](Saddle s) {
        for (const auto& o : out) {
            const bool same_pair = (same_point(o.from, s.from) && same_point(o.to, s.to)) ||
                                   (same_point(o.from, s.to) && same_point(o.to, s.from));
            if (same_pair && std::abs(angle_diff(o.alpha, s.alpha)) < 1e-5) return;
        }
        out.push_back(s);
    };

    // straight-segment periods
    for (std::size_t i = 0; i < tps.size(); ++i) {
        for (std::size_t j = i + 1; j < tps.size(); ++j) {
            const cplx per = segment_period(p, tps[i], tps[j]);
            for (const cplx P : {per, -per}) {
                const auto a = in_range(std::arg(P));
                if (a && verify_saddle(p, tps[i], tps[j], P)) add({*a, tps[i], tps[j], P});
            }
        }
    }

    // legs scanned over the range
    if (n >= 2) {
        std::vector<double> phases;
        for (int k = 0; k <= n; ++k) phases.push_back(alpha_lo + (alpha_hi - alpha_lo) * k / n);
        for (const auto& a : tps) {
            const int nlegs = int(leg_starts(p, a, alpha_lo, 1e-3).size());
            std::vector<cplx> others;
            for (const auto& b : tps) {
                if (!same_point(a, b)) others.push_back(b);
            }
            for (int leg = 0; leg < nlegs; ++leg) {
                auto trace_at = [&](double al) {
                    const auto st = leg_starts(p, a, al, 1e-3)[std::size_t(leg)];
                    TraceOptions o = opt.trace;
                    o.ignore.push_back(a);
                    Trajectory tr = trace(p, st.x, st.y0, al, o);
                    tr.hit_length += std::abs(st.Z_from_tp);
                    return tr;
                };
                for (const auto& b : brackets(trace_at, others, phases)) {
                    std::optional<std::pair<double, Trajectory>> r;
                    if (b.lo == b.hi) {
                        r = std::make_pair(b.lo, trace_at(b.lo));
                    } else {
                        r = bisect_hit(trace_at, b.tp, b.lo, b.hi, b.m_lo, opt.bisect_tol);
                    }
                    if (!r) continue;
                    add({r->first, a, b.tp, std::polar(r->second.hit_length, r->first)});
                }
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const Saddle& a, const Saddle& b) { return a.alpha < b.alpha; });
    return out;
}

namespace {

nlohmann::json cjson(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

}  // namespace

nlohmann::json to_json(const Trajectory& t, bool with_samples) {
    nlohmann::json j{{"start", cjson(t.start.x)},
                     {"sheet", t.start.sheet},
                     {"phase", t.phase},
                     {"termination", to_string(t.termination)},
                     {"phase_deviation", t.phase_deviation},
                     {"possibly_divergent", t.possibly_divergent}};
    if (t.termination == Termination::hits_transition) {
        j["endpoint"] = cjson(t.endpoint);
        j["hit_length"] = t.hit_length;
        j["miss"] = t.miss;
    } else if (t.termination == Termination::enters_pole) {
        j["endpoint"] = t.at_infinity ? nlohmann::json("infinity") : cjson(t.endpoint);
    }
    if (with_samples) {
        nlohmann::json xs = nlohmann::json::array();
        for (const auto& x : t.path.x) xs.push_back(cjson(x));
        j["x"] = std::move(xs);
    }
    return j;
}

nlohmann::json to_json(const StokesDiagram& d) {
    nlohmann::json crit = nlohmann::json::array();
    for (const auto& c : d.critical) {
        crit.push_back({{"alpha", c.alpha},
                        {"terminal", cjson(c.terminal)},
                        {"length", c.length},
                        {"stability", to_string(c.stability)},
                        {"unresolved", c.unresolved}});
    }
    return {{"at", cjson(d.at.x)}, {"sheet", d.at.sheet}, {"critical_phases", crit}, {"regular_phases", d.regular}};
}

nlohmann::json to_json(const std::vector<Leg>& legs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& l : legs) {
        auto j = to_json(l.trajectory);
        j["source"] = cjson(l.source);
        j["leg"] = l.index;
        arr.push_back(std::move(j));
    }
    return arr;
}

std::string to_svg(const Potential& p, const std::vector<Leg>& legs, double view_radius) {
    const double size = 600.0;
    const double scale = size / (2.0 * view_radius);
    auto px = [&](cplx x) { return std::make_pair((x.real() + view_radius) * scale, (view_radius - x.imag()) * scale); };
    auto colour = [](Termination t) {
        switch (t) {
            case Termination::hits_transition: return "#c0392b";
            case Termination::enters_pole: return "#2c6fbb";
            case Termination::max_length: return "#7f8c8d";
            case Termination::numerical_stall: return "#e67e22";
        }
        return "#000000";
    };
    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
       << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& l : legs) {
        const auto& xs = l.trajectory.path.x;
        std::string pts;
        auto flush = [&]() {
            if (pts.empty()) return;
            os << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << colour(l.trajectory.termination)
               << "\" points=\"" << pts << "\"/>\n";
            pts.clear();
        };
        for (const auto& x : xs) {
            if (std::abs(x) > 4.0 * view_radius) {
                flush();
                continue;
            }
            const auto [u, v] = px(x);
            std::ostringstream q;
            q.precision(6);
            q << u << ',' << v << ' ';
            pts += q.str();
        }
        flush();
    }
    for (const auto& tp : p.transition_points()) {
        const auto [u, v] = px(tp);
        os << "<circle cx=\"" << u << "\" cy=\"" << v << "\" r=\"4\" fill=\"black\"/>\n";
    }
    for (const auto& q : p.poles()) {
        const auto [u, v] = px(q.location);
        os << "<circle cx=\"" << u << "\" cy=\"" << v << "\" r=\"4\" fill=\"none\" stroke=\"black\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace exwkb
