#include "exwkb/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "exwkb/errors.hpp"

namespace exwkb {

cplx poly_eval(const Poly& p, cplx x) {
    cplx s{};
    for (auto it = p.rbegin(); it != p.rend(); ++it) s = s * x + *it;
    return s;
}

Poly poly_derivative(const Poly& p) {
    if (p.size() <= 1) return {cplx{}};
    Poly d(p.size() - 1);
    for (std::size_t k = 1; k < p.size(); ++k) d[k - 1] = double(k) * p[k];
    return d;
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly r(a.size() + b.size() - 1);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    }
    return r;
}

Poly poly_sub(const Poly& a, const Poly& b) {
    Poly r(std::max(a.size(), b.size()));
    for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
    for (std::size_t i = 0; i < b.size(); ++i) r[i] -= b[i];
    return r;
}

Poly poly_deflate(const Poly& p, cplx r) {
    if (p.size() <= 1) return {cplx{}};
    Poly q(p.size() - 1);
    cplx carry{};
    for (std::size_t k = p.size() - 1; k >= 1; --k) {
        carry = p[k] + carry * r;
        q[k - 1] = carry;
    }
    return q;
}

Poly poly_trim(const Poly& p, double rel_tol) {
    double big = 0;
    for (const auto& c : p) big = std::max(big, std::abs(c));
    Poly r = p;
    while (r.size() > 1 && std::abs(r.back()) <= rel_tol * big) r.pop_back();
    if (r.empty()) r.push_back(cplx{});
    return r;
}

std::size_t poly_degree(const Poly& p) { return poly_trim(p).size() - 1; }

std::vector<cplx> poly_roots(const Poly& p_in) {
    const Poly p = poly_trim(p_in, 1e-15);
    const std::size_t n = p.size() - 1;
    std::vector<cplx> roots;
    if (n == 0) return roots;
    if (n == 1) return {-p[0] / p[1]};
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(Eigen::Index(n), Eigen::Index(n));
    for (std::size_t i = 1; i < n; ++i) comp(Eigen::Index(i), Eigen::Index(i - 1)) = 1.0;
    for (std::size_t i = 0; i < n; ++i) comp(Eigen::Index(i), Eigen::Index(n - 1)) = -p[i] / p[n];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
    if (es.info() != Eigen::Success) throw NumericalError("companion eigenvalue solve failed");
    const Poly dp = poly_derivative(p);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        cplx r = es.eigenvalues()[i];
        const cplx d = poly_eval(dp, r);
        if (std::abs(d) > 0.0) {
            const cplx step = poly_eval(p, r) / d;
            // A Newton step is only trusted when it is small; near multiple
            // roots it can overshoot.
            if (std::abs(step) < 1e-6 * std::max(1.0, std::abs(r))) r -= step;
        }
        roots.push_back(r);
    }
    std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return roots;
}

std::vector<RootCluster> cluster_roots(const std::vector<cplx>& roots, double tol) {
    std::vector<RootCluster> out;
    std::vector<bool> used(roots.size(), false);
    for (std::size_t i = 0; i < roots.size(); ++i) {
        if (used[i]) continue;
        cplx sum = roots[i];
        int m = 1;
        used[i] = true;
        for (std::size_t j = i + 1; j < roots.size(); ++j) {
            if (!used[j] &&
                std::abs(roots[j] - roots[i]) < tol * std::max(1.0, std::abs(roots[i]))) {
                used[j] = true;
                sum += roots[j];
                ++m;
            }
        }
        out.push_back({sum / double(m), m});
    }
    return out;
}

std::vector<RootCluster> root_clusters(const Poly& p) {
    const auto roots = poly_roots(p);
    const std::size_t n = roots.size();
    const double eps = std::numeric_limits<double>::epsilon();
    std::vector<bool> used(n, false);
    std::vector<RootCluster> out;
    // An m-fold root splits into m eigenvalues spread by about eps^{1/m}.
    for (std::size_t m = n; m >= 2; --m) {
        for (std::size_t i = 0; i < n; ++i) {
            if (used[i]) continue;
            std::vector<std::size_t> idx;
            for (std::size_t j = 0; j < n; ++j) {
                if (!used[j]) idx.push_back(j);
            }
            if (idx.size() < m) break;
            std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                return std::abs(roots[a] - roots[i]) < std::abs(roots[b] - roots[i]);
            });
            idx.resize(m);
            cplx c{};
            for (auto j : idx) c += roots[j];
            c /= double(m);
            double rho = 0.0;
            for (auto j : idx) rho = std::max(rho, std::abs(roots[j] - c));
            const double scale = std::max(1.0, std::abs(c));
            if (rho > 10.0 * std::pow(eps, 1.0 / double(m)) * scale) continue;
            // The centroid is a simple root of the (m-1)-th derivative.
            Poly d = p;
            for (std::size_t k = 0; k + 1 < m; ++k) d = poly_derivative(d);
            const Poly dd = poly_derivative(d);
            for (int it = 0; it < 3; ++it) {
                const cplx den = poly_eval(dd, c);
                if (den == cplx{}) break;
                const cplx step = poly_eval(d, c) / den;
                if (!(std::abs(step) < 1e-3 * scale)) break;
                c -= step;
            }
            // Verify that the local Taylor expansion is dominated by its m-th term.
            const auto t = polynomial_on_jet(p, Jet<cplx>::variable(c, m + 1));
            const double r0 = 1e-2 * scale;
            const double lead = std::abs(t[m]) * std::pow(r0, double(m));
            bool ok = lead > 0.0;
            for (std::size_t k = 0; k < m && ok; ++k) {
                if (std::abs(t[k]) * std::pow(r0, double(k)) > 1e-6 * lead) ok = false;
            }
            if (!ok) continue;
            for (auto j : idx) used[j] = true;
            out.push_back({c, int(m)});
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!used[i]) out.push_back({roots[i], 1});
    }
    std::sort(out.begin(), out.end(), [](const RootCluster& a, const RootCluster& b) {
        if (a.location.real() != b.location.real()) return a.location.real() < b.location.real();
        return a.location.imag() < b.location.imag();
    });
    return out;
}

RationalFn::RationalFn(Poly num, Poly den) : num_(poly_trim(num)), den_(poly_trim(den)) {
    if (den_.size() == 1 && den_[0] == cplx{}) {
        throw InputError("rational function with zero denominator");
    }
    if (is_zero()) {
        num_ = {cplx{}};
        den_ = {cplx{1.0}};
        return;
    }
    // Cancel common roots so the stored form is reduced.
    bool changed = true;
    while (changed && num_.size() > 1 && den_.size() > 1) {
        changed = false;
        const auto rn = poly_roots(num_);
        const auto rd = poly_roots(den_);
        for (const auto& a : rn) {
            for (const auto& b : rd) {
                if (std::abs(a - b) < 1e-10 * std::max(1.0, std::abs(a))) {
                    const cplx r = 0.5 * (a + b);
                    num_ = poly_deflate(num_, r);
                    den_ = poly_deflate(den_, r);
                    changed = true;
                    break;
                }
            }
            if (changed) break;
        }
    }
    // Normalise so the leading denominator coefficient is one.
    const cplx lead = den_.back();
    for (auto& c : num_) c /= lead;
    for (auto& c : den_) c /= lead;
}

bool RationalFn::is_zero() const {
    return std::all_of(num_.begin(), num_.end(), [](cplx c) { return c == cplx{}; });
}

namespace {

int growth_at_infinity(const RationalFn& f) {
    return int(poly_degree(f.num())) - int(poly_degree(f.den()));
}

Poly poly_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.empty()) {
        throw InputError(std::string("\"") + what + "\" must be a non-empty array");
    }
    Poly p;
    for (const auto& e : j) p.push_back(complex_from_json(e));
    return p;
}

}  // namespace

Potential::Potential(std::vector<RationalFn> q) : q_(std::move(q)) {
    if (q_.empty() || q_[0].is_zero()) {
        throw InputError("Q_0 must not vanish identically");
    }
    while (q_.size() > 1 && q_.back().is_zero()) q_.pop_back();
    zeros_ = root_clusters(q_[0].num());
    poles_ = root_clusters(q_[0].den());

    const int g0 = growth_at_infinity(q_[0]);
    for (std::size_t k = 1; k < q_.size(); ++k) {
        if (q_[k].is_zero()) continue;
        for (const auto& pk : root_clusters(q_[k].den())) {
            bool ok = false;
            for (const auto& p0 : poles_) {
                if (std::abs(p0.location - pk.location) < 1e-8 * std::max(1.0, std::abs(p0.location)) &&
                    p0.multiplicity >= pk.multiplicity) {
                    ok = true;
                }
            }
            if (!ok) {
                throw InputError("Q_" + std::to_string(k) +
                                 " has a pole that is not a pole of Q_0 of at least the same order");
            }
        }
        const int gk = growth_at_infinity(q_[k]);
        if (gk + 4 > 0 && gk > g0) {
            throw InputError("Q_" + std::to_string(k) + " has a worse pole at infinity than Q_0");
        }
    }
}

Potential Potential::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InputError("potential must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "Q") throw InputError("unknown key \"" + it.key() + "\" in potential");
    }
    if (!j.contains("Q") || !j["Q"].is_array() || j["Q"].empty()) {
        throw InputError("potential needs a non-empty \"Q\" array");
    }
    std::vector<RationalFn> q;
    for (const auto& e : j["Q"]) {
        if (!e.is_object()) throw InputError("each Q entry must be an object");
        for (auto it = e.begin(); it != e.end(); ++it) {
            if (it.key() != "num" && it.key() != "den") {
                throw InputError("unknown key \"" + it.key() + "\" in Q entry");
            }
        }
        if (!e.contains("num")) throw InputError("Q entry lacks \"num\"");
        Poly num = poly_from_json(e["num"], "num");
        Poly den = e.contains("den") ? poly_from_json(e["den"], "den") : Poly{cplx{1.0}};
        q.emplace_back(std::move(num), std::move(den));
    }
    return Potential(std::move(q));
}

nlohmann::json Potential::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : q_) {
        nlohmann::json e;
        e["num"] = nlohmann::json::array();
        e["den"] = nlohmann::json::array();
        for (const auto& c : f.num()) e["num"].push_back(complex_to_json(c));
        for (const auto& c : f.den()) e["den"].push_back(complex_to_json(c));
        arr.push_back(e);
    }
    return nlohmann::json{{"Q", arr}};
}

const RationalFn& Potential::Q(std::size_t k) const {
    static const RationalFn zero;
    return k < q_.size() ? q_[k] : zero;
}

cplx Potential::evaluate(cplx x, cplx hbar) const {
    cplx s{};
    for (auto it = q_.rbegin(); it != q_.rend(); ++it) s = s * hbar + (*it)(x);
    return s;
}

std::vector<cplx> Potential::transition_points() const {
    std::vector<cplx> out;
    for (const auto& z : zeros_) out.push_back(z.location);
    for (const auto& p : poles_) {
        if (p.multiplicity == 1) out.push_back(p.location);
    }
    return out;
}

std::vector<cplx> Potential::branch_points() const {
    std::vector<cplx> out;
    for (const auto& z : zeros_) {
        if (z.multiplicity % 2 == 1) out.push_back(z.location);
    }
    for (const auto& p : poles_) {
        if (p.multiplicity % 2 == 1) out.push_back(p.location);
    }
    return out;
}

std::vector<cplx> Potential::infinite_critical_points() const {
    std::vector<cplx> out;
    for (const auto& p : poles_) {
        if (p.multiplicity >= 2) out.push_back(p.location);
    }
    return out;
}

std::vector<cplx> Potential::critical_locations() const {
    std::vector<cplx> out;
    for (const auto& z : zeros_) out.push_back(z.location);
    for (const auto& p : poles_) out.push_back(p.location);
    return out;
}

int Potential::infinity_pole_order() const { return growth_at_infinity(q_[0]) + 4; }

bool CriticalPoint::has_label(const std::string& l) const {
    return std::find(labels.begin(), labels.end(), l) != labels.end();
}

nlohmann::json to_json(const CriticalPoint& cp) {
    nlohmann::json j;
    if (cp.at_infinity) {
        j["location"] = "infinity";
    } else {
        j["location"] = complex_to_json(cp.location);
    }
    j["kind"] = cp.kind == CriticalKind::zero ? "zero" : "pole";
    j["order"] = cp.order;
    j["parity"] = cp.even ? "even" : "odd";
    j["labels"] = cp.labels;
    return j;
}

namespace {

CriticalPoint make_point(bool at_inf, cplx loc, CriticalKind kind, int order) {
    CriticalPoint cp;
    cp.at_infinity = at_inf;
    cp.location = loc;
    cp.kind = kind;
    cp.order = order;
    cp.even = order % 2 == 0;
    if (kind == CriticalKind::zero) {
        cp.labels.push_back("turning_point");
        if (order == 1) cp.labels.push_back("simple_turning_point");
    } else {
        if (order == 1) cp.labels.push_back("turning_point");
        if (order >= 2) cp.labels.push_back("infinite_critical_point");
        if (order % 2 == 1) cp.labels.push_back("virtual_zero");
    }
    return cp;
}

}  // namespace

std::vector<CriticalPoint> classify(const Potential& p) {
    for (const auto& z : p.zeros()) {
        for (const auto& q : p.poles()) {
            if (std::abs(z.location - q.location) < 1e-8) {
                throw InputError("divisor not minimal at desk tolerance");
            }
        }
    }
    std::vector<CriticalPoint> out;
    for (const auto& z : p.zeros()) {
        out.push_back(make_point(false, z.location, CriticalKind::zero, z.multiplicity));
    }
    for (const auto& q : p.poles()) {
        out.push_back(make_point(false, q.location, CriticalKind::pole, q.multiplicity));
    }
    const int m = p.infinity_pole_order();
    if (m > 0) out.push_back(make_point(true, {}, CriticalKind::pole, m));
    if (m < 0) out.push_back(make_point(true, {}, CriticalKind::zero, -m));
    return out;
}

cplx quadratic_residue(const Potential& p, const CriticalPoint& cp) {
    if (cp.kind != CriticalKind::pole) {
        throw InputError("quadratic_residue is defined at poles only");
    }
    if (cp.order % 2 == 1) return {};
    const int m = cp.order;
    const std::size_t n = std::size_t(m / 2 + 1);
    const RationalFn& q0 = p.Q(0);
    Jet<cplx> g;
    if (cp.at_infinity) {
        // phi_0 = u^{-m} g(u) du^2 in the chart u = 1/x.
        Poly rn = poly_trim(q0.num());
        Poly rd = poly_trim(q0.den());
        std::reverse(rn.begin(), rn.end());
        std::reverse(rd.begin(), rd.end());
        g = RationalFn(rn, rd).on_jet(Jet<cplx>::variable(0.0, n));
    } else {
        Poly d = q0.den();
        for (int i = 0; i < m; ++i) d = poly_deflate(d, cp.location);
        g = RationalFn(q0.num(), d).on_jet(Jet<cplx>::variable(cp.location, n));
    }
    if (m == 2) return g[0];
    const Jet<cplx> s = sqrt_near(g, cplx(1.0));
    const cplx b = s[std::size_t(m / 2 - 1)];
    return b * b;
}

SimpleComplete is_simple_complete(const Potential& p) {
    SimpleComplete r;
    r.simple = true;
    bool simple_pole = false;
    for (const auto& cp : classify(p)) {
        if (cp.kind == CriticalKind::zero && cp.order > 1) r.simple = false;
        if (cp.kind == CriticalKind::pole && cp.order == 1) simple_pole = true;
    }
    r.complete = r.simple && !simple_pole;
    return r;
}

}  // namespace exwkb
