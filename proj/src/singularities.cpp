#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include <Eigen/Dense>

#include "exwkb/borel_engine.hpp"
#include "exwkb/errors.hpp"
#include "exwkb/hbar_series.hpp"
#include "exwkb/wkb.hpp"

namespace exwkb {

namespace {

struct Geodesic {
    cplx xi{};
    SigmaPath path;
};

// Straight Z-line from (x, y0) into tp, refined by flowing most of the way.
std::optional<Geodesic> geodesic_to(const Potential& p, cplx x, cplx y0, cplx tp, const PredictOptions& opt,
                                    std::string& why) {
    cplx xi = z_to_critical(p, x, y0, tp);
    if (!std::isfinite(xi.real()) || !std::isfinite(xi.imag()) || std::abs(xi) == 0.0) {
        why = "degenerate straight-segment estimate";
        return std::nullopt;
    }
    SpectralOptions so = opt.spectral;
    so.exclusion_radius = std::min(so.exclusion_radius, 1e-3 * std::abs(xi));
    for (int it = 0; it < opt.max_iterations; ++it) {
        const cplx t = xi * 0.99;
        SigmaPath path;
        try {
            path = flow_V(p, x, y0, t, 64, so);
        } catch (const FlowError& e) {
            if (std::abs(e.transition_point - tp) > 1e-9 * std::max(1.0, std::abs(tp))) {
                why = "geodesic blocked by another transition point";
                return std::nullopt;
            }
            why = "flow collapsed before reaching the transition point";
            return std::nullopt;
        } catch (const NumericalError& e) {
            why = e.what();
            return std::nullopt;
        }
        const cplx tail = z_to_critical(p, path.x.back(), path.y0.back(), tp);
        const cplx next = t + tail;
        if (std::abs(path.x.back() - tp) > 0.5 * std::abs(x - tp) + 1e-12) {
            // The flow did not approach tp; the estimate is for another homotopy class.
            xi = next;
            if (it + 1 == opt.max_iterations) break;
            continue;
        }
        if (std::abs(next - xi) <= opt.tol * (1.0 + std::abs(xi))) return Geodesic{next, path};
        xi = next;
    }
    why = "shooting did not converge";
    return std::nullopt;
}

// Coincident central charges: keep resolved records over unresolved ones,
// then the shortest chain.
void dedupe(std::vector<CriticalPathRecord>& recs) {
    auto rank = [](const CriticalPathRecord& r) { return std::make_pair(r.status != PathStatus::resolved, r.depth); };
    std::vector<CriticalPathRecord> out;
    for (auto& r : recs) {
        bool dup = false;
        for (auto& o : out) {
            if (std::abs(o.xi - r.xi) < 1e-6 * std::max(1.0, std::abs(r.xi))) {
                dup = true;
                if (rank(r) < rank(o)) o = std::move(r);
                break;
            }
        }
        if (!dup) out.push_back(std::move(r));
    }
    recs = std::move(out);
}

}  // namespace

std::vector<CriticalPathRecord> predict_singularities(const Potential& p, const SpectralPoint& sp, double radius,
                                                      const PredictOptions& opt) {
    const cplx y0 = liouville(p, sp, opt.spectral.branch_tol);
    const auto tps = p.transition_points();
    std::vector<CriticalPathRecord> recs;
    for (const auto& tp : tps) {
        std::string why;
        const auto g = geodesic_to(p, sp.x, y0, tp, opt, why);
        CriticalPathRecord r;
        r.terminal = tp;
        if (g) {
            r.path = g->path;
            r.xi = g->xi;
            r.is_trajectory = true;
        } else {
            r.xi = z_to_critical(p, sp.x, y0, tp);
            r.status = PathStatus::unresolved;
            r.note = why;
        }
        recs.push_back(std::move(r));
    }

    // Saddle periods between transition points, verified by shooting.
    struct Saddle {
        cplx from, to, period;
    };
    std::vector<Saddle> saddles;
    for (std::size_t i = 0; i < tps.size(); ++i) {
        for (std::size_t j = 0; j < tps.size(); ++j) {
            if (i == j) continue;
            const cplx per = segment_period(p, tps[i], tps[j]);
            for (const cplx s : {per, -per}) {
                if (verify_saddle(p, tps[i], tps[j], s, 1e-6, opt.spectral)) saddles.push_back({tps[i], tps[j], s});
            }
        }
    }
    const std::size_t direct = recs.size();
    for (std::size_t i = 0; i < direct; ++i) {
        if (recs[i].status != PathStatus::resolved) continue;
        for (const auto& sd : saddles) {
            if (std::abs(sd.from - recs[i].terminal) > 1e-9 * std::max(1.0, std::abs(sd.from))) continue;
            for (int s = 1; s <= opt.depth; ++s) {
                CriticalPathRecord r;
                r.xi = recs[i].xi + double(s) * sd.period;
                r.terminal = s % 2 ? sd.to : sd.from;
                r.depth = s;
                r.note = "saddle chain";
                recs.push_back(std::move(r));
            }
        }
    }
    std::vector<CriticalPathRecord> kept;
    for (auto& r : recs) {
        if (std::abs(r.xi) <= radius) kept.push_back(std::move(r));
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [](const CriticalPathRecord& a, const CriticalPathRecord& b) { return std::abs(a.xi) < std::abs(b.xi); });
    dedupe(kept);
    return kept;
}

PadeResult robust_pade(const std::vector<cplx>& c_in, int m, int n, double tol) {
    using Mat = Eigen::MatrixXcd;
    using Vec = Eigen::VectorXcd;
    if (m < 0 || n < 0) throw InputError("robust_pade: degrees must be non-negative");
    if (c_in.size() < std::size_t(m + n + 1)) throw InputError("insufficient germ length");
    std::vector<cplx> c(c_in.begin(), c_in.begin() + (m + n + 1));
    double cnorm = 0.0, cmax = 0.0;
    for (const auto& v : c) {
        cnorm += std::norm(v);
        cmax = std::max(cmax, std::abs(v));
    }
    cnorm = std::sqrt(cnorm);
    PadeResult res;
    if (cmax == 0.0) {
        res.num = {cplx{}};
        res.den = {cplx{1.0}};
        return res;
    }
    const double ts = tol * cnorm;
    auto toeplitz = [&](int rows, int cols) {
        Mat Z = Mat::Zero(rows, cols);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols && j <= i; ++j) Z(i, j) = c[std::size_t(i - j)];
        }
        return Z;
    };
    Vec a, b;
    Mat Z;
    while (true) {
        if (n == 0) {
            a = Vec(m + 1);
            for (int i = 0; i <= m; ++i) a(i) = c[std::size_t(i)];
            b = Vec::Ones(1);
            break;
        }
        Z = toeplitz(m + n + 1, n + 1);
        const Mat C = Z.block(m + 1, 0, n, n + 1);
        Eigen::JacobiSVD<Mat> svd(C, Eigen::ComputeFullV);
        const auto& s = svd.singularValues();
        int rho = 0;
        for (int i = 0; i < s.size(); ++i) {
            if (s(i) > ts) ++rho;
        }
        if (rho == n) {
            b = svd.matrixV().col(n);
            // Reweighting improves the null vector when b has small entries.
            Eigen::VectorXd dvals(n + 1);
            for (int i = 0; i <= n; ++i) dvals(i) = std::abs(b(i)) + std::sqrt(std::numeric_limits<double>::epsilon());
            const Mat CD = C * dvals.cast<cplx>().asDiagonal();
            Eigen::HouseholderQR<Mat> qr(CD.adjoint());
            const Mat Q = qr.householderQ();
            b = dvals.cast<cplx>().asDiagonal() * Q.col(n);
            b /= b.norm();
            a = Z.block(0, 0, m + 1, n + 1) * b;
            break;
        }
        m -= n - rho;
        n = rho;
    }
    std::vector<cplx> av(a.data(), a.data() + a.size()), bv(b.data(), b.data() + b.size());
    if (bv.size() > 1) {
        std::size_t lam = 0;
        while (lam < bv.size() && std::abs(bv[lam]) <= tol) ++lam;
        bv.erase(bv.begin(), bv.begin() + std::ptrdiff_t(std::min(lam, bv.size() - 1)));
        av.erase(av.begin(), av.begin() + std::ptrdiff_t(std::min(lam, av.size())));
        while (bv.size() > 1 && std::abs(bv.back()) <= tol) bv.pop_back();
    }
    while (av.size() > 1 && std::abs(av.back()) <= ts) av.pop_back();
    if (av.empty()) av = {cplx{}};
    const cplx b0 = bv[0];
    for (auto& v : av) v /= b0;
    for (auto& v : bv) v /= b0;
    res.num = av;
    res.den = bv;
    res.poles = poly_degree(bv) > 0 ? poly_roots(bv) : std::vector<cplx>{};
    return res;
}

std::vector<DetectedPole> detect_pade(const std::vector<cplx>& germ, double match_tol) {
    if (germ.size() < 16) throw InputError("insufficient germ length");
    // Rescale t so the coefficients neither grow nor decay.
    std::vector<double> ks, ls;
    for (std::size_t k = 0; k < germ.size(); ++k) {
        if (std::abs(germ[k]) > 0.0) {
            ks.push_back(double(k));
            ls.push_back(std::log(std::abs(germ[k])));
        }
    }
    if (ks.size() < 2) return {};
    double mk = 0, ml = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        mk += ks[i];
        ml += ls[i];
    }
    mk /= double(ks.size());
    ml /= double(ks.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        sxy += (ks[i] - mk) * (ls[i] - ml);
        sxx += (ks[i] - mk) * (ks[i] - mk);
    }
    const double R = std::clamp(std::exp(-sxy / sxx), 1e-8, 1e8);
    std::vector<cplx> s(germ.size());
    double rk = 1.0;
    for (std::size_t k = 0; k < germ.size(); ++k) {
        s[k] = germ[k] * rk;
        rk *= R;
    }
    const int n = int(germ.size() - 1) / 2;
    const auto p1 = robust_pade(s, n, n);
    const auto p2 = robust_pade(s, n - 2, n - 2);
    const Poly dden = poly_derivative(p1.den);
    std::vector<DetectedPole> out;
    for (const auto& q : p1.poles) {
        DetectedPole d;
        d.location = q * R;
        const cplx db = poly_eval(dden, q);
        d.weight = db == cplx{} ? std::numeric_limits<double>::infinity() : std::abs(poly_eval(p1.num, q) / db) * R;
        for (const auto& q2 : p2.poles) {
            if (std::abs(q2 - q) * R <= match_tol * std::max(1.0, std::abs(q) * R)) d.stable = true;
        }
        out.push_back(d);
    }
    std::sort(out.begin(), out.end(),
              [](const DetectedPole& a, const DetectedPole& b) { return std::abs(a.location) < std::abs(b.location); });
    return out;
}

std::vector<DetectedPole> detect_endpoint_blowup(const std::vector<RayScan>& rays) {
    std::vector<DetectedPole> out;
    const std::size_t n = rays.size();
    if (n < 3) return out;
    std::vector<double> K(n);
    for (std::size_t i = 0; i < n; ++i) K[i] = rays[i].grid.bound.K_exp;
    std::vector<double> sorted = K;
    std::nth_element(sorted.begin(), sorted.begin() + std::ptrdiff_t(n / 2), sorted.end());
    const double med = sorted[n / 2];
    for (std::size_t i = 0; i < n; ++i) {
        const double l = K[(i + n - 1) % n], r = K[(i + 1) % n];
        if (K[i] >= l && K[i] >= r && K[i] > 3.0 * med && K[i] > 0.0) {
            const auto& g = rays[i].grid;
            int best = 0;
            for (int j = 0; j <= g.M(); ++j) {
                if (std::abs(g.phi_total[std::size_t(j)]) > std::abs(g.phi_total[std::size_t(best)])) best = j;
            }
            out.push_back({std::polar(g.r(best), rays[i].alpha), K[i], true});
        }
    }
    return out;
}

std::vector<SingularityMatch> match_singularities(const std::vector<CriticalPathRecord>& pred,
                                                  const std::vector<DetectedPole>& det, double tol) {
    std::vector<SingularityMatch> out;
    for (std::size_t d = 0; d < det.size(); ++d) {
        if (!det[d].stable) continue;
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double dist = std::abs(pred[i].xi - det[d].location);
            if (dist < best) {
                best = dist;
                bi = i;
            }
        }
        if (best <= tol) out.push_back({bi, d, best});
    }
    return out;
}

nlohmann::json to_json(const SingularityReport& r) {
    nlohmann::json j;
    j["predicted"] = nlohmann::json::array();
    for (const auto& p : r.predicted) {
        j["predicted"].push_back({{"xi", complex_to_json(p.xi)},
                                  {"terminal", complex_to_json(p.terminal)},
                                  {"is_trajectory", p.is_trajectory},
                                  {"depth", p.depth},
                                  {"resolved", p.status == PathStatus::resolved},
                                  {"note", p.note}});
    }
    j["detected"] = nlohmann::json::array();
    for (const auto& d : r.detected) {
        j["detected"].push_back(
            {{"pole", complex_to_json(d.location)}, {"weight", d.weight}, {"stable", d.stable}});
    }
    j["matches"] = nlohmann::json::array();
    for (const auto& m : r.matches) {
        j["matches"].push_back({{"predicted", m.predicted}, {"detected", m.detected}, {"distance", m.distance}});
    }
    return j;
}

cplx TaylorDisc::operator()(cplx t) const {
    const cplx z = t - center;
    cplx s{};
    for (std::size_t k = coeffs.size(); k-- > 0;) s = s * z + coeffs[k];
    return s;
}

double TaylorDisc::tail(cplx t) const {
    if (coeffs.empty()) return 0.0;
    return std::abs(coeffs.back()) * std::pow(std::abs(t - center), double(coeffs.size() - 1));
}

TaylorDisc taylor_disc(const TFunction& f, cplx center, double rho, int n, double noise) {
    if (n < 4 || !(rho > 0.0)) throw InputError("taylor_disc: need n >= 4 and rho > 0");
    std::vector<cplx> ts(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) ts[std::size_t(j)] = center + std::polar(rho, 2.0 * std::numbers::pi * j / n);
    std::vector<cplx> vals;
    vals.reserve(ts.size());
    for (const cplx t : ts) vals.push_back(f(t));
    std::vector<cplx> scaled(static_cast<std::size_t>(n));
    double scale = 0.0;
    for (int k = 0; k < n; ++k) {
        cplx s{};
        for (int j = 0; j < n; ++j) {
            s += vals[std::size_t(j)] * std::polar(1.0, -2.0 * std::numbers::pi * double((j * k) % n) / n);
        }
        scaled[std::size_t(k)] = s / double(n);
        scale = std::max(scale, std::abs(scaled[std::size_t(k)]));
    }
    // only the lower half is trusted: the upper half carries the aliased tail
    int keep = 1;
    for (int k = 0; k < n / 2; ++k) {
        if (std::abs(scaled[std::size_t(k)]) > noise * scale) keep = k + 1;
    }
    TaylorDisc d;
    d.center = center;
    d.rho = rho;
    d.coeffs.resize(std::size_t(keep));
    for (int k = 0; k < keep; ++k) d.coeffs[std::size_t(k)] = scaled[std::size_t(k)] / std::pow(rho, k);
    return d;
}

TFunction principal_star(const Potential& p, cplx x0, cplx y0, int K, int M) {
    return [p, x0, y0, K, M](cplx t) {
        if (std::abs(t) == 0.0) return borel_germ(p, x0, y0, 1)[0];
        const auto path = geodesic_ray(p, x0, y0, std::arg(t), std::abs(t), M);
        ContinueOptions o;
        o.self_check = false;
        return continue_phi(p, path, K, o).phi_total.back();
    };
}

}  // namespace exwkb
