#include "exwkb/borel_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include <fftw3.h>

#include "exwkb/errors.hpp"
#include "exwkb/quadrature.hpp"
#include "exwkb/wkb.hpp"

namespace exwkb {

namespace {

std::mutex fftw_planner_mutex;

// Power-of-two FFT workspace with cached plans, owned by one continuation.
class FftCache {
public:
    struct Entry {
        std::size_t n = 0;
        fftw_complex* in = nullptr;
        fftw_complex* out = nullptr;
        fftw_plan fwd = nullptr;
        fftw_plan bwd = nullptr;
    };

    ~FftCache() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex);
        for (auto& [n, e] : entries_) {
            fftw_destroy_plan(e.fwd);
            fftw_destroy_plan(e.bwd);
            fftw_free(e.in);
            fftw_free(e.out);
        }
    }

    Entry& get(std::size_t n) {
        auto it = entries_.find(n);
        if (it != entries_.end()) return it->second;
        std::lock_guard<std::mutex> lock(fftw_planner_mutex);
        Entry e;
        e.n = n;
        e.in = fftw_alloc_complex(n);
        e.out = fftw_alloc_complex(n);
        e.fwd = fftw_plan_dft_1d(int(n), e.in, e.out, FFTW_FORWARD, FFTW_ESTIMATE);
        e.bwd = fftw_plan_dft_1d(int(n), e.in, e.out, FFTW_BACKWARD, FFTW_ESTIMATE);
        return entries_.emplace(n, e).first->second;
    }

private:
    std::map<std::size_t, Entry> entries_;
};

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void check_geodesic(const SigmaPath& path) {
    if (path.size() < 2) throw InputError("continue_phi: path needs at least two nodes");
    const std::size_t M = path.size() - 1;
    const cplx h = path.Z[M] / double(M);
    if (std::abs(h) == 0.0) throw InputError("continue_phi: path has zero length");
    const double tol = 1e-8 * (1.0 + std::abs(path.Z[M]));
    for (std::size_t n = 0; n <= M; ++n) {
        if (std::abs(path.Z[n] - double(n) * h) > tol) {
            throw InputError("continue_phi: path must be a constant-phase ray with uniform Z spacing");
        }
    }
}

}  // namespace

SigmaPath geodesic_ray(const Potential& p, cplx x0, cplx y0, double alpha, double tau, int M,
                       const SpectralOptions& opt) {
    if (!(tau > 0.0)) throw InputError("geodesic_ray: tau must be positive");
    return flow_V(p, x0, y0, std::polar(tau, alpha), M, opt);
}

SigmaPath geodesic_ray(const Potential& p, const SpectralPoint& sp, double alpha, double tau, int M,
                       const SpectralOptions& opt) {
    return geodesic_ray(p, sp.x, liouville(p, sp, opt.branch_tol), alpha, tau, M, opt);
}

BorelGrid continue_phi(const Potential& p, const SigmaPath& path, int K, const ContinueOptions& opt) {
    if (K < 1) throw InputError("continue_phi: K must be at least 1");
    check_geodesic(path);
    const std::size_t M = path.size() - 1;
    if (M < 8 * std::size_t(K)) throw InputError("continue_phi: grid must satisfy M >= 8K");
    const std::size_t P = std::size_t(std::max(2, opt.gregory_order));
    const std::size_t P2 = P > 2 ? P - 2 : P;
    const std::size_t R = std::max<std::size_t>(2 * P, 10);  // direct quadrature below R intervals
    const cplx h = path.Z[M] / double(M);
    const std::size_t KK = std::size_t(K);

    // Node data along the ray.
    const RiccatiData rd(p, 1);
    std::vector<cplx> f1(M + 1), w(M + 1);
    std::vector<std::vector<cplx>> Wc(M + 1);
    bool has_omega = false;
    for (std::size_t n = 0; n <= M; ++n) {
        const auto v = rd.at(path.x[n], path.y0[n]);
        f1[n] = v.f[0];
        w[n] = v.w;
        Wc[n] = v.W;
        if (v.W.size() > 1) has_omega = true;
    }
    auto omega = [&](std::size_t c, std::size_t m) {
        if (!has_omega) return cplx{};
        RiccatiValues v;
        v.W = Wc[c];
        return RiccatiData::omega(v, double(m) * h);
    };

    // Quadrature tables.
    std::vector<std::vector<double>> small(R);
    for (std::size_t n = 0; n < R; ++n) small[n] = uniform_weights(n, P);
    auto end_deltas = [](std::size_t order) {
        const auto& g = gregory_corrections(order);
        std::vector<double> d(g.begin(), g.end());
        d[0] -= 0.5;
        return d;
    };
    const std::vector<double> delta = end_deltas(P);
    const std::vector<double> delta2 = end_deltas(P2);
    std::vector<std::vector<double>> small2(R);
    for (std::size_t n = 0; n < R; ++n) {
        small2[n] = n > 8 ? uniform_weights(n, P2) : small[n];
    }

    // Phi rows c..c+R-1 (ring) and diagonals Phi(b - j, b), j < R (band).
    std::vector<std::vector<std::vector<cplx>>> ring(KK, std::vector<std::vector<cplx>>(R, std::vector<cplx>(M + 1)));
    std::vector<std::vector<std::vector<cplx>>> band(KK, std::vector<std::vector<cplx>>(R, std::vector<cplx>(M + 1)));
    std::vector<std::vector<cplx>> T(KK, std::vector<cplx>(M + 1, cplx{}));
    auto Phi_at = [&](std::size_t k, std::size_t c, std::size_t b) -> const cplx& {
        return ring[k][c % R][b];
    };

    // Current row phi_k(c, c + m), m = 0..M-c, and its spectrum.
    std::vector<std::vector<cplx>> row(KK, std::vector<cplx>(M + 1));
    std::vector<std::vector<cplx>> spec(KK);
    std::vector<cplx> conv(M + 1), acc;
    FftCache fft;

    BorelGrid g;
    g.path = path;
    g.tau = std::abs(path.Z[M]);
    g.alpha = std::arg(h);
    g.h = h;
    g.orders.assign(KK, std::vector<cplx>(M + 1));
    std::vector<std::vector<cplx>> alt(KK, std::vector<cplx>(M + 1));

    // Convolution sum_{i+j=k-2} (phi_i * phi_j)(c, c+m) for m = 0..len-1.
    auto convolution = [&](std::size_t k, std::size_t len, std::size_t nfft, const std::vector<double>& dl,
                           const std::vector<std::vector<double>>& sm, std::vector<cplx>& out) {
        out.assign(len, cplx{});
        if (k < 2) return;
        const std::size_t s = k - 2;
        if (len > R) {
            auto& e = fft.get(nfft);
            for (std::size_t q = 0; q < nfft; ++q) {
                cplx a{};
                for (std::size_t i = 0; i <= s; ++i) a += spec[i][q] * spec[s - i][q];
                e.in[q][0] = a.real();
                e.in[q][1] = a.imag();
            }
            fftw_execute(e.bwd);
            const double inv = 1.0 / double(nfft);
            for (std::size_t m = R; m < len; ++m) out[m] = cplx(e.out[m][0], e.out[m][1]) * inv;
            // Gregory end corrections (both ends are symmetric under i <-> j).
            const std::size_t pp = dl.size();
            for (std::size_t m = R; m < len; ++m) {
                cplx corr{};
                for (std::size_t d = 0; d < pp; ++d) {
                    cplx t{};
                    for (std::size_t i = 0; i <= s; ++i) t += row[i][d] * row[s - i][m - d];
                    corr += dl[d] * t;
                }
                out[m] += 2.0 * corr;
            }
        }
        for (std::size_t m = 1; m < std::min(len, R); ++m) {
            const auto& wt = sm[m];
            cplx a{};
            for (std::size_t d = 0; d <= m; ++d) {
                cplx t{};
                for (std::size_t i = 0; i <= s; ++i) t += row[i][d] * row[s - i][m - d];
                a += wt[d] * t;
            }
            out[m] = a;
        }
        for (std::size_t m = 0; m < len; ++m) out[m] *= h;
    };

    // phi_k(c, b) = -h * integral over c' in [c, b] of Phi_k(c', b).
    auto integrate = [&](std::size_t k, std::size_t c, std::size_t b, const std::vector<double>& dl,
                         const std::vector<std::vector<double>>& sm, const cplx* phi_c_override) {
        const std::size_t n = b - c;
        if (n == 0) return cplx{};
        auto Phi = [&](std::size_t cc) {
            if (cc == c && phi_c_override) return *phi_c_override;
            return Phi_at(k, cc, b);
        };
        cplx s{};
        if (n < R) {
            const auto& wt = sm[n];
            for (std::size_t j = 0; j <= n; ++j) s += wt[j] * Phi(c + j);
        } else {
            s = T[k][b];
            if (phi_c_override) s += *phi_c_override - Phi_at(k, c, b);
            for (std::size_t j = 0; j < dl.size(); ++j) s += dl[j] * (Phi(c + j) + band[k][j][b]);
        }
        return -h * s;
    };

    for (std::size_t c = M + 1; c-- > 0;) {
        const std::size_t len = M - c + 1;
        const std::size_t nfft = next_pow2(2 * len);
        for (std::size_t k = 0; k < KK; ++k) {
            // Phi_k(c, b) for b = c..M.
            auto& Phi_row = ring[k][c % R];
            if (k == 0) {
                for (std::size_t m = 0; m < len; ++m) Phi_row[c + m] = cplx{};
            } else {
                convolution(k, len, nfft, delta, small, conv);
                for (std::size_t m = 0; m < len; ++m) {
                    cplx v = conv[m] + w[c] * row[k - 1][m];
                    if (k == 1) v += omega(c, m);
                    Phi_row[c + m] = v;
                }
            }
            for (std::size_t m = 0; m < len; ++m) {
                T[k][c + m] += Phi_row[c + m];
                if (m < R) band[k][m][c + m] = Phi_row[c + m];
            }
            // phi_k(c, b).
            auto& r = row[k];
            for (std::size_t m = 0; m < len; ++m) {
                r[m] = k == 0 ? f1[c + m] : integrate(k, c, c + m, delta, small, nullptr);
            }
            for (std::size_t m = len; m < r.size(); ++m) r[m] = cplx{};
            if (len > R) {
                auto& e = fft.get(nfft);
                for (std::size_t q = 0; q < nfft; ++q) {
                    const cplx v = q < len ? r[q] : cplx{};
                    e.in[q][0] = v.real();
                    e.in[q][1] = v.imag();
                }
                fftw_execute(e.fwd);
                spec[k].resize(nfft);
                for (std::size_t q = 0; q < nfft; ++q) spec[k][q] = cplx(e.out[q][0], e.out[q][1]);
            }
        }
        if (c == 0) {
            for (std::size_t k = 0; k < KK; ++k) g.orders[k] = row[k];
            if (opt.self_check) {
                // Same data with lower-order end corrections at the last row.
                for (std::size_t k = 0; k < KK; ++k) {
                    if (k == 0) {
                        alt[0] = row[0];
                        continue;
                    }
                    std::vector<cplx> conv2;
                    convolution(k, len, nfft, delta2, small2, conv2);
                    for (std::size_t m = 0; m < len; ++m) {
                        cplx v = conv2[m] + w[0] * row[k - 1][m];
                        if (k == 1) v += omega(0, m);
                        alt[k][m] = integrate(k, 0, m, delta2, small2, &v);
                    }
                }
            }
        }
    }

    g.phi_total.assign(M + 1, cplx{});
    for (std::size_t k = 0; k < KK; ++k) {
        for (std::size_t n = 0; n <= M; ++n) g.phi_total[n] += g.orders[k][n];
    }
    for (const auto& o : g.orders) {
        for (const auto& v : o) {
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
                throw NumericalError("continue_phi: non-finite value; the ray may pass a singularity");
            }
        }
    }
    g.bound = bound_fit(g.phi_total, g.tau);
    if (opt.self_check) {
        double err = 0.0, scale = 0.0;
        for (std::size_t n = 0; n <= M; ++n) {
            cplx a{};
            for (std::size_t k = 0; k < KK; ++k) a += alt[k][n];
            err = std::max(err, std::abs(a - g.phi_total[n]));
            scale = std::max(scale, std::abs(g.phi_total[n]));
        }
        g.self_check_error = err;
        if (err > opt.self_check_tol * scale) {
            std::ostringstream os;
            os << "continue_phi: grid too coarse (self-consistency error " << err / std::max(scale, 1e-300)
               << "); increase M";
            throw NumericalError(os.str());
        }
    }
    return g;
}

BoundFit bound_fit(const std::vector<cplx>& values, double tau) {
    BoundFit b;
    if (values.empty()) return b;
    const std::size_t M = values.size() - 1;
    const std::size_t head = std::max<std::size_t>(1, M / 20);
    for (std::size_t n = 0; n <= std::min(head, M); ++n) b.C = std::max(b.C, std::abs(values[n]));
    if (b.C == 0.0) {
        for (const auto& v : values) b.C = std::max(b.C, std::abs(v));
        return b;
    }
    for (std::size_t n = 1; n <= M; ++n) {
        const double a = std::abs(values[n]);
        if (a <= b.C) continue;
        const double r = tau * double(n) / double(M);
        b.K_exp = std::max(b.K_exp, std::log(a / b.C) / r);
    }
    return b;
}

cplx BorelGrid::interpolate(double rr) const {
    const int Mn = M();
    if (Mn < 1) return phi_total.empty() ? cplx{} : phi_total[0];
    if (rr < -1e-12 * tau || rr > tau * (1.0 + 1e-12)) throw InputError("interpolate: r outside the ray");
    const double u = std::clamp(rr / tau * Mn, 0.0, double(Mn));
    const int npts = std::min(Mn + 1, 9);
    int start = int(std::floor(u)) - npts / 2 + 1;
    start = std::clamp(start, 0, Mn + 1 - npts);
    cplx s{};
    for (int i = 0; i < npts; ++i) {
        double l = 1.0;
        for (int j = 0; j < npts; ++j) {
            if (j != i) l *= (u - (start + j)) / double(i - j);
        }
        s += l * phi_total[std::size_t(start + i)];
    }
    return s;
}

std::string BorelGrid::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "r";
    for (int k = 0; k < K(); ++k) os << ",re_phi" << k << ",im_phi" << k;
    os << ",re_total,im_total\n";
    for (int n = 0; n <= M(); ++n) {
        os << r(n);
        for (int k = 0; k < K(); ++k) os << ',' << orders[std::size_t(k)][std::size_t(n)].real() << ','
                                         << orders[std::size_t(k)][std::size_t(n)].imag();
        os << ',' << phi_total[std::size_t(n)].real() << ',' << phi_total[std::size_t(n)].imag() << '\n';
    }
    return os.str();
}

std::vector<std::uint64_t> motzkin_bound(int k_max) {
    if (k_max < 0) throw InputError("motzkin_bound: k_max must be non-negative");
    std::vector<std::uint64_t> m;
    const std::uint64_t lim = std::numeric_limits<std::uint64_t>::max();
    for (int k = 0; k <= k_max; ++k) {
        if (k < 2) {
            m.push_back(1);
            continue;
        }
        std::uint64_t s = m[std::size_t(k - 1)];
        for (int i = 0; i <= k - 2; ++i) {
            const std::uint64_t a = m[std::size_t(i)], b = m[std::size_t(k - 2 - i)];
            if (b != 0 && a > lim / b) throw NumericalError("motzkin_bound: overflow");
            if (s > lim - a * b) throw NumericalError("motzkin_bound: overflow");
            s += a * b;
        }
        m.push_back(s);
    }
    return m;
}

Envelope order_envelope(const Potential& p, const SigmaPath& path) {
    const RiccatiData rd(p, 1);
    double sf = 0.0, sw = 0.0, sW = 0.0;
    for (std::size_t n = 0; n < path.size(); ++n) {
        const auto v = rd.at(path.x[n], path.y0[n]);
        sf = std::max(sf, std::abs(v.f[0]));
        sw = std::max(sw, std::abs(v.w));
        for (std::size_t k = 1; k < v.W.size(); ++k) sW = std::max(sW, std::abs(v.W[k]));
    }
    Envelope e;
    if (sW == 0.0) {
        e.C = std::max({1.0, sf, sw});
        e.L = 0.0;
    } else {
        e.C = 2.0 * std::max({1.0, sf, sw, sW});
        e.L = 1.0;
    }
    return e;
}

int envelope_violations(const BorelGrid& g, const Envelope& e) {
    int bad = 0;
    for (int k = 0; k < g.K(); ++k) {
        for (int n = 0; n <= g.M(); ++n) {
            const double r = g.r(n);
            const double logb = std::log(e.C) + k * std::log(e.m * e.C) + k * std::log(std::max(r, 1e-300)) -
                                std::lgamma(k + 1.0) + e.L * r;
            const double v = std::abs(g.orders[std::size_t(k)][std::size_t(n)]);
            if (v == 0.0) continue;
            // Allow for the quadrature error of the sampled data.
            if (std::log(v) > logb + 1e-9 && v > 1e-13) ++bad;
        }
    }
    return bad;
}

}  // namespace exwkb
