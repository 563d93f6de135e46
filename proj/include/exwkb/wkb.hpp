#pragma once

#include <complex>
#include <vector>

#include "exwkb/hbar_series.hpp"
#include "exwkb/jet.hpp"
#include "exwkb/potential.hpp"
#include "exwkb/spectral.hpp"

namespace exwkb {

/// Jets of Q_0..Q_m around x0, each of length len.
template <class T>
std::vector<Jet<T>> potential_jets(const Potential& p, const T& x0, std::size_t len) {
    const Jet<T> x = Jet<T>::variable(x0, len);
    std::vector<Jet<T>> q;
    for (const auto& f : p.coefficients()) q.push_back(f.on_jet(x));
    return q;
}

/// WKB recursion on jets. Q holds jets of equal length L >= N + 1; the
/// returned y_k has length L - k. The constant term of y_0 is the root of
/// Q_0 nearest to y0_hint. The Q_k enter with the sign fixed by the
/// Riccati equation hbar Y' = Y^2 - Q.
template <class T>
std::vector<Jet<T>> wkb_jets(const std::vector<Jet<T>>& Q, const T& y0_hint, std::size_t N) {
    const std::size_t L = Q.at(0).size();
    std::vector<Jet<T>> y;
    y.push_back(sqrt_near(Q[0], y0_hint));
    const Jet<T> inv2y0 = reciprocal(y[0] * T(2));
    for (std::size_t k = 1; k <= N; ++k) {
        const std::size_t len = L - k;
        Jet<T> acc = y[k - 1].derivative().truncated(len);
        for (std::size_t i = 1; i < k; ++i) acc -= (y[i] * y[k - i]).truncated(len);
        if (k < Q.size()) acc += Q[k].truncated(len);
        y.push_back(acc * inv2y0.truncated(len));
    }
    return y;
}

struct WkbCoefficients {
    SpectralPoint base;
    std::vector<cplx> y;  // y_0..y_N at the base point
};

WkbCoefficients wkb_recursion(const Potential& p, const SpectralPoint& sp, int N);
/// Same with an explicit y_0 (the root of Q_0 nearest to y0 is used).
WkbCoefficients wkb_recursion(const Potential& p, cplx x, cplx y0, int N);

/// Recomputes the recursion in the chart x = chart(x~) and returns the largest
/// deviation from the transformation law through order N (relative to
/// max(1, |expected|)). Errors if the chart degenerates within disc_radius.
double transform_check(const Potential& p, const RationalFn& chart, const SpectralPoint& sp, int N,
                       double disc_radius = 1e-2);

/// -(1/4) times the integral of dlog Q_0 along the polyline.
cplx canonical_generator_log(const Potential& p, const std::vector<cplx>& vertices);

/// Lambda_0 = y_1 - Q_0'/(4 Q_0), Lambda_k = y_{k+1}; coefficients of dx.
std::vector<cplx> formal_wkb_differential(const Potential& p, const SpectralPoint& sp, int N);
std::vector<cplx> formal_wkb_differential(const Potential& p, cplx x, cplx y0, int N);

struct RiccatiValues {
    cplx y0;
    cplx w;
    std::vector<cplx> W;  // W_0, W_1, ... (hbar-polynomial coefficients)
    std::vector<cplx> f;  // f[k-1] = f_k for k = 1..N
    std::vector<cplx> y;  // y_0..y_{N+1}
};

/// Coefficients of hbar V f - f = hbar (f^2 + w f + W) with
/// Y = y_0 + hbar y_1 + 2 y_0 hbar f.
class RiccatiData {
public:
    RiccatiData(const Potential& p, int N);

    int order() const { return N_; }
    RiccatiValues at(cplx x, cplx y0) const;
    cplx w(cplx x) const;
    /// omega(t) = sum_k W_{k+1} t^k / k!, the Borel transform of W.
    static cplx omega(const RiccatiValues& v, cplx t);

private:
    Potential p_;
    int N_;
};

RiccatiData riccati_data(const Potential& p, int N);

/// Borel germ b_k = f_{k+1} / k!, k = 0..n-1, at (x, y0).
std::vector<cplx> borel_germ(const Potential& p, cplx x, cplx y0, int n);

struct WkbSolution {
    SpectralPoint base;
    cplx S{};              // integral of lambda along the path
    HbarSeries amplitude;  // exp(-integral of Lambda-hat), truncated
    cplx a0_log{};         // log of the a_0 ratio between the endpoints
};

WkbSolution assemble_solution(const Potential& p, const SigmaPath& path, int N);

/// Y_N^2 - hbar Y_N' - Q at (x, y0) with Y_N truncated after order N.
template <class T>
T schrodinger_residual(const Potential& p, cplx x, cplx y0, int N, const T& hbar) {
    const std::size_t L = std::size_t(N) + 2;
    const auto Q = potential_jets<T>(p, make_scalar<T>(x), L);
    const auto y = wkb_jets<T>(Q, make_scalar<T>(y0), std::size_t(N));
    T Y(0), dY(0), h(1), Qv(0);
    for (int k = 0; k <= N; ++k) {
        Y += y[std::size_t(k)][0] * h;
        dY += y[std::size_t(k)][1] * h;
        h *= hbar;
    }
    h = T(1);
    for (const auto& q : Q) {
        Qv += q[0] * h;
        h *= hbar;
    }
    return Y * Y - hbar * dY - Qv;
}

/// hbar V f - f - hbar (f^2 + w f + W) with f truncated after order N.
template <class T>
T riccati_residual(const Potential& p, cplx x, cplx y0, int N, const T& hbar) {
    const std::size_t L = std::size_t(N) + 3;
    const auto Q = potential_jets<T>(p, make_scalar<T>(x), L);
    const auto y = wkb_jets<T>(Q, make_scalar<T>(y0), std::size_t(N) + 1);
    const Jet<T> inv2y0 = reciprocal(y[0] * T(2));
    T f(0), Vf(0), h = hbar;
    for (int k = 1; k <= N; ++k) {
        const Jet<T> fk = y[std::size_t(k) + 1] * inv2y0.truncated(y[std::size_t(k) + 1].size());
        f += fk[0] * h;
        Vf += fk[1] * inv2y0[0] * h;
        h *= hbar;
    }
    const T q0 = Q[0][0];
    const T w = Q.size() > 1 ? Q[1][0] / (T(2) * q0) : T(0);
    T W = -y[2][0] * inv2y0[0];
    h = hbar;
    for (std::size_t k = 3; k < Q.size(); ++k) {
        W -= Q[k][0] / (T(4) * q0) * h;
        h *= hbar;
    }
    return hbar * Vf - f - hbar * (f * f + w * f + W);
}

}  // namespace exwkb
