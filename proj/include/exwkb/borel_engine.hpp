#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "exwkb/potential.hpp"
#include "exwkb/spectral.hpp"
#include "json.hpp"

namespace exwkb {

struct BoundFit {
    double C = 0.0;      // max |phi_total| over the first 5% of the ray
    double K_exp = 0.0;  // smallest K with |phi_total(r)| <= C e^{K r} at every node
};

/// Samples of phi_(k) and their sum along a geodesic ray gamma_r, r in [0, tau].
struct BorelGrid {
    SigmaPath path;
    double tau = 0.0;
    double alpha = 0.0;
    cplx h{};                               // Z-step between nodes, (tau/M) e^{i alpha}
    std::vector<std::vector<cplx>> orders;  // orders[k][n] = phi_(k)(gamma_{r_n})
    std::vector<cplx> phi_total;
    BoundFit bound;
    double self_check_error = 0.0;  // |order p - order p-2| on the total, absolute

    int M() const { return int(phi_total.size()) - 1; }
    int K() const { return int(orders.size()); }
    double r(int n) const { return tau * n / M(); }
    /// Local Lagrange interpolation of phi_total at r in [0, tau].
    cplx interpolate(double r) const;
    /// Rows: r, re/im of each order, re/im of the total.
    std::string to_csv() const;
};

struct ContinueOptions {
    int gregory_order = 6;
    double self_check_tol = 1e-4;  // relative to max |phi_total|
    bool self_check = true;
};

/// Geodesic ray from (x0, y0): the flow of V for t = tau e^{i alpha} sampled at M + 1 nodes.
SigmaPath geodesic_ray(const Potential& p, cplx x0, cplx y0, double alpha, double tau, int M,
                       const SpectralOptions& opt = {});
SigmaPath geodesic_ray(const Potential& p, const SpectralPoint& sp, double alpha, double tau, int M,
                       const SpectralOptions& opt = {});

/// Successive approximations phi_(0..K-1) of the Borel-transformed Riccati
/// equation along a constant-phase path with uniform Z spacing.
BorelGrid continue_phi(const Potential& p, const SigmaPath& path, int K, const ContinueOptions& opt = {});

/// Exponential envelope of a sampled ray function.
BoundFit bound_fit(const std::vector<cplx>& values, double tau);

/// Motzkin numbers m_0..m_{k_max}.
std::vector<std::uint64_t> motzkin_bound(int k_max);

/// Constants of the a-priori envelope |phi_(k)| <= C (m C)^k r^k / k! e^{L r}.
struct Envelope {
    double C = 1.0;
    double L = 0.0;
    double m = 3.0;
};
Envelope order_envelope(const Potential& p, const SigmaPath& path);
/// Number of grid samples violating the envelope.
int envelope_violations(const BorelGrid& g, const Envelope& e);

enum class PathStatus { resolved, unresolved };

struct CriticalPathRecord {
    SigmaPath path;       // the shooting path (may be empty for chained records)
    cplx terminal{};      // transition point reached
    cplx xi{};            // central charge of the critical path
    bool is_trajectory = false;
    int depth = 0;        // number of saddle chains appended
    PathStatus status = PathStatus::resolved;
    std::string note;
};

struct PredictOptions {
    int depth = 3;
    int max_iterations = 50;
    double tol = 1e-10;
    SpectralOptions spectral{};
};

/// Critical paths from sp with |xi| <= radius, sorted by |xi|.
std::vector<CriticalPathRecord> predict_singularities(const Potential& p, const SpectralPoint& sp, double radius,
                                                      const PredictOptions& opt = {});

struct DetectedPole {
    cplx location{};
    double weight = 0.0;  // |residue| for Pade, blow-up exponent for rays
    bool stable = false;
};

struct PadeResult {
    std::vector<cplx> num;  // ascending
    std::vector<cplx> den;  // ascending, den[0] = 1
    std::vector<cplx> poles;
};

/// Robust (m, n) Pade approximant via SVD rank reduction.
PadeResult robust_pade(const std::vector<cplx>& c, int m, int n, double tol = 1e-14);

/// Stable poles of the (n, n) approximant, n = (len - 1) / 2, checked against n - 2.
std::vector<DetectedPole> detect_pade(const std::vector<cplx>& germ, double match_tol = 1e-3);

struct RayScan {
    double alpha = 0.0;
    BorelGrid grid;
};
/// Rays whose fitted exponent is a local maximum above 3x the median.
std::vector<DetectedPole> detect_endpoint_blowup(const std::vector<RayScan>& rays);

struct SingularityMatch {
    std::size_t predicted = 0;
    std::size_t detected = 0;
    double distance = 0.0;
};

struct SingularityReport {
    std::vector<CriticalPathRecord> predicted;
    std::vector<DetectedPole> detected;
    std::vector<SingularityMatch> matches;
};
/// Pairs each stable detected pole with the nearest prediction within tol.
std::vector<SingularityMatch> match_singularities(const std::vector<CriticalPathRecord>& pred,
                                                  const std::vector<DetectedPole>& det, double tol);
nlohmann::json to_json(const SingularityReport& r);

/// Truncated Taylor expansion of a t-function about `center`, from Cauchy samples on radius rho.
struct TaylorDisc {
    cplx center{};
    double rho = 0.0;
    std::vector<cplx> coeffs;  // trailing coefficients below the noise floor are dropped
    cplx operator()(cplx t) const;
    /// Size of the last retained term at t; a cheap truncation error proxy.
    double tail(cplx t) const;
};

using TFunction = std::function<cplx(cplx)>;

/// n samples of f on |t - center| = rho; coefficients with |a_k| rho^k below
/// noise * max_j |a_j| rho^j past the last significant one are discarded.
TaylorDisc taylor_disc(const TFunction& f, cplx center, double rho, int n = 64, double noise = 1e-11);

/// phi_total(gamma) on the principal star of (x0, y0): each call runs one geodesic ray to t.
TFunction principal_star(const Potential& p, cplx x0, cplx y0, int K, int M);

}  // namespace exwkb
