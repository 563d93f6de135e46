#pragma once

#include <string>
#include <vector>

#include "exwkb/borel_engine.hpp"
#include "exwkb/potential.hpp"
#include "json.hpp"

namespace exwkb {

enum class Side { none, left, right };
std::string to_string(Side s);

struct ResummedValue {
    cplx hbar{};
    cplx value{};
    double alpha = 0.0;
    Side lateral = Side::none;
    double tail_bound = 0.0;  // truncation estimate of the Laplace integral(s)
    cplx derivative{};        // resum_wkb only: psi' at the end of the path
};

/// Integral of phi_total(r) e^{-r e^{i alpha}/hbar} e^{i alpha} dr over [0, tau]
/// with the exponential tail bound. Requires Re(e^{i alpha}/hbar) > K_exp.
ResummedValue laplace_ray(const BorelGrid& g, cplx hbar);

struct OptimalTruncation {
    cplx value{};
    int order = 0;          // index of the last included term
    double smallest = 0.0;  // |f_{k*} hbar^{k*}|
};

/// Partial sum of sum_{k>=1} f[k-1] hbar^k up to the smallest term.
OptimalTruncation optimal_truncation(const std::vector<cplx>& f, cplx hbar);

struct ResumOptions {
    int K = 16;
    int M = 512;
    double tau = 4.0;
    int nodes = 8;  // Gauss-Legendre nodes per polyline segment: 8, 16, 20 or 32
};

/// psi along the polyline, normalised to psi = 1 at the first vertex:
/// a_0 e^{-S/hbar} exp(-int (Lambda_0 + 2 y_0 f_alpha) dx), with f_alpha
/// resummed on a fresh grid at every quadrature node. Errors when alpha is a
/// Stokes phase at a node.
std::vector<ResummedValue> resum_wkb(const Potential& p, const std::vector<cplx>& vertices, cplx y0_start,
                                     double alpha, const std::vector<cplx>& hbars, const ResumOptions& opt = {});

struct LateralOptions {
    int K = 16;
    int M = 512;
    double tau = 0.0;     // 0: max(4, 3 |xi|) from the nearest on-ray singularity
    double delta = 0.15;  // rotation of the lateral rays
};

/// Central charges of predicted singularities on the ray of phase alpha within radius.
std::vector<cplx> on_ray_singularities(const Potential& p, const SpectralPoint& sp, double alpha, double radius,
                                       double phase_tol = 1e-6);

/// Lateral resummation of f at (x, y0) past the given on-ray singularities.
/// With none, this is laplace_ray on the ray itself. Otherwise the ray is
/// rotated by +delta (left) or -delta (right), which is the diverted contour
/// up to Cauchy's theorem; a predicted singularity inside the swept sector is
/// an error.
ResummedValue lateral_resum(const Potential& p, cplx x, cplx y0, double alpha, Side side, cplx hbar,
                            const std::vector<cplx>& singularities, const LateralOptions& opt = {});

struct JumpSample {
    cplx hbar{};
    cplx jump{};  // f^L - f^R
    double tail_bound = 0.0;
};

struct JumpReport {
    double alpha = 0.0;
    std::vector<JumpSample> samples;
    double exponent = 0.0;  // s in log|jump| = a + beta log|hbar| - s / |hbar|
    double power = 0.0;     // beta
    double predicted = 0.0; // |xi| of the nearest on-ray singularity
};

struct JumpOptions {
    LateralOptions lateral{};
    double arc_fraction = 0.9;  // arc radius relative to |xi|
    int arc_nodes = 32;
    int arc_M = 256;
};

/// f^L - f^R at hbar = |hbar| e^{i alpha} for each magnitude, computed as an arc
/// integral inside |xi| plus the two rotated rays beyond it (no cancellation
/// between O(1) lateral values).
std::vector<JumpSample> lateral_jumps(const Potential& p, cplx x, cplx y0, double alpha,
                                      const std::vector<double>& hbar_abs, const JumpOptions& opt = {});

/// Fits the exponential decay of the lateral jump; needs four samples above their tail bound.
JumpReport jump_fit(const Potential& p, cplx x, cplx y0, double alpha, const std::vector<double>& hbar_abs,
                    const JumpOptions& opt = {});

struct OdeValue {
    cplx value{};
    cplx derivative{};
};

/// hbar^2 psi'' = Q(x, hbar) psi along straight segments through `path`
/// (first entry is the anchor), adaptive Runge-Kutta-Fehlberg 7(8).
OdeValue ode_oracle(const Potential& p, const std::vector<cplx>& path, cplx hbar, OdeValue init,
                    double rel_tol = 1e-12);
OdeValue ode_oracle(const Potential& p, cplx x_anchor, cplx x_eval, cplx hbar, OdeValue init,
                    double rel_tol = 1e-12);

nlohmann::json to_json(const ResummedValue& v);
nlohmann::json to_json(const JumpReport& r);
/// Rows: hbar (re, im), value (re, im), tail.
std::string to_csv(const std::vector<ResummedValue>& values);

}  // namespace exwkb
