#pragma once

#include <complex>
#include <string>
#include <vector>

#include "exwkb/errors.hpp"
#include "exwkb/potential.hpp"

namespace exwkb {

/// A point on the spectral cover: y_0 = sheet * sqrt(Q_0(x)), principal root.
struct SpectralPoint {
    cplx x{};
    int sheet = 1;
};

struct SpectralOptions {
    double branch_tol = 1e-9;        // minimal |x - b| to a branch point
    double exclusion_radius = 1e-3;  // minimal |Z|-distance to a transition point
    double rel_tol = 1e-12;          // ODE stepping tolerance
};

/// Discretised path on the cover with continued y_0 and cumulative Z.
struct SigmaPath {
    std::vector<double> s;
    std::vector<cplx> x;
    std::vector<cplx> y0;
    std::vector<int> sheet;
    std::vector<cplx> Z;
    std::vector<double> phase;

    std::size_t size() const { return x.size(); }
    bool empty() const { return x.empty(); }
    SpectralPoint point(std::size_t i) const { return {x[i], sheet[i]}; }
    cplx total_Z() const { return Z.empty() ? cplx{} : Z.back(); }
};

/// Raised when a flow collapses near a transition point.
class FlowError : public NumericalError {
public:
    FlowError(const std::string& what, cplx closest_x, cplx transition_point, double z_distance)
        : NumericalError(what), closest_x(closest_x), transition_point(transition_point),
          z_distance(z_distance) {}

    cplx closest_x;
    cplx transition_point;
    double z_distance;
};

/// Principal square root of Q_0(x).
cplx principal_y0(const Potential& p, cplx x);
/// The root of Q_0(x) closest to `ref`.
cplx nearest_y0(const Potential& p, cplx x, cplx ref);
/// Sheet label of (x, y0) relative to the principal root.
int sheet_label(const Potential& p, cplx x, cplx y0);
/// dQ_0/dx.
cplx q0_derivative(const Potential& p, cplx x);

/// Distance from x to the nearest finite branch point (infinity if none).
double branch_distance(const Potential& p, cplx x);

/// y_0 at a spectral point. Errors within branch_tol of a branch point.
cplx liouville(const Potential& p, const SpectralPoint& sp, double branch_tol = 1e-9);

/// Builds a path through the given base points with y_0 continued from
/// y0_start and Z accumulated chord by chord.
SigmaPath path_from_points(const Potential& p, const std::vector<cplx>& xs, cplx y0_start,
                           double branch_tol = 1e-9);

/// Straight segments between vertices, each split into `samples` chords.
SigmaPath path_from_polyline(const Potential& p, const std::vector<cplx>& vertices, cplx y0_start,
                             int samples = 64, double branch_tol = 1e-9);

/// Integral of sigma = 2 y_0 dx over one chord. y0_b receives the continued value.
cplx chord_Z(const Potential& p, cplx xa, cplx y0a, cplx xb, cplx* y0_b = nullptr);

/// Z(gamma) by composite quadrature over the path's chords.
cplx central_charge(const Potential& p, const SigmaPath& path, double branch_tol = 1e-9);

/// Path composition; b must start at a's endpoint.
SigmaPath concatenate(const SigmaPath& a, const SigmaPath& b);

/// Pointwise sheet flip: y_0 -> -y_0, Z -> -Z.
SigmaPath sheet_flipped(const SigmaPath& path);

/// Z along the straight segment from (x, y0) into the critical point tp,
/// computed with the substitution x = tp + (x - tp) v^2.
cplx z_to_critical(const Potential& p, cplx x, cplx y0, cplx tp);

/// Integrates dx/ds = e^{i arg t} / (2 y_0) for s in [0, |t|], returning
/// n_steps + 1 equally spaced samples; Z at sample k is (k/n_steps) t.
SigmaPath flow_V(const Potential& p, cplx x0, cplx y0, cplx t, int n_steps,
                 const SpectralOptions& opt = {});
SigmaPath flow_V(const Potential& p, const SpectralPoint& sp, cplx t, int n_steps,
                 const SpectralOptions& opt = {});

/// Starting points (x, y_0) of the local trajectories with phase alpha
/// leaving the transition point tp, at |Z| = z0 from it: three legs at a
/// simple zero, one at a simple pole.
struct LegStart {
    cplx x{};
    cplx y0{};
    cplx Z_from_tp{};  // Z from tp to x
};
std::vector<LegStart> leg_starts(const Potential& p, cplx tp, double alpha, double z0 = 1e-3);

/// Straight-segment period Z(a -> b) on the sheet fixed by y0_hint near a.
cplx segment_period(const Potential& p, cplx a, cplx b);

/// Shoots the legs of phase arg(period) from a; returns true if one of them
/// reaches b with total Z equal to the period within rel_tol.
bool verify_saddle(const Potential& p, cplx a, cplx b, cplx period, double rel_tol = 1e-6,
                   const SpectralOptions& opt = {});

/// CSV rows: s, re x, im x, sheet, re Z, im Z.
std::string path_to_csv(const SigmaPath& path);

}  // namespace exwkb
