#pragma once

#include <string>
#include <vector>

#include "exwkb/potential.hpp"
#include "exwkb/spectral.hpp"
#include "json.hpp"

namespace exwkb {

enum class Termination { hits_transition, enters_pole, max_length, numerical_stall };
std::string to_string(Termination t);

/// Closest approach of a trajectory to one transition point.
struct Approach {
    cplx tp{};
    double dz = 0.0;     // min |Z| from the trajectory to tp
    double miss = 0.0;   // Im(Z_remaining e^{-i alpha}) at that moment (signed)
    bool passed = false; // the trajectory went abreast of tp or hit it
};

struct Trajectory {
    SpectralPoint start;
    double phase = 0.0;
    SigmaPath path;
    Termination termination = Termination::max_length;
    cplx endpoint{};             // transition point or pole reached
    bool at_infinity = false;
    double hit_length = 0.0;     // traversed |Z| up to the transition point
    double miss = 0.0;           // signed transverse Z offset at capture
    double phase_deviation = 0.0;
    bool possibly_divergent = false;
    std::vector<Approach> approaches;
};

struct TraceOptions {
    double max_length = 1e30;  // in |Z|; reaching |x| = escape costs |Z| ~ |x|^{(d+2)/2}
    double capture = 1e-4;     // |Z|-distance that counts as a hit
    double escape = 1e6;       // |x| beyond which the trace enters the pole at infinity
    double pole_radius = 1e-6; // x-distance to a higher-order pole
    double rel_tol = 1e-11;
    int max_steps = 200000;
    std::vector<cplx> ignore;  // transition points not to capture (e.g. the launch point)
};

Trajectory trace(const Potential& p, const SpectralPoint& sp, double alpha, const TraceOptions& opt = {});
Trajectory trace(const Potential& p, cplx x, cplx y0, double alpha, const TraceOptions& opt = {});

enum class Stability { stable, semi_stable, unstable };
std::string to_string(Stability s);

struct CriticalPhase {
    double alpha = 0.0;
    cplx terminal{};
    double length = 0.0;  // |Z| to the terminal point
    Stability stability = Stability::unstable;
    bool unresolved = false;  // bisection did not end on a verified hit
};

struct StokesDiagram {
    SpectralPoint at;
    std::vector<CriticalPhase> critical;
    std::vector<double> regular;  // scanned phases with no hit
};

struct DiagramOptions {
    double bisect_tol = 1e-6;
    double transverse_offset = 1e-3;
    int transverse_points = 5;
    TraceOptions trace{};
};

StokesDiagram stokes_diagram(const Potential& p, const SpectralPoint& sp, int n_phases,
                             const DiagramOptions& opt = {});

struct Leg {
    cplx source{};
    int index = 0;  // 0..2 at a simple zero, 0 at a simple pole
    Trajectory trajectory;
};

/// All local legs with phase alpha from every transition point. Requires simple zeros.
std::vector<Leg> stokes_graph(const Potential& p, double alpha, const TraceOptions& opt = {});

struct Saddle {
    double alpha = 0.0;
    cplx from{};
    cplx to{};
    cplx period{};  // Z along the saddle trajectory
};

/// Saddle trajectories with phase in [alpha_lo, alpha_hi]: straight-segment
/// periods checked by shooting, plus bisection of leg misses over n phases.
std::vector<Saddle> saddle_scan(const Potential& p, double alpha_lo, double alpha_hi, int n,
                                const DiagramOptions& opt = {});

nlohmann::json to_json(const Trajectory& t, bool with_samples = true);
nlohmann::json to_json(const StokesDiagram& d);
nlohmann::json to_json(const std::vector<Leg>& legs);
/// Legs in the x-plane, coloured by termination; transition points as dots.
std::string to_svg(const Potential& p, const std::vector<Leg>& legs, double view_radius = 3.0);

}  // namespace exwkb
