#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "exwkb/hbar_series.hpp"
#include "exwkb/jet.hpp"
#include "json.hpp"

namespace exwkb {

// Polynomials are stored with ascending complex coefficients.
using Poly = std::vector<cplx>;

cplx poly_eval(const Poly& p, cplx x);
Poly poly_derivative(const Poly& p);
Poly poly_mul(const Poly& a, const Poly& b);
Poly poly_sub(const Poly& a, const Poly& b);
/// Divides by (x - r) and drops the remainder.
Poly poly_deflate(const Poly& p, cplx r);
/// Drops trailing coefficients that vanish relative to the largest one.
Poly poly_trim(const Poly& p, double rel_tol = 0.0);
std::size_t poly_degree(const Poly& p);

/// Roots by companion-matrix eigenvalues followed by one Newton step.
std::vector<cplx> poly_roots(const Poly& p);

struct RootCluster {
    cplx location;
    int multiplicity = 1;
};

/// Groups numerically coincident roots (distance below tol * max(1, |r|)).
std::vector<RootCluster> cluster_roots(const std::vector<cplx>& roots, double tol = 1e-6);

/// Roots of p grouped into multiple roots; the tolerance for an m-fold root
/// scales like eps^{1/m} and each cluster is checked against the local
/// Taylor expansion of p.
std::vector<RootCluster> root_clusters(const Poly& p);

class RationalFn {
public:
    RationalFn() : num_{cplx{}}, den_{cplx{1.0}} {}
    RationalFn(Poly num, Poly den);
    static RationalFn constant(cplx c) { return RationalFn({c}, {cplx{1.0}}); }

    const Poly& num() const { return num_; }
    const Poly& den() const { return den_; }
    bool is_zero() const;

    cplx operator()(cplx x) const { return poly_eval(num_, x) / poly_eval(den_, x); }

    template <class T>
    Jet<T> on_jet(const Jet<T>& x) const {
        return polynomial_on_jet(num_, x) / polynomial_on_jet(den_, x);
    }

private:
    Poly num_;
    Poly den_;
};

/// Q(x, hbar) = sum_k Q_k(x) hbar^k with rational Q_k.
class Potential {
public:
    explicit Potential(std::vector<RationalFn> q);

    /// Parses {"Q": [{"num": [...], "den": [...]}, ...]}.
    static Potential from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    std::size_t hbar_degree() const { return q_.size() - 1; }
    const RationalFn& Q(std::size_t k) const;
    const std::vector<RationalFn>& coefficients() const { return q_; }

    cplx Q0(cplx x) const { return q_[0](x); }
    cplx evaluate(cplx x, cplx hbar) const;

    /// Finite zeros and poles of Q_0 with multiplicities.
    const std::vector<RootCluster>& zeros() const { return zeros_; }
    const std::vector<RootCluster>& poles() const { return poles_; }

    /// Finite zeros of any order and finite simple poles of Q_0.
    std::vector<cplx> transition_points() const;
    /// Finite zeros and poles of odd order (ramification points of the cover).
    std::vector<cplx> branch_points() const;
    /// Finite poles of order >= 2.
    std::vector<cplx> infinite_critical_points() const;
    /// All finite critical points.
    std::vector<cplx> critical_locations() const;

    /// Pole order of Q_0 at infinity as a quadratic differential (negative: zero).
    int infinity_pole_order() const;

private:
    std::vector<RationalFn> q_;
    std::vector<RootCluster> zeros_;
    std::vector<RootCluster> poles_;
};

enum class CriticalKind { zero, pole };

struct CriticalPoint {
    bool at_infinity = false;
    cplx location{};
    CriticalKind kind = CriticalKind::zero;
    int order = 1;
    bool even = false;
    std::vector<std::string> labels;

    bool has_label(const std::string& l) const;
};

nlohmann::json to_json(const CriticalPoint& cp);

/// All zeros and poles of phi_0 = Q_0 dx^2, including the point at infinity.
std::vector<CriticalPoint> classify(const Potential& p);

/// Quadratic residue at an even-order pole; 0 for odd-order poles.
cplx quadratic_residue(const Potential& p, const CriticalPoint& cp);

struct SimpleComplete {
    bool simple = false;
    bool complete = false;
};
SimpleComplete is_simple_complete(const Potential& p);

}  // namespace exwkb
