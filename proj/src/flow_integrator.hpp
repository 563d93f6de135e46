#pragma once

// Adaptive integration of the flow dx/ds = e^{i theta} / (2 y_0(x)) with y_0
// carried in the state. Shared by the spectral flow and trajectory tracing.

#include <array>
#include <cmath>
#include <complex>

#include <boost/numeric/odeint.hpp>

#include "exwkb/potential.hpp"
#include "exwkb/spectral.hpp"

namespace exwkb::detail {

class FlowIntegrator {
public:
    using State = std::array<cplx, 2>;

    FlowIntegrator(const Potential& p, cplx x0, cplx y0, double theta, double rel_tol,
                   double initial_step = 1e-3)
        : p_(p), dir_(std::polar(1.0, theta)), rel_tol_(rel_tol), dt_(initial_step) {
        state_ = {x0, y0};
        dq_num_ = poly_derivative(p.Q(0).num());
        dq_den_ = poly_derivative(p.Q(0).den());
        maybe_switch_chart();
    }

    cplx x() const { return inverted_ ? 1.0 / state_[0] : state_[0]; }
    cplx y0() const { return state_[1]; }
    double s() const { return s_; }
    double suggested_step() const { return dt_; }
    bool inverted() const { return inverted_; }

    /// One accepted step of length at most ds_max. Returns false on stall.
    bool step(double ds_max, double min_step = 1e-12) {
        auto stepper = boost::numeric::odeint::make_controlled<
            boost::numeric::odeint::runge_kutta_dopri5<State>>(rel_tol_ * 1e-3, rel_tol_);
        const bool clipped = dt_ > ds_max;
        double dt = clipped ? ds_max : dt_;
        auto sys = [this](const State& y, State& dy, double) { rhs(y, dy); };
        for (int tries = 0; tries < 200; ++tries) {
            double t = s_;
            State trial = state_;
            const auto res = stepper.try_step(sys, trial, t, dt);
            if (res == boost::numeric::odeint::success) {
                if (!all_finite(trial)) return false;
                last_step_ = t - s_;
                s_ = t;
                state_ = trial;
                // Keep y_0 on the curve y_0^2 = Q_0.
                state_[1] = nearest_y0(p_, x(), state_[1]);
                if (!clipped || dt > dt_) dt_ = dt;
                maybe_switch_chart();
                return true;
            }
            if (dt < min_step) return false;
        }
        return false;
    }

    double last_step() const { return last_step_; }

private:
    static bool all_finite(const State& y) {
        for (const auto& v : y) {
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        }
        return true;
    }

    void rhs(const State& y, State& dy) const {
        const cplx x = inverted_ ? 1.0 / y[0] : y[0];
        const cplx xdot = dir_ / (2.0 * y[1]);
        const cplx num = poly_eval(p_.Q(0).num(), x);
        const cplx den = poly_eval(p_.Q(0).den(), x);
        const cplx dq = (poly_eval(dq_num_, x) * den - num * poly_eval(dq_den_, x)) / (den * den);
        dy[0] = inverted_ ? -y[0] * y[0] * xdot : xdot;
        dy[1] = dq / (2.0 * y[1]) * xdot;
    }

    void maybe_switch_chart() {
        if (!inverted_ && std::abs(state_[0]) > 1e6) {
            inverted_ = true;
            state_[0] = 1.0 / state_[0];
        } else if (inverted_ && std::abs(state_[0]) > 1e-5) {
            inverted_ = false;
            state_[0] = 1.0 / state_[0];
        }
    }

    const Potential& p_;
    cplx dir_;
    double rel_tol_;
    double dt_;
    double s_ = 0.0;
    double last_step_ = 0.0;
    bool inverted_ = false;
    State state_{};
    Poly dq_num_;
    Poly dq_den_;
};

}  // namespace exwkb::detail
