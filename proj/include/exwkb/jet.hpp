#pragma once

// Truncated Taylor jets c_0 + c_1 e + ... + c_{n-1} e^{n-1} in a local
// displacement e = x - x0. Used for forward-mode differentiation of the
// rational potential data to arbitrary order.

#include <algorithm>
#include <complex>
#include <cstddef>
#include <vector>

namespace exwkb {

template <class T>
class Jet {
public:
    Jet() = default;
    explicit Jet(std::size_t n) : c_(n, T(0)) {}
    Jet(std::size_t n, const T& value) : c_(n, T(0)) {
        if (n > 0) c_[0] = value;
    }

    static Jet variable(const T& x0, std::size_t n) {
        Jet j(n, x0);
        if (n > 1) j.c_[1] = T(1);
        return j;
    }

    std::size_t size() const { return c_.size(); }
    T& operator[](std::size_t k) { return c_[k]; }
    const T& operator[](std::size_t k) const { return c_[k]; }
    const T& value() const { return c_[0]; }

    Jet truncated(std::size_t n) const {
        Jet r(std::min(n, size()));
        std::copy_n(c_.begin(), r.size(), r.c_.begin());
        return r;
    }

    /// d/de; the result is one term shorter.
    Jet derivative() const {
        Jet r(size() > 0 ? size() - 1 : 0);
        for (std::size_t k = 0; k < r.size(); ++k) r.c_[k] = c_[k + 1] * T(double(k + 1));
        return r;
    }

    /// k-th derivative at the expansion point.
    T derivative_at(std::size_t k) const {
        T f(1);
        for (std::size_t i = 2; i <= k; ++i) f *= T(double(i));
        return c_[k] * f;
    }

    Jet& operator+=(const Jet& o) {
        resize_min(o);
        for (std::size_t k = 0; k < size(); ++k) c_[k] += o.c_[k];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        resize_min(o);
        for (std::size_t k = 0; k < size(); ++k) c_[k] -= o.c_[k];
        return *this;
    }
    Jet& operator*=(const T& s) {
        for (auto& v : c_) v *= s;
        return *this;
    }
    Jet& operator+=(const T& s) {
        if (!c_.empty()) c_[0] += s;
        return *this;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator*(Jet a, const T& s) { return a *= s; }
    friend Jet operator*(const T& s, Jet a) { return a *= s; }
    friend Jet operator+(Jet a, const T& s) { return a += s; }
    friend Jet operator-(Jet a) { return a *= T(-1); }

    friend Jet operator*(const Jet& a, const Jet& b) {
        const std::size_t n = std::min(a.size(), b.size());
        Jet r(n);
        for (std::size_t k = 0; k < n; ++k) {
            T s(0);
            for (std::size_t i = 0; i <= k; ++i) s += a.c_[i] * b.c_[k - i];
            r.c_[k] = s;
        }
        return r;
    }

    friend Jet reciprocal(const Jet& a) {
        Jet r(a.size());
        if (a.size() == 0) return r;
        const T inv = T(1) / a.c_[0];
        r.c_[0] = inv;
        for (std::size_t k = 1; k < a.size(); ++k) {
            T s(0);
            for (std::size_t i = 1; i <= k; ++i) s += a.c_[i] * r.c_[k - i];
            r.c_[k] = -s * inv;
        }
        return r;
    }

    friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

    /// Square root whose constant term is the root of a_0 nearest to `hint`.
    friend Jet sqrt_near(const Jet& a, const T& hint) {
        using std::abs;
        using std::sqrt;
        Jet r(a.size());
        if (a.size() == 0) return r;
        T s0 = sqrt(a.c_[0]);
        if (abs(s0 - hint) > abs(-s0 - hint)) s0 = -s0;
        r.c_[0] = s0;
        const T inv2 = T(1) / (T(2) * s0);
        for (std::size_t k = 1; k < a.size(); ++k) {
            T s = a.c_[k];
            for (std::size_t i = 1; i < k; ++i) s -= r.c_[i] * r.c_[k - i];
            r.c_[k] = s * inv2;
        }
        return r;
    }

private:
    void resize_min(const Jet& o) {
        if (o.size() < size()) c_.resize(o.size());
    }

    std::vector<T> c_;
};

template <class T>
T make_scalar(const std::complex<double>& z) {
    return T(z.real(), z.imag());
}

/// Horner evaluation of a polynomial with ascending coefficients on a jet.
template <class T>
Jet<T> polynomial_on_jet(const std::vector<std::complex<double>>& coeffs, const Jet<T>& x) {
    Jet<T> r(x.size());
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
        r = r * x;
        r += make_scalar<T>(*it);
    }
    return r;
}

}  // namespace exwkb
