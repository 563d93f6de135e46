#include "exwkb/hbar_series.hpp"

#include <algorithm>
#include <cmath>

#include "exwkb/errors.hpp"

namespace exwkb {

namespace {

void check_finite(const std::vector<cplx>& c) {
    for (const auto& z : c) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            throw InputError("series coefficient is not finite");
        }
    }
}

}  // namespace

HbarSeries::HbarSeries(std::vector<cplx> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) {
        throw InputError("HbarSeries needs at least the constant coefficient");
    }
    check_finite(coeffs_);
}

cplx HbarSeries::evaluate(cplx hbar) const {
    cplx s{};
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
        s = s * hbar + *it;
    }
    return s;
}

HbarSeries HbarSeries::truncated(std::size_t order) const {
    std::vector<cplx> c(coeffs_.begin(),
                        coeffs_.begin() + std::min(order + 1, coeffs_.size()));
    return HbarSeries(std::move(c));
}

TSeries::TSeries(std::vector<cplx> coeffs) : coeffs_(std::move(coeffs)) {
    check_finite(coeffs_);
}

cplx TSeries::evaluate(cplx t) const {
    cplx s{};
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
        s = s * t + *it;
    }
    return s;
}

HbarSeries operator+(const HbarSeries& f, const HbarSeries& g) {
    const std::size_t n = std::min(f.order(), g.order()) + 1;
    std::vector<cplx> c(n);
    for (std::size_t k = 0; k < n; ++k) c[k] = f[k] + g[k];
    return HbarSeries(std::move(c));
}

HbarSeries operator-(const HbarSeries& f, const HbarSeries& g) {
    return f + cplx(-1.0) * g;
}

HbarSeries operator*(const HbarSeries& f, const HbarSeries& g) {
    const std::size_t n = std::min(f.order(), g.order()) + 1;
    std::vector<cplx> c(n);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i <= k; ++i) c[k] += f[i] * g[k - i];
    }
    return HbarSeries(std::move(c));
}

HbarSeries operator*(cplx s, const HbarSeries& f) {
    std::vector<cplx> c = f.coeffs();
    for (auto& z : c) z *= s;
    return HbarSeries(std::move(c));
}

TSeries operator+(const TSeries& f, const TSeries& g) {
    const std::size_t n = std::min(f.order(), g.order());
    std::vector<cplx> c(n);
    for (std::size_t k = 0; k < n; ++k) c[k] = f[k] + g[k];
    return TSeries(std::move(c));
}

TSeries operator*(cplx s, const TSeries& f) {
    std::vector<cplx> c = f.coeffs();
    for (auto& z : c) z *= s;
    return TSeries(std::move(c));
}

HbarSeries exp(const HbarSeries& f) {
    const std::size_t n = f.order() + 1;
    std::vector<cplx> b(n);
    b[0] = std::exp(f[0]);
    for (std::size_t k = 1; k < n; ++k) {
        cplx s{};
        for (std::size_t j = 1; j <= k; ++j) s += double(j) * f[j] * b[k - j];
        b[k] = s / double(k);
    }
    return HbarSeries(std::move(b));
}

TSeries borel_transform(const HbarSeries& f) {
    if (f.order() < 1) {
        throw InputError("borel_transform needs truncation order >= 1");
    }
    std::vector<cplx> b(f.order());
    double fact = 1.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
        fact *= double(k + 1);
        b[k] = f[k + 1] / fact;
    }
    return TSeries(std::move(b));
}

HbarSeries formal_laplace(const TSeries& phi, cplx a0) {
    std::vector<cplx> a(phi.order() + 1);
    a[0] = a0;
    double fact = 1.0;
    for (std::size_t k = 0; k < phi.order(); ++k) {
        fact *= double(k + 1);
        a[k + 1] = phi[k] * fact;
    }
    return HbarSeries(std::move(a));
}

TSeries convolve_truncated(const TSeries& f, const TSeries& g) {
    if (f.order() != g.order()) {
        throw InputError("convolve_truncated: truncation orders differ");
    }
    const std::size_t n = f.order();
    // a! b! / (a+b+1)! = B(a+1, b+1), built from lgamma to stay finite.
    std::vector<cplx> c(n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; a + b + 1 < n; ++b) {
            const double w = std::exp(std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
                                      std::lgamma(a + b + 2.0));
            c[a + b + 1] += w * f[a] * g[b];
        }
    }
    return TSeries(std::move(c));
}

FactorialFit factorial_type_estimate(const HbarSeries& f) {
    if (f.order() < 4) {
        throw InputError("factorial_type_estimate needs truncation order >= 4");
    }
    std::vector<double> ks, ys;
    for (std::size_t k = 0; k <= f.order(); ++k) {
        const double a = std::abs(f[k]);
        if (a > 0.0) {
            ks.push_back(double(k));
            ys.push_back(std::log(a) - std::lgamma(k + 1.0));
        }
    }
    FactorialFit fit;
    if (ks.empty()) return fit;
    if (ks.size() == 1) {
        fit.C = std::exp(ys[0]);
        return fit;
    }
    const double n = double(ks.size());
    double sk = 0, sy = 0, skk = 0, sky = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        sk += ks[i];
        sy += ys[i];
        skk += ks[i] * ks[i];
        sky += ks[i] * ys[i];
    }
    const double slope = (n * sky - sk * sy) / (n * skk - sk * sk);
    const double icpt = (sy - slope * sk) / n;
    double rss = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        const double r = ys[i] - icpt - slope * ks[i];
        rss += r * r;
    }
    fit.C = std::exp(icpt);
    fit.M = std::exp(slope);
    fit.residual = std::sqrt(rss / n);
    return fit;
}

nlohmann::json complex_to_json(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

cplx complex_from_json(const nlohmann::json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
        return {j[0].get<double>(), j[1].get<double>()};
    }
    throw InputError("expected a complex number as [re, im]");
}

namespace {

nlohmann::json vec_to_json(const std::vector<cplx>& c) {
    auto j = nlohmann::json::array();
    for (const auto& z : c) j.push_back(complex_to_json(z));
    return j;
}

std::vector<cplx> vec_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw InputError("expected an array of [re, im] pairs");
    std::vector<cplx> c;
    for (const auto& e : j) c.push_back(complex_from_json(e));
    return c;
}

}  // namespace

void to_json(nlohmann::json& j, const HbarSeries& f) { j = vec_to_json(f.coeffs()); }
void from_json(const nlohmann::json& j, HbarSeries& f) { f = HbarSeries(vec_from_json(j)); }
void to_json(nlohmann::json& j, const TSeries& f) { j = vec_to_json(f.coeffs()); }
void from_json(const nlohmann::json& j, TSeries& f) { f = TSeries(vec_from_json(j)); }

}  // namespace exwkb
