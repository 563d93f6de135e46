#include "exwkb/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "exwkb/errors.hpp"

namespace exwkb {

namespace {

template <unsigned N>
QuadRule make_gauss() {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    QuadRule r;
    // Boost stores the non-negative half; mirror it.
    for (std::size_t i = a.size(); i-- > 0;) {
        if (a[i] == 0.0) continue;
        r.nodes.push_back(-a[i]);
        r.weights.push_back(w[i]);
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        r.nodes.push_back(a[i]);
        r.weights.push_back(w[i]);
    }
    return r;
}

// Solves the small dense system A x = b in long double (partial pivoting).
std::vector<long double> solve(std::vector<std::vector<long double>> a, std::vector<long double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
        }
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const long double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<long double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        long double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

std::vector<double> newton_cotes(std::size_t n) {
    std::vector<std::vector<long double>> a(n + 1, std::vector<long double>(n + 1));
    std::vector<long double> b(n + 1);
    for (std::size_t q = 0; q <= n; ++q) {
        for (std::size_t d = 0; d <= n; ++d) a[q][d] = std::pow((long double)d, (long double)q);
        b[q] = std::pow((long double)n, (long double)(q + 1)) / (long double)(q + 1);
    }
    const auto x = solve(a, b);
    return std::vector<double>(x.begin(), x.end());
}

std::vector<double> compute_gregory(std::size_t p) {
    // Bernoulli numbers B_2, B_4, ..., enough for degree < 16.
    static const long double bern[] = {1.0L / 6, -1.0L / 30, 1.0L / 42, -1.0L / 30,
                                       5.0L / 66, -691.0L / 2730, 7.0L / 6, -3617.0L / 510};
    if (p == 0 || p > 16) throw InputError("Gregory order out of range");
    std::vector<std::vector<long double>> a(p, std::vector<long double>(p));
    std::vector<long double> b(p, 0.0L);
    for (std::size_t q = 0; q < p; ++q) {
        for (std::size_t d = 0; d < p; ++d) {
            a[q][d] = (q == 0) ? 1.0L : std::pow((long double)d, (long double)q);
        }
        if (q % 2 == 1) b[q] = bern[(q + 1) / 2 - 1] / (long double)(q + 1);
    }
    const auto x = solve(a, b);
    return std::vector<double>(x.begin(), x.end());
}

std::mutex cache_mutex;

}  // namespace

const QuadRule& gauss_legendre(std::size_t n) {
    static const QuadRule g8 = make_gauss<8>();
    static const QuadRule g16 = make_gauss<16>();
    static const QuadRule g20 = make_gauss<20>();
    static const QuadRule g32 = make_gauss<32>();
    switch (n) {
        case 8: return g8;
        case 16: return g16;
        case 20: return g20;
        case 32: return g32;
        default: throw InputError("unsupported Gauss-Legendre size");
    }
}

const std::vector<double>& gregory_corrections(std::size_t order) {
    std::lock_guard<std::mutex> lock(cache_mutex);
    static std::map<std::size_t, std::vector<double>> cache;
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, compute_gregory(order)).first;
    return it->second;
}

const std::vector<double>& uniform_weights(std::size_t n, std::size_t order) {
    const std::vector<double>* corr = nullptr;
    std::size_t p = 0;
    if (n > 8) {
        p = std::min(order, (n + 1) / 2);
        corr = &gregory_corrections(p);
    }
    std::lock_guard<std::mutex> lock(cache_mutex);
    static std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> cache;
    const auto key = std::make_pair(n, n <= 8 ? 0 : p);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<double> w;
    if (n == 0) {
        w = {0.0};
    } else if (n <= 8) {
        w = newton_cotes(n);
    } else {
        w.assign(n + 1, 1.0);
        w[0] = w[n] = 0.5;
        for (std::size_t d = 0; d < p; ++d) {
            w[d] += (*corr)[d];
            w[n - d] += (*corr)[d];
        }
    }
    return cache.emplace(key, std::move(w)).first->second;
}

}  // namespace exwkb
