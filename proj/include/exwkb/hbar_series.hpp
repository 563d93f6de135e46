#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "json.hpp"

namespace exwkb {

using cplx = std::complex<double>;

/// Truncated power series a_0 + a_1 hbar + ... + a_N hbar^N.
class HbarSeries {
public:
    HbarSeries() : coeffs_{cplx{}} {}
    explicit HbarSeries(std::vector<cplx> coeffs);

    std::size_t order() const { return coeffs_.size() - 1; }
    const std::vector<cplx>& coeffs() const { return coeffs_; }
    const cplx& operator[](std::size_t k) const { return coeffs_[k]; }

    cplx evaluate(cplx hbar) const;
    HbarSeries truncated(std::size_t order) const;

private:
    std::vector<cplx> coeffs_;
};

/// Truncated t-series b_0 + b_1 t + ... ; a TSeries obtained from an order-N
/// HbarSeries holds N coefficients and reports order() == N.
class TSeries {
public:
    TSeries() = default;
    explicit TSeries(std::vector<cplx> coeffs);

    std::size_t order() const { return coeffs_.size(); }
    const std::vector<cplx>& coeffs() const { return coeffs_; }
    const cplx& operator[](std::size_t k) const { return coeffs_[k]; }

    cplx evaluate(cplx t) const;

private:
    std::vector<cplx> coeffs_;
};

HbarSeries operator+(const HbarSeries& f, const HbarSeries& g);
HbarSeries operator-(const HbarSeries& f, const HbarSeries& g);
HbarSeries operator*(const HbarSeries& f, const HbarSeries& g);
HbarSeries operator*(cplx s, const HbarSeries& f);
TSeries operator+(const TSeries& f, const TSeries& g);
TSeries operator*(cplx s, const TSeries& f);

/// exp of a series, including its constant term.
HbarSeries exp(const HbarSeries& f);

/// b_k = a_{k+1} / (k+1)!; the constant term is dropped.
TSeries borel_transform(const HbarSeries& f);

/// Formal inverse of borel_transform: a_{k+1} = b_k (k+1)!, with a_0 supplied.
HbarSeries formal_laplace(const TSeries& phi, cplx a0 = {});

/// Convolution in t, truncated to the common window:
/// t^a * t^b = a! b! / (a+b+1)! t^{a+b+1}.
TSeries convolve_truncated(const TSeries& f, const TSeries& g);

struct FactorialFit {
    double C = 0.0;
    double M = 0.0;
    double residual = 0.0;  // rms of the log-linear fit
};

/// Least-squares fit of log(|a_k| / k!) = log C + k log M over nonzero a_k.
FactorialFit factorial_type_estimate(const HbarSeries& f);

void to_json(nlohmann::json& j, const HbarSeries& f);
void from_json(const nlohmann::json& j, HbarSeries& f);
void to_json(nlohmann::json& j, const TSeries& f);
void from_json(const nlohmann::json& j, TSeries& f);

nlohmann::json complex_to_json(cplx z);
cplx complex_from_json(const nlohmann::json& j);

}  // namespace exwkb
