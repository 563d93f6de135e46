#pragma once

#include <complex>

#include "exwkb/potential.hpp"

namespace testing {

using exwkb::cplx;

inline exwkb::Potential poly_potential(std::initializer_list<std::initializer_list<double>> qs) {
    std::vector<exwkb::RationalFn> q;
    for (const auto& c : qs) {
        exwkb::Poly num;
        for (double v : c) num.emplace_back(v);
        q.emplace_back(num, exwkb::Poly{cplx{1.0}});
    }
    return exwkb::Potential(q);
}

inline exwkb::Potential airy() { return poly_potential({{0.0, 1.0}}); }
inline exwkb::Potential weber() { return poly_potential({{-1.0, 0.0, 1.0}}); }
inline exwkb::Potential constant() { return poly_potential({{1.0}}); }

}  // namespace testing
