#pragma once

#include <cstddef>
#include <vector>

namespace exwkb {

struct QuadRule {
    std::vector<double> nodes;    // ascending, in [-1, 1]
    std::vector<double> weights;
};

/// Gauss-Legendre rule on [-1, 1]; n must be one of 8, 16, 20, 32.
const QuadRule& gauss_legendre(std::size_t n);

/// Weights w_0..w_n for integrating samples on the unit-spaced nodes 0..n.
/// Closed Newton-Cotes for n <= 8, otherwise trapezoid with Gregory end
/// corrections using up to `order` points at each end.
const std::vector<double>& uniform_weights(std::size_t n, std::size_t order = 6);

/// Gregory end-correction coefficients c_0..c_{order-1} (added to the
/// trapezoid weights at each end).
const std::vector<double>& gregory_corrections(std::size_t order);

}  // namespace exwkb
