#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hpfcm {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> points;
    std::vector<double> weights;
    std::size_t size() const { return points.size(); }
};

/// n-point rule, exact for polynomials of degree 2n-1. Rules are cached; the
/// returned reference stays valid for the lifetime of the process.
const GaussRule& gauss_rule(int n);

}  // namespace hpfcm
