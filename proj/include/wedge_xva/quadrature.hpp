#pragma once

#include <functional>
#include <span>
#include <vector>

namespace wxva {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [-1, 1]; results are memoised per n.
const QuadratureRule& gauss_legendre(int n);

/// Gauss-Legendre rule mapped to [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

/// Composite Gauss-Legendre over consecutive breakpoints, n points per panel.
QuadratureRule composite_gauss_legendre(std::span<const double> breaks, int n);

/// Appends the rule for [a, b] to `rule`.
void append_gauss_legendre(QuadratureRule& rule, int n, double a, double b);

struct AdaptiveResult {
    double value = 0.0;
    double error = 0.0;  // sum of |K15 - G7| over accepted panels
    bool converged = true;
};

/// Adaptive Gauss-Kronrod 7/15 by bisection with an absolute error target.
AdaptiveResult adaptive_gauss_kronrod(const std::function<double(double)>& f, double a, double b,
                                      double abs_tol, int max_depth = 30);

} // namespace wxva
