#pragma once

#include <functional>
#include <span>
#include <vector>

namespace polaron {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
};

/// Globally adaptive 15/31-point Gauss-Kronrod on [a, b]; b may be +inf.
/// Stops once the summed error estimate is below max(rel_tol*|I|, abs_tol)
/// or after 2^max_depth panels.
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double rel_tol, double abs_tol, unsigned max_depth = 18);

/// Same, split at the given interior breakpoints (sorted, deduplicated internally).
QuadResult integrate_piecewise(const std::function<double(double)>& f, std::vector<double> breakpoints,
                               double rel_tol, double abs_tol, unsigned max_depth = 18);

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Golub-Welsch).
GaussRule gauss_legendre(std::size_t n);

struct Extrapolation {
  double value;
  double error;  // difference between the two highest orders
};

/// Polynomial (Neville) extrapolation of y(x) to x = 0 using all points.
Extrapolation neville_to_zero(std::span<const double> x, std::span<const double> y);

/// Richardson table for a quantity with error expansion in powers of h^2,
/// given values at h, h/2, h/4, ...
Extrapolation richardson_h2(std::span<const double> values);

}  // namespace polaron
