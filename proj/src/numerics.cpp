#include "polaron/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace polaron {

namespace {

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel kronrod_panel(const std::function<double(double)>& f, double a, double b) {
  using kronrod = boost::math::quadrature::gauss_kronrod<double, 31>;
  using gauss = boost::math::quadrature::gauss<double, 15>;
  const auto& xk = kronrod::abscissa();
  const auto& wk = kronrod::weights();
  const auto& wg = gauss::weights();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double f0 = f(mid);
  double k = wk[0] * f0;
  double g = wg[0] * f0;
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const double s = f(mid - half * xk[i]) + f(mid + half * xk[i]);
    k += wk[i] * s;
    // Gauss nodes sit at the even positions of the Kronrod abscissa list.
    if (i % 2 == 0) g += wg[i / 2] * s;
  }
  k *= half;
  g *= half;
  const double err = std::max(std::abs(k - g), 50.0 * std::numeric_limits<double>::epsilon() * std::abs(k));
  return {a, b, k, err};
}

}  // namespace

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double rel_tol, double abs_tol, unsigned max_depth) {
  if (a == b) return {0.0, 0.0, true};
  if (std::isinf(b)) {
    if (std::isinf(a)) throw std::invalid_argument("integrate_adaptive: doubly infinite range");
    // x = a + u / (1 - u)
    auto g = [&](double u) {
      if (u >= 1.0) return 0.0;
      const double one_minus = 1.0 - u;
      return f(a + u / one_minus) / (one_minus * one_minus);
    };
    return integrate_adaptive(g, 0.0, 1.0, rel_tol, abs_tol, max_depth);
  }
  const std::size_t max_panels = std::size_t{1} << std::min(max_depth, 16u);
  std::priority_queue<Panel> heap;
  Panel first = kronrod_panel(f, a, b);
  double value = first.value;
  double error = first.error;
  heap.push(first);
  while (error > std::max(rel_tol * std::abs(value), abs_tol) && heap.size() < max_panels) {
    const Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push(worst);
      break;
    }
    const Panel left = kronrod_panel(f, worst.a, mid);
    const Panel right = kronrod_panel(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to drop accumulated rounding from the running updates.
  value = 0.0;
  error = 0.0;
  std::vector<Panel> panels;
  panels.reserve(heap.size());
  while (!heap.empty()) {
    panels.push_back(heap.top());
    heap.pop();
  }
  std::sort(panels.begin(), panels.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
  for (const auto& p : panels) {
    value += p.value;
    error += p.error;
  }
  return {value, error, error <= std::max(rel_tol * std::abs(value), abs_tol)};
}

QuadResult integrate_piecewise(const std::function<double(double)>& f, std::vector<double> breakpoints,
                               double rel_tol, double abs_tol, unsigned max_depth) {
  if (breakpoints.size() < 2) throw std::invalid_argument("integrate_piecewise: need at least two points");
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
  QuadResult total;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const auto piece = integrate_adaptive(f, breakpoints[i], breakpoints[i + 1], rel_tol, abs_tol, max_depth);
    total.value += piece.value;
    total.error += piece.error;
    total.converged = total.converged && piece.converged;
  }
  return total;
}

GaussRule gauss_legendre(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
  GaussRule rule;
  if (n == 1) {
    rule.nodes = {0.0};
    rule.weights = {2.0};
    return rule;
  }
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd sub(static_cast<Eigen::Index>(n - 1));
  for (std::size_t i = 1; i < n; ++i) {
    const double k = static_cast<double>(i);
    sub[static_cast<Eigen::Index>(i - 1)] = k / std::sqrt(4.0 * k * k - 1.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ei = static_cast<Eigen::Index>(i);
    rule.nodes[i] = solver.eigenvalues()[ei];
    const double v0 = solver.eigenvectors()(0, ei);
    rule.weights[i] = 2.0 * v0 * v0;
  }
  // Symmetrize to remove eigensolver noise.
  for (std::size_t i = 0; i < n / 2; ++i) {
    const std::size_t j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

Extrapolation neville_to_zero(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("neville_to_zero: size mismatch");
  const std::size_t n = x.size();
  // p[i] holds the interpolant through points i..i+m evaluated at 0.
  std::vector<double> p(y.begin(), y.end());
  double previous = p[n - 1];
  for (std::size_t m = 1; m < n; ++m) {
    for (std::size_t i = 0; i + m < n; ++i) {
      p[i] = (x[i] * p[i + 1] - x[i + m] * p[i]) / (x[i] - x[i + m]);
    }
    if (m + 1 == n) break;
    previous = p[n - m - 1];
  }
  if (n == 1) return {p[0], std::abs(p[0])};
  return {p[0], std::abs(p[0] - previous)};
}

Extrapolation richardson_h2(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("richardson_h2: no values");
  std::vector<double> row(values.begin(), values.end());
  const std::size_t n = row.size();
  if (n == 1) return {row[0], std::abs(row[0])};
  double previous = row[n - 1];
  double factor = 4.0;
  for (std::size_t m = 1; m < n; ++m) {
    previous = row[n - 1];
    for (std::size_t i = n - 1; i >= m; --i) {
      row[i] = row[i] + (row[i] - row[i - 1]) / (factor - 1.0);
      if (i == m) break;
    }
    factor *= 4.0;
  }
  return {row[n - 1], std::abs(row[n - 1] - previous)};
}

}  // namespace polaron
