#include "polaron/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "polaron/rng.hpp"

namespace polaron {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

namespace {

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

void scale(double a, std::span<double> x) {
  for (auto& v : x) v *= a;
}

// Two passes of classical Gram-Schmidt against the stored basis.
void reorthogonalize(const std::vector<std::vector<double>>& basis, std::size_t count, std::vector<double>& w) {
  for (int pass = 0; pass < 2; ++pass)
    for (std::size_t i = 0; i < count; ++i) axpy(-dot(basis[i], w), basis[i], w);
}

std::vector<double> random_unit(std::size_t dim, Philox4x32& rng) {
  std::vector<double> v(dim);
  for (auto& x : v) x = rng.normal();
  scale(1.0 / norm(v), v);
  return v;
}

struct Tridiagonal {
  std::vector<double> alpha, beta;  // beta[j] couples j and j + 1

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solve(bool vectors) const {
    const auto n = static_cast<Eigen::Index>(alpha.size());
    Eigen::VectorXd a(n);
    Eigen::VectorXd b(std::max<Eigen::Index>(n - 1, 0));
    for (Eigen::Index i = 0; i < n; ++i) a[i] = alpha[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i + 1 < n; ++i) b[i] = beta[static_cast<std::size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    if (n == 1) {
      Eigen::MatrixXd m(1, 1);
      m(0, 0) = a[0];
      es.compute(m, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    } else {
      es.computeFromTridiagonal(a, b, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    }
    return es;
  }
};

void fix_sign(std::vector<double>& psi) {
  std::size_t lead = 0;
  if (std::abs(psi[0]) < 1e-12) {
    for (std::size_t i = 1; i < psi.size(); ++i)
      if (std::abs(psi[i]) > std::abs(psi[lead]) * (1.0 + 1e-9)) lead = i;
  }
  if (psi[lead] < 0.0) scale(-1.0, psi);
}

}  // namespace

EigenPair ground_state(const SparseOperator& H, const LanczosOptions& options) {
  const std::size_t dim = H.dim;
  if (dim == 0) throw SolverError("empty operator", 0.0);
  Philox4x32 rng(options.seed);
  EigenPair result;
  if (dim == 1) {
    result.E = H.entry(0, 0);
    result.psi = {1.0};
    result.gap = std::numeric_limits<double>::infinity();
    result.converged = true;
    return result;
  }

  const std::size_t m = std::clamp<std::size_t>(options.krylov_dim, 2, dim);
  std::vector<std::vector<double>> V(m, std::vector<double>(dim));
  std::vector<double> w(dim), hv(dim);
  std::vector<double> start = random_unit(dim, rng);
  double best_residual = std::numeric_limits<double>::infinity();

  while (true) {
    V[0] = start;
    Tridiagonal T;
    std::size_t used = 0;
    double theta = 0.0;
    Eigen::VectorXd s;
    for (std::size_t j = 0; j < m; ++j) {
      H.multiply(V[j], w, options.threads);
      ++result.iterations;
      const double a = dot(V[j], w);
      T.alpha.push_back(a);
      axpy(-a, V[j], w);
      if (j > 0) axpy(-T.beta[j - 1], V[j - 1], w);
      reorthogonalize(V, j + 1, w);
      const double b = norm(w);
      used = j + 1;
      auto es = T.solve(true);
      theta = es.eigenvalues()[0];
      s = es.eigenvectors().col(0);
      const double estimate = b * std::abs(s[static_cast<Eigen::Index>(j)]);
      if (used == dim) break;
      if (used >= 2 && estimate <= 0.1 * options.tol * (std::abs(theta) + 1.0)) break;
      if (j + 1 == m || result.iterations >= options.max_iter) break;
      const double scale_ref = std::abs(a) + (j > 0 ? T.beta[j - 1] : 0.0) + 1.0;
      if (b <= 1e-13 * scale_ref) {
        // Invariant subspace: continue with a fresh direction, decoupled in T.
        T.beta.push_back(0.0);
        std::vector<double> fresh = random_unit(dim, rng);
        reorthogonalize(V, j + 1, fresh);
        scale(1.0 / norm(fresh), fresh);
        V[j + 1] = std::move(fresh);
      } else {
        T.beta.push_back(b);
        for (std::size_t i = 0; i < dim; ++i) V[j + 1][i] = w[i] / b;
      }
    }

    std::vector<double> psi(dim, 0.0);
    for (std::size_t j = 0; j < used; ++j) axpy(s[static_cast<Eigen::Index>(j)], V[j], psi);
    scale(1.0 / norm(psi), psi);
    H.multiply(psi, hv, options.threads);
    ++result.iterations;
    const double E = dot(psi, hv);
    axpy(-E, psi, hv);
    const double residual = norm(hv);
    best_residual = std::min(best_residual, residual);

    const auto evals = T.solve(false).eigenvalues();
    const double gap = evals.size() >= 2 ? evals[1] - evals[0] : std::numeric_limits<double>::infinity();

    if (residual <= options.tol * (std::abs(E) + 1.0)) {
      fix_sign(psi);
      result.E = E;
      result.psi = std::move(psi);
      result.gap = gap;
      result.residual = residual;
      result.converged = true;
      return result;
    }
    if (result.iterations >= options.max_iter)
      throw SolverError("Lanczos did not converge within max_iter", best_residual);
    start = std::move(psi);
  }
}

KrylovResult propagate(const SparseOperator& H, std::span<const double> v0, double tau, double shift,
                       const KrylovOptions& options) {
  if (tau < 0.0) throw SolverError("negative propagation time", 0.0);
  const std::size_t dim = H.dim;
  KrylovResult out;
  out.v.assign(v0.begin(), v0.end());
  if (tau == 0.0 || norm(out.v) == 0.0) return out;

  const std::size_t mmax = std::clamp<std::size_t>(options.max_dim, 1, dim);
  std::vector<std::vector<double>> V(mmax + 1, std::vector<double>(dim));
  std::vector<double> w(dim);

  // One Krylov step: returns exp(-h (H - shift)) x, or false when the Krylov
  // space cannot reach tolerance at this h.
  auto step = [&](std::span<const double> x, double h, std::vector<double>& y, double& est) -> bool {
    const double beta0 = norm(x);
    for (std::size_t i = 0; i < dim; ++i) V[0][i] = x[i] / beta0;
    Tridiagonal T;
    for (std::size_t j = 0; j < mmax; ++j) {
      H.multiply(V[j], w, options.threads);
      ++out.matvecs;
      const double a = dot(V[j], w);
      T.alpha.push_back(a - shift);
      axpy(-a, V[j], w);
      if (j > 0) axpy(-T.beta[j - 1], V[j - 1], w);
      reorthogonalize(V, j + 1, w);
      const double b = norm(w);
      const auto es = T.solve(true);
      const auto& U = es.eigenvectors();
      const auto& lam = es.eigenvalues();
      const auto n = static_cast<Eigen::Index>(j + 1);
      Eigen::VectorXd c(n);
      for (Eigen::Index i = 0; i < n; ++i) c[i] = U(0, i) * std::exp(-h * lam[i]);
      const Eigen::VectorXd coef = U * c;  // exp(-h T) e1
      const double last = std::abs(coef[n - 1]);
      const double cnorm = coef.norm();
      const bool invariant = b <= 1e-14 * (std::abs(a) + 1.0) || j + 1 == dim;
      est = beta0 * b * last;
      if (invariant || est <= 0.1 * options.tol * beta0 * cnorm) {
        y.assign(dim, 0.0);
        for (Eigen::Index i = 0; i < n; ++i) axpy(beta0 * coef[i], V[static_cast<std::size_t>(i)], y);
        if (invariant) est = 0.0;
        return true;
      }
      T.beta.push_back(b);
      for (std::size_t i = 0; i < dim; ++i) V[j + 1][i] = w[i] / b;
    }
    return false;
  };

  double remaining = tau;
  double h = tau;
  std::vector<double> full, half, twice;
  while (remaining > 0.0) {
    if (out.steps >= options.max_steps) throw SolverError("Krylov propagation exceeded max_steps", out.error_bound);
    h = std::min(h, remaining);
    double e1 = 0.0, e2 = 0.0, e3 = 0.0;
    bool ok = step(out.v, h, full, e1) && step(out.v, 0.5 * h, half, e2) && step(half, 0.5 * h, twice, e3);
    double diff = 0.0;
    if (ok) {
      for (std::size_t i = 0; i < dim; ++i) diff += (full[i] - twice[i]) * (full[i] - twice[i]);
      diff = std::sqrt(diff);
      ok = diff <= options.tol * norm(twice);
    }
    if (!ok) {
      h *= 0.5;
      if (h < tau * 1e-12) throw SolverError("Krylov step size underflow", out.error_bound);
      continue;
    }
    out.v.swap(twice);
    out.error_bound += diff + e2 + e3;
    remaining -= h;
    if (remaining < tau * 1e-15) remaining = 0.0;
    ++out.steps;
    h *= 2.0;
  }
  return out;
}

}  // namespace polaron
