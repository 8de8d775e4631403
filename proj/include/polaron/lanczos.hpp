#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "polaron/fock.hpp"

namespace polaron {

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

struct LanczosOptions {
  double tol = 1e-12;             // on ||H psi - E psi|| / (|E| + 1)
  std::size_t max_iter = 20000;   // total matrix-vector products
  std::size_t krylov_dim = 60;    // basis size per restart cycle
  std::uint64_t seed = 12345;     // start vector
  unsigned threads = 1;
};

struct EigenPair {
  double E = 0.0;
  std::vector<double> psi;  // unit norm, sign fixed so psi[0] >= 0
  double gap = 0.0;         // second Ritz value minus first; +inf for dim 1
  std::size_t iterations = 0;
  double residual = 0.0;    // ||H psi - E psi||
  bool converged = false;
};

/// Lowest eigenpair by restarted Lanczos with full reorthogonalization.
/// Throws SolverError when max_iter is exhausted.
EigenPair ground_state(const SparseOperator& H, const LanczosOptions& options = {});

struct KrylovOptions {
  double tol = 1e-10;           // relative, per step-doubling comparison
  std::size_t max_dim = 60;
  unsigned threads = 1;
  std::size_t max_steps = 100000;
};

struct KrylovResult {
  std::vector<double> v;
  double error_bound = 0.0;  // accumulated absolute error estimate
  std::size_t steps = 0;
  std::size_t matvecs = 0;
};

/// exp(-tau (H - shift)) v by adaptive Krylov substeps. Each substep is
/// accepted when one full step and two half steps agree to tol.
KrylovResult propagate(const SparseOperator& H, std::span<const double> v, double tau, double shift,
                       const KrylovOptions& options = {});

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

}  // namespace polaron
