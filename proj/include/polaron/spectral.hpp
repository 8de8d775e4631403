#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "polaron/fock.hpp"
#include "polaron/lanczos.hpp"
#include "polaron/model.hpp"

namespace polaron {

struct SpectralResult {
  Vec3 P{0.0, 0.0, 0.0};
  double E = 0.0;
  std::vector<double> psi;
  double overlap = 0.0;  // |<Omega, psi_P>|
  double gap = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;
  bool degenerate = false;  // gap < 10 * residual: overlap and mass unreliable
};

struct EnergyCurve {
  std::vector<SpectralResult> points;
  bool minimum_at_zero = true;  // false when some E(P) < E(0) - tol
  double worst_violation = 0.0;  // max(E(0) - E(P), 0)
  std::vector<std::string> warnings;
};

struct MassResult {
  int axis = 0;
  std::vector<double> h;
  std::vector<double> raw;  // central second differences
  double extrapolated = 0.0;
  double error = 0.0;
  bool precision_warning = false;
  std::vector<std::string> warnings;
};

struct EssentialEdge {
  Vec3 P{0.0, 0.0, 0.0};
  std::vector<double> thresholds;  // E^(1) .. E^(n_max)
  double E_ess = 0.0;
  int argmin_n = 0;
  std::vector<std::size_t> argmin_modes;
  bool boundary_argmin = false;
  std::size_t solves = 0;
  std::vector<std::string> warnings;
};

enum class Boundary { OneSided, Relaxed, TwoSided };
const char* to_string(Boundary b);

/// Two-sided pinning via the fiber integral over P with phi_P = phi_hat(P) Omega,
/// phi_hat(P) = exp(-|P|^2 / (2 width^2)), tensor Gauss-Legendre on [-R, R]^d.
struct TwoSidedSpec {
  double T = 1.0;
  double phi_width = 1.0;
  double radius = 4.0;
  std::size_t nodes = 24;
};

struct CharFnResult {
  Vec3 k{0.0, 0.0, 0.0};
  double t = 0.0;
  Boundary boundary = Boundary::OneSided;
  double T = 0.0;
  double value = 1.0;
  double error_bound = 0.0;
};

struct SigmaScaling {
  Vec3 khat{1.0, 0.0, 0.0};
  double t = 1.0;
  Boundary boundary = Boundary::OneSided;
  std::vector<double> eps;
  std::vector<double> G;
  std::vector<double> sigma2;
  std::vector<double> usable_eps;  // entries with finite, positive G
  double extrapolated = 0.0;
  double error = 0.0;
  bool converged = true;
  bool gap_warning = false;  // t * gap / eps^2 < 30 for some eps
  std::vector<std::string> warnings;
};

struct SolverSettings {
  int N_max = 2;
  LanczosOptions lanczos;
  KrylovOptions krylov;
  unsigned threads = 1;  // distinct P solves run concurrently
  std::size_t basis_limit = FockBasis::default_limit;
};

class SpectralSolver {
 public:
  SpectralSolver(ModelSpec model, SolverSettings settings);

  const ModelSpec& model() const { return model_; }
  const FockBasis& basis() const { return basis_; }
  const SolverSettings& settings() const { return settings_; }

  SparseOperator hamiltonian(const Vec3& P) const;
  SpectralResult solve(const Vec3& P) const;
  /// Ground state at P = 0, computed once.
  const SpectralResult& ground_zero() const;

  EnergyCurve energy_curve(const std::vector<Vec3>& P_list, double tol = 1e-10) const;
  MassResult effective_mass(double h, int levels, int axis = 0) const;
  EssentialEdge essential_edge(const Vec3& P, int n_max) const;

  CharFnResult char_fn(const Vec3& k, double t, Boundary boundary, const TwoSidedSpec& two_sided = {}) const;
  SigmaScaling sigma_from_scaling(const Vec3& khat, double t, const std::vector<double>& eps_list,
                                  Boundary boundary = Boundary::OneSided,
                                  const TwoSidedSpec& two_sided = {}) const;

  /// Lower bound -alpha * sum dk^d g^2 / omega for every fiber ground energy.
  double energy_lower_bound() const;

 private:
  ModelSpec model_;
  SolverSettings settings_;
  FockBasis basis_;
  mutable std::once_flag zero_once_;
  mutable std::optional<SpectralResult> zero_;
};

/// -sum dk^d g^2 / (omega + k^2/2), the second-order coefficient of E(0; alpha).
double perturbative_slope(const ModelSpec& model);

}  // namespace polaron
