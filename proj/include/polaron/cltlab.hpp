#pragma once
// Synthetic two-level fiber families with prescribed energy landscapes, used
// to test the large-T limits of pinned characteristic functions and the
// diffusive scaling limit.

#include <string>
#include <vector>

namespace polaron {

struct ToyMinimum {
  double Q = 0.0;  // radius of the minimum set
  int n = 2;       // local order, E_r(Q + R) ~ a R^n
  double a = 1.0;
};

/// H(P) = E(P) |psi_P><psi_P| + (E(P) + gap(P)) |psi_P^perp><psi_P^perp| on C^2
/// with psi_P = (cos theta, sin theta), theta = theta0 + theta1 |P|^2 and
/// gap = gap0 + gap1 |P|^2. The radial energy is the harmonic blend
/// 1 / sum_l 1/e_l of e_0 = a_0 r^{n_0} (minimum at zero) and
/// e_l = a_l ((r^2 - Q_l^2) / (2 Q_l))^{n_l}. The boundary vector is
/// Phi_P = phi(P) (1, 0) with phi(P) = exp(-|P|^2 / (2 phi_width^2)).
struct ToyFiberModel {
  int d = 1;
  std::vector<ToyMinimum> minima{{0.0, 2, 1.0}};
  double theta0 = 0.3;
  double theta1 = 0.2;
  double gap0 = 1.0;
  double gap1 = 0.0;
  double phi_width = 1.0;

  void validate() const;
  /// E as a function of |P|^2.
  double energy(double r2) const;
  double theta(double r2) const { return theta0 + theta1 * r2; }
  double gap(double r2) const { return gap0 + gap1 * r2; }
  double phi(double r2) const;
  /// |<Phi_P, psi_P>|^2.
  double overlap(double r2) const;
  /// Second radial derivative of E at minimum l (zero when n_l > 2).
  double curvature(std::size_t l) const;
  bool has_zero_minimum() const { return !minima.empty() && minima.front().Q == 0.0; }
};

enum class LimitCase { OneMinimum, CaseA, CaseB, CaseC, OffZero };
const char* to_string(LimitCase c);

/// Exactly one case applies; decided by integer comparison of n d with n_0.
LimitCase classify_limit(const ToyFiberModel& toy);

struct GTValue {
  double value = 1.0;
  double error = 0.0;       // quadrature error estimate (relative)
  bool underflow = false;   // normalization not representable
};

/// Normalized two-sided characteristic function at finite T by P quadrature of
/// the exact two-level fiber expression. Relative tolerance 1e-9.
GTValue gT_exact(const ToyFiberModel& toy, double k, double t, double T);

struct LimitTerm {
  double Q = 0.0;
  int n = 2;
  double weight = 0.0;  // C_l |<Phi, psi>|^2 |S^{d-1}| (or c_0 |<Phi_0, Psi_0>|^2)
  double value = 1.0;   // angular mean of <psi, e^{-tH(P+k)} psi>
};

struct PinnedLimitResult {
  double k = 0.0;
  double t = 0.0;
  LimitCase limit_case = LimitCase::OneMinimum;
  double limit = 1.0;
  std::vector<LimitTerm> terms;
  std::vector<double> T;
  std::vector<double> values;
  std::vector<double> rel_error;   // |G_T - limit| / |limit|
  std::vector<double> usable_T;
  double empirical_rate = 0.0;     // -log2 of the last error ratio
  double predicted_rate = 0.0;     // leading Laplace correction exponent in 1/T
};

/// T -> infinity limit from the local Laplace asymptotics at the minima.
PinnedLimitResult gT_limit_formula(const ToyFiberModel& toy, double k, double t);

/// Limit formula plus gT_exact on the given T ladder.
PinnedLimitResult pinned_limit_ladder(const ToyFiberModel& toy, double k, double t, const std::vector<double>& T_ladder);

struct EpsilonLadder {
  std::size_t minimum = 0;
  double cos_angle = 1.0;  // P-hat . k-hat
  std::vector<double> eps;
  std::vector<double> values;
  double extrapolated = 0.0;
  double error = 0.0;
  double target = 0.0;
  bool converged = false;
};

/// <psi_{Q P}, e^{-(t/eps^2) H(Q P + eps k)} psi_{Q P}> on an eps ladder for the
/// minimum with index `minimum`, extrapolated to eps = 0 (in eps for Q > 0, in
/// eps^2 for Q = 0). Throws std::domain_error unless n = 2 there.
EpsilonLadder epsilon_limit(const ToyFiberModel& toy, std::size_t minimum, double k, double cos_angle, double t,
                            const std::vector<double>& eps_list, double tol = 1e-6);

enum class CltVerdict { Gaussian, NonGaussian, Degenerate };
const char* to_string(CltVerdict v);

struct CltClassification {
  CltVerdict verdict = CltVerdict::Degenerate;
  double sigma2 = 0.0;
  double residual = 0.0;  // max |y - c k^2 t| / max |y|
  std::vector<double> k;
  std::vector<double> minus_log_G;  // extrapolated to eps = 0
  LimitCase limit_case = LimitCase::OneMinimum;
};

/// Fits -ln G_inf(eps k, t / eps^2) -> c k^2 t through the origin.
CltClassification clt_classify(const ToyFiberModel& toy, const std::vector<double>& k_list, double t,
                               const std::vector<double>& eps_ladder);

}  // namespace polaron
