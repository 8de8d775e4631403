#include "polaron/cltlab.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "polaron/model.hpp"
#include "polaron/numerics.hpp"

namespace polaron {

namespace {

double sphere_area(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    default: return 4.0 * std::numbers::pi;
  }
}

// <psi_P, e^{-t H(P+k)} psi_P> given |P|^2 and |P+k|^2.
double char_factor(const ToyFiberModel& toy, double r2, double rp2, double t) {
  const double delta = toy.theta(rp2) - toy.theta(r2);
  const double c = std::cos(delta), s = std::sin(delta);
  return std::exp(-t * toy.energy(rp2)) * (c * c + std::exp(-t * toy.gap(rp2)) * s * s);
}

// <Phi_P, e^{-T H(P)} e^{-t H(P+k)} e^{-T H(P)} Phi_P> for |P| = r and
// P.k = r |k| c.
double fiber_integrand(const ToyFiberModel& toy, double r, double c, double kk, double t, double T) {
  const double r2 = r * r;
  const double rp2 = std::max(0.0, r2 + 2.0 * r * kk * c + kk * kk);
  const double th = toy.theta(r2);
  const double ct = std::cos(th), st = std::sin(th);
  const double eg = std::exp(-T * toy.gap(r2));
  // e^{-T H} (1, 0) = e^{-T E} (cos th psi - sin th e^{-T gap} psi_perp)
  const double v0 = ct * ct + st * eg * st;
  const double v1 = ct * st - st * eg * ct;
  const double thp = toy.theta(rp2);
  const double cp = std::cos(thp), sp = std::sin(thp);
  const double A = v0 * cp + v1 * sp;
  const double B = -v0 * sp + v1 * cp;
  const double ph = toy.phi(r2);
  return ph * ph * std::exp(-2.0 * T * toy.energy(r2) - t * toy.energy(rp2)) * (A * A + std::exp(-t * toy.gap(rp2)) * B * B);
}

// Integral over R^d of fiber_integrand with the given k magnitude.
QuadResult fiber_integral(const ToyFiberModel& toy, double kk, double t, double T) {
  double qmax = 0.0;
  for (const auto& m : toy.minima) qmax = std::max(qmax, m.Q);
  const double R = qmax + kk + 1.0 + 14.0 * toy.phi_width;
  std::vector<double> bp{0.0, R};
  const double s = 2.0 * T + t;
  for (const auto& m : toy.minima) {
    const double w = s > 0.0 ? std::pow(s * m.a, -1.0 / m.n) : 1.0;
    const double wt = t > 0.0 ? std::pow(t * m.a, -1.0 / m.n) : 1.0;
    for (double centre : {m.Q, std::abs(m.Q - kk), m.Q + kk}) {
      const double width = centre == m.Q ? w : wt;
      bp.push_back(centre);
      for (double j : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
        bp.push_back(centre - j * width);
        bp.push_back(centre + j * width);
      }
    }
  }
  std::vector<double> inside;
  for (double x : bp)
    if (x >= 0.0 && x <= R) inside.push_back(x);

  constexpr double inner_tol = 1e-12;
  auto angular = [&](double r) -> double {
    switch (toy.d) {
      case 1:
        return fiber_integrand(toy, r, 1.0, kk, t, T) + fiber_integrand(toy, r, -1.0, kk, t, T);
      case 2: {
        if (kk == 0.0 || r == 0.0) return 2.0 * std::numbers::pi * fiber_integrand(toy, r, 1.0, kk, t, T);
        const auto q = integrate_adaptive([&](double phi) { return fiber_integrand(toy, r, std::cos(phi), kk, t, T); }, 0.0,
                                          std::numbers::pi, inner_tol, 0.0, 14);
        return 2.0 * q.value;
      }
      default: {
        if (kk == 0.0 || r == 0.0) return 4.0 * std::numbers::pi * fiber_integrand(toy, r, 1.0, kk, t, T);
        const auto q = integrate_adaptive([&](double mu) { return fiber_integrand(toy, r, mu, kk, t, T); }, -1.0, 1.0,
                                          inner_tol, 0.0, 14);
        return 2.0 * std::numbers::pi * q.value;
      }
    }
  };
  auto radial = [&](double r) { return std::pow(r, toy.d - 1) * angular(r); };
  return integrate_piecewise(radial, inside, 1e-11, 0.0, 18);
}

double angular_mean(int d, const std::function<double(double)>& g) {
  switch (d) {
    case 1: return 0.5 * (g(1.0) + g(-1.0));
    case 2: {
      const auto q = integrate_adaptive([&](double phi) { return g(std::cos(phi)); }, 0.0, std::numbers::pi, 1e-13, 0.0, 16);
      return q.value / std::numbers::pi;
    }
    default: {
      const auto q = integrate_adaptive(g, -1.0, 1.0, 1e-13, 0.0, 16);
      return 0.5 * q.value;
    }
  }
}

}  // namespace

void ToyFiberModel::validate() const {
  if (d < 1 || d > 3) throw std::invalid_argument("toy: d must be 1, 2 or 3");
  if (minima.empty()) throw std::invalid_argument("toy: at least one minimum is required");
  for (std::size_t i = 0; i < minima.size(); ++i) {
    const auto& m = minima[i];
    if (!(m.Q >= 0.0) || !std::isfinite(m.Q)) throw std::invalid_argument("toy: minimum radius must be finite and >= 0");
    if (i > 0 && !(m.Q > minima[i - 1].Q)) throw std::invalid_argument("toy: minima must have strictly increasing radii");
    if (m.n < 2) throw std::invalid_argument("toy: local order must be >= 2");
    if (m.Q > 0.0 && m.n % 2 != 0) throw std::invalid_argument("toy: a minimum away from zero needs an even order");
    if (!(m.a > 0.0) || !std::isfinite(m.a)) throw std::invalid_argument("toy: local coefficient must be positive");
    if (!(overlap(m.Q * m.Q) > 1e-12 * phi(m.Q * m.Q) * phi(m.Q * m.Q))) throw std::invalid_argument("toy: boundary overlap vanishes at a minimum");
  }
  if (!(gap0 > 0.0) || !(gap1 >= 0.0)) throw std::invalid_argument("toy: gap must be positive");
  if (!(phi_width > 0.0)) throw std::invalid_argument("toy: phi_width must be positive");
  if (!std::isfinite(theta0) || !std::isfinite(theta1)) throw std::invalid_argument("toy: theta must be finite");
}

double ToyFiberModel::energy(double r2) const {
  double inv = 0.0;
  for (const auto& m : minima) {
    double e;
    if (m.Q == 0.0) {
      e = m.a * std::pow(std::sqrt(r2), m.n);
    } else {
      e = m.a * std::pow((r2 - m.Q * m.Q) / (2.0 * m.Q), m.n);
    }
    if (e == 0.0) return 0.0;
    inv += 1.0 / e;
  }
  return 1.0 / inv;
}

double ToyFiberModel::phi(double r2) const { return std::exp(-0.5 * r2 / (phi_width * phi_width)); }

double ToyFiberModel::overlap(double r2) const {
  const double p = phi(r2) * std::cos(theta(r2));
  return p * p;
}

double ToyFiberModel::curvature(std::size_t l) const {
  const auto& m = minima.at(l);
  return m.n == 2 ? 2.0 * m.a : 0.0;
}

const char* to_string(LimitCase c) {
  switch (c) {
    case LimitCase::OneMinimum: return "one-minimum";
    case LimitCase::CaseA: return "a";
    case LimitCase::CaseB: return "b";
    case LimitCase::CaseC: return "c";
    case LimitCase::OffZero: return "off-zero";
  }
  return "?";
}

const char* to_string(CltVerdict v) {
  switch (v) {
    case CltVerdict::Gaussian: return "gaussian";
    case CltVerdict::NonGaussian: return "non-gaussian";
    case CltVerdict::Degenerate: return "degenerate";
  }
  return "?";
}

LimitCase classify_limit(const ToyFiberModel& toy) {
  toy.validate();
  if (!toy.has_zero_minimum()) return LimitCase::OffZero;
  if (toy.minima.size() == 1) return LimitCase::OneMinimum;
  int n = 0;
  for (std::size_t l = 1; l < toy.minima.size(); ++l) n = std::max(n, toy.minima[l].n);
  const int nd = n * toy.d;
  const int n0 = toy.minima.front().n;
  if (nd > n0) return LimitCase::CaseA;
  if (nd == n0) return LimitCase::CaseB;
  return LimitCase::CaseC;
}

GTValue gT_exact(const ToyFiberModel& toy, double k, double t, double T) {
  toy.validate();
  if (!(T >= 0.0) || !(t >= 0.0)) throw std::invalid_argument("gT_exact: t and T must be >= 0");
  GTValue out;
  if (t == 0.0 || k == 0.0) return out;
  const auto num = fiber_integral(toy, std::abs(k), t, T);
  const auto den = fiber_integral(toy, 0.0, t, T);
  if (!(den.value > std::numeric_limits<double>::min())) {
    out.underflow = true;
    out.value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.value = num.value / den.value;
  out.error = num.error / std::abs(num.value) + den.error / den.value;
  if (!num.converged || !den.converged) throw QuadratureError("gT_exact: quadrature missed its tolerance", out.error);
  return out;
}

PinnedLimitResult gT_limit_formula(const ToyFiberModel& toy, double k, double t) {
  PinnedLimitResult out;
  out.k = k;
  out.t = t;
  out.limit_case = classify_limit(toy);
  const double area = sphere_area(toy.d);
  const auto& zero = toy.minima.front();
  auto zero_term = [&] {
    LimitTerm term;
    term.Q = 0.0;
    term.n = zero.n;
    const double c0 = std::tgamma(static_cast<double>(toy.d) / zero.n) / zero.n *
                      std::pow(zero.a, -static_cast<double>(toy.d) / zero.n) * area;
    term.weight = c0 * toy.overlap(0.0);
    term.value = char_factor(toy, 0.0, k * k, t);
    return term;
  };
  auto ring_term = [&](const ToyMinimum& m) {
    LimitTerm term;
    term.Q = m.Q;
    term.n = m.n;
    const double C = std::pow(m.Q, toy.d - 1) * (2.0 / m.n) * std::tgamma(1.0 / m.n) * std::pow(m.a, -1.0 / m.n);
    term.weight = C * toy.overlap(m.Q * m.Q) * area;
    const double Q2 = m.Q * m.Q;
    term.value = angular_mean(toy.d, [&](double c) { return char_factor(toy, Q2, std::max(0.0, Q2 + 2.0 * m.Q * k * c + k * k), t); });
    return term;
  };

  int n_ring = 0;
  for (const auto& m : toy.minima)
    if (m.Q > 0.0) n_ring = std::max(n_ring, m.n);
  switch (out.limit_case) {
    case LimitCase::OneMinimum:
    case LimitCase::CaseC:
      out.terms.push_back(zero_term());
      break;
    case LimitCase::CaseB:
      out.terms.push_back(zero_term());
      [[fallthrough]];
    case LimitCase::CaseA:
    case LimitCase::OffZero:
      for (const auto& m : toy.minima)
        if (m.Q > 0.0 && m.n == n_ring) out.terms.push_back(ring_term(m));
      break;
  }
  double num = 0.0, den = 0.0;
  for (const auto& term : out.terms) {
    num += term.weight * term.value;
    den += term.weight;
  }
  out.limit = t == 0.0 || k == 0.0 ? 1.0 : num / den;

  // Leading correction exponents in 1/T: second-order Laplace terms of the
  // retained peaks and the relative weight of the dropped ones.
  double rate = std::numeric_limits<double>::infinity();
  const double d = toy.d;
  for (const auto& term : out.terms) rate = std::min(rate, 2.0 / term.n);
  for (const auto& m : toy.minima) {
    const double own = m.Q == 0.0 ? d / m.n : 1.0 / m.n;
    const bool kept = std::any_of(out.terms.begin(), out.terms.end(), [&](const LimitTerm& x) { return x.Q == m.Q; });
    if (kept) continue;
    const double lead = out.terms.front().Q == 0.0 ? d / out.terms.front().n : 1.0 / out.terms.front().n;
    rate = std::min(rate, own - lead);
  }
  out.predicted_rate = rate;
  return out;
}

PinnedLimitResult pinned_limit_ladder(const ToyFiberModel& toy, double k, double t, const std::vector<double>& T_ladder) {
  PinnedLimitResult out = gT_limit_formula(toy, k, t);
  for (double T : T_ladder) {
    const auto g = gT_exact(toy, k, t, T);
    if (g.underflow) continue;
    out.T.push_back(T);
    out.values.push_back(g.value);
    out.rel_error.push_back(std::abs(g.value - out.limit) / std::abs(out.limit));
    out.usable_T.push_back(T);
  }
  const std::size_t n = out.rel_error.size();
  if (n >= 2 && out.rel_error[n - 1] > 0.0 && out.rel_error[n - 2] > 0.0)
    out.empirical_rate = std::log(out.rel_error[n - 2] / out.rel_error[n - 1]) / std::log(out.T[n - 1] / out.T[n - 2]);
  return out;
}

EpsilonLadder epsilon_limit(const ToyFiberModel& toy, std::size_t minimum, double k, double cos_angle, double t,
                            const std::vector<double>& eps_list, double tol) {
  toy.validate();
  if (minimum >= toy.minima.size()) throw std::out_of_range("epsilon_limit: no such minimum");
  const auto& m = toy.minima[minimum];
  if (m.n != 2)
    throw std::domain_error("epsilon_limit: the probed minimum is not quadratic, its curvature vanishes");
  if (eps_list.size() < 2) throw std::invalid_argument("epsilon_limit: need at least two eps values");
  if (std::abs(cos_angle) > 1.0) throw std::invalid_argument("epsilon_limit: |cos_angle| must be <= 1");
  EpsilonLadder out;
  out.minimum = minimum;
  out.cos_angle = cos_angle;
  out.eps = eps_list;
  const double Q2 = m.Q * m.Q;
  std::vector<double> x;
  for (double eps : eps_list) {
    if (!(eps > 0.0)) throw std::invalid_argument("epsilon_limit: eps must be positive");
    const double rp2 = std::max(0.0, Q2 + 2.0 * m.Q * eps * k * cos_angle + eps * eps * k * k);
    out.values.push_back(char_factor(toy, Q2, rp2, t / (eps * eps)));
    x.push_back(m.Q > 0.0 ? eps : eps * eps);
  }
  const auto ex = neville_to_zero(x, out.values);
  out.extrapolated = ex.value;
  out.error = ex.error;
  const double kp = m.Q > 0.0 ? k * cos_angle : k;
  out.target = std::exp(-0.5 * t * toy.curvature(minimum) * kp * kp);
  out.converged = std::abs(out.extrapolated - out.target) <= tol * std::abs(out.target) && out.error <= tol * std::abs(out.target);
  return out;
}

CltClassification clt_classify(const ToyFiberModel& toy, const std::vector<double>& k_list, double t,
                               const std::vector<double>& eps_ladder) {
  if (k_list.empty()) throw std::invalid_argument("clt_classify: empty k list");
  if (eps_ladder.size() < 2) throw std::invalid_argument("clt_classify: need at least two eps values");
  CltClassification out;
  out.k = k_list;
  out.limit_case = classify_limit(toy);
  for (double k : k_list) {
    std::vector<double> x, y;
    bool ring = false;
    for (double eps : eps_ladder) {
      const auto lim = gT_limit_formula(toy, eps * k, t / (eps * eps));
      for (const auto& term : lim.terms) ring = ring || term.Q > 0.0;
      y.push_back(-std::log(lim.limit));
    }
    for (double eps : eps_ladder) x.push_back(ring ? eps : eps * eps);
    out.minus_log_G.push_back(neville_to_zero(x, y).value);
  }
  double sxy = 0.0, sxx = 0.0, ymax = 0.0;
  for (std::size_t i = 0; i < k_list.size(); ++i) {
    const double xi = k_list[i] * k_list[i] * t;
    sxy += xi * out.minus_log_G[i];
    sxx += xi * xi;
    ymax = std::max(ymax, std::abs(out.minus_log_G[i]));
  }
  if (ymax <= 1e-9) {
    out.verdict = CltVerdict::Degenerate;
    return out;
  }
  const double c = sxy / sxx;
  double res = 0.0;
  for (std::size_t i = 0; i < k_list.size(); ++i)
    res = std::max(res, std::abs(out.minus_log_G[i] - c * k_list[i] * k_list[i] * t));
  out.residual = res / ymax;
  if (out.residual < 1e-6) {
    out.verdict = CltVerdict::Gaussian;
    out.sigma2 = 2.0 * c;
  } else {
    out.verdict = CltVerdict::NonGaussian;
  }
  return out;
}

}  // namespace polaron
