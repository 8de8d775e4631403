#include "polaron/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <gsl/gsl_sf_expint.h>

#include "polaron/numerics.hpp"
#include "polaron/rng.hpp"

namespace polaron {

namespace {

constexpr double kQuadRel = 1e-8;
constexpr double kQuadAbs = 1e-12;

double froehlich_prefactor() { return 1.0 / (std::numbers::sqrt2 * std::numbers::pi); }

double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

// Grid-preserving symmetries: axis permutations and sign flips of the first d axes.
std::vector<Vec3> symmetry_images(const Vec3& k, int d) {
  std::vector<int> perm(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::vector<Vec3> out;
  do {
    for (int signs = 0; signs < (1 << d); ++signs) {
      Vec3 img{0.0, 0.0, 0.0};
      for (int i = 0; i < d; ++i) {
        const double v = k[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        img[static_cast<std::size_t>(i)] = (signs >> i) & 1 ? -v : v;
      }
      out.push_back(img);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

}  // namespace

DispersionSpec DispersionSpec::constant(double c0) {
  DispersionSpec s;
  s.kind = Kind::Constant;
  s.c0 = c0;
  return s;
}

DispersionSpec DispersionSpec::massive_quadratic(double c0, double a) {
  DispersionSpec s;
  s.kind = Kind::MassiveQuadratic;
  s.c0 = c0;
  s.a = a;
  return s;
}

DispersionSpec DispersionSpec::tabulated(std::vector<double> k, std::vector<double> omega) {
  DispersionSpec s;
  s.kind = Kind::Tabulated;
  s.table_k = std::move(k);
  s.table_omega = std::move(omega);
  s.c0 = s.table_omega.empty() ? 0.0 : *std::min_element(s.table_omega.begin(), s.table_omega.end());
  return s;
}

double DispersionSpec::at(double kabs) const {
  switch (kind) {
    case Kind::Constant:
      return c0;
    case Kind::MassiveQuadratic:
      return c0 + a * kabs * kabs;
    case Kind::Tabulated: {
      if (kabs <= table_k.front()) return table_omega.front();
      if (kabs >= table_k.back()) return table_omega.back();
      const auto it = std::upper_bound(table_k.begin(), table_k.end(), kabs);
      const auto i = static_cast<std::size_t>(it - table_k.begin());
      const double s = (kabs - table_k[i - 1]) / (table_k[i] - table_k[i - 1]);
      return table_omega[i - 1] + s * (table_omega[i] - table_omega[i - 1]);
    }
  }
  return c0;
}

void DispersionSpec::validate() const {
  switch (kind) {
    case Kind::Constant:
      if (!(c0 > 0.0) || !std::isfinite(c0)) throw ModelError("dispersion.c0 must be positive and finite");
      break;
    case Kind::MassiveQuadratic:
      if (!(c0 > 0.0) || !std::isfinite(c0)) throw ModelError("dispersion.c0 must be positive and finite");
      if (!(a >= 0.0) || !std::isfinite(a)) throw ModelError("dispersion.a must be nonnegative and finite");
      break;
    case Kind::Tabulated:
      if (table_k.size() < 2 || table_k.size() != table_omega.size())
        throw ModelError("dispersion table needs at least two (k, omega) pairs of equal length");
      for (std::size_t i = 0; i < table_k.size(); ++i) {
        if (!std::isfinite(table_k[i]) || !std::isfinite(table_omega[i]))
          throw ModelError("dispersion table contains non-finite entries");
        if (i > 0 && !(table_k[i] > table_k[i - 1]))
          throw ModelError("dispersion table k values must be strictly increasing");
      }
      break;
  }
}

FormFactorSpec FormFactorSpec::gaussian(double g0, double width) {
  FormFactorSpec s;
  s.kind = Kind::Gaussian;
  s.g0 = g0;
  s.width = width;
  return s;
}

FormFactorSpec FormFactorSpec::froehlich_sharp(double kappa) {
  FormFactorSpec s;
  s.kind = Kind::FroehlichSharpCutoff;
  s.kappa = kappa;
  return s;
}

FormFactorSpec FormFactorSpec::froehlich_exp(double kappa) {
  FormFactorSpec s;
  s.kind = Kind::FroehlichExpCutoff;
  s.kappa = kappa;
  return s;
}

double FormFactorSpec::at(double kabs) const {
  switch (kind) {
    case Kind::Gaussian:
      return g0 * std::exp(-kabs * kabs / (2.0 * width * width));
    case Kind::FroehlichSharpCutoff:
      if (!(kabs > 0.0)) throw ModelError("froehlich form factor is singular at k = 0");
      return kabs <= kappa ? froehlich_prefactor() / kabs : 0.0;
    case Kind::FroehlichExpCutoff:
      if (!(kabs > 0.0)) throw ModelError("froehlich form factor is singular at k = 0");
      return std::exp(-kabs / (2.0 * kappa)) * froehlich_prefactor() / kabs;
  }
  return 0.0;
}

void FormFactorSpec::validate() const {
  switch (kind) {
    case Kind::Gaussian:
      if (!std::isfinite(g0)) throw ModelError("form_factor.g0 must be finite");
      if (!(width > 0.0) || !std::isfinite(width)) throw ModelError("form_factor.width must be positive and finite");
      break;
    case Kind::FroehlichSharpCutoff:
    case Kind::FroehlichExpCutoff:
      if (!(kappa > 0.0)) throw ModelError("form_factor.kappa must be positive");
      break;
  }
}

KGridSpec KGridSpec::build(int d, double dk, double kmax) {
  if (d < 1 || d > 3) throw ModelError("dimension must be 1, 2 or 3");
  if (!(dk > 0.0) || !std::isfinite(dk)) throw ModelError("grid.dk must be positive and finite");
  if (!(kmax >= dk) || !std::isfinite(kmax)) throw ModelError("grid.kmax must be finite and at least grid.dk");
  KGridSpec g;
  g.d = d;
  g.dk = dk;
  g.kmax = kmax;
  const int nmax = static_cast<int>(std::floor(kmax / dk * (1.0 + 1e-12)));
  // Integer test |n|^2 <= (kmax/dk)^2, with a relative slack for kmax on a shell.
  const double rmax2 = (kmax / dk) * (kmax / dk) * (1.0 + 1e-12);
  const int lim1 = d >= 2 ? nmax : 0;
  const int lim2 = d >= 3 ? nmax : 0;
  for (int a = -nmax; a <= nmax; ++a)
    for (int b = -lim1; b <= lim1; ++b)
      for (int c = -lim2; c <= lim2; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        if (static_cast<double>(a * a + b * b + c * c) > rmax2) continue;
        g.lattice.push_back({a, b, c});
        g.modes.push_back({a * dk, b * dk, c * dk});
      }
  return g;
}

std::size_t KGridSpec::find(const Lattice3& n) const {
  const auto it = std::lower_bound(lattice.begin(), lattice.end(), n);
  if (it == lattice.end() || *it != n) return npos;
  return static_cast<std::size_t>(it - lattice.begin());
}

ModelSpec ModelSpec::make(int d, DispersionSpec dispersion, FormFactorSpec form_factor, double alpha, double dk,
                          double kmax) {
  ModelSpec m;
  m.d = d;
  m.dispersion = std::move(dispersion);
  m.form_factor = std::move(form_factor);
  m.alpha = alpha;
  m.grid = KGridSpec::build(d, dk, kmax);
  m.validate();
  return m;
}

ModelSpec ModelSpec::with_alpha(double new_alpha) const {
  ModelSpec m = *this;
  m.alpha = new_alpha;
  m.validate();
  return m;
}

void ModelSpec::validate() const {
  if (d < 1 || d > 3) throw ModelError("dimension must be 1, 2 or 3");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ModelError("alpha must be nonnegative and finite");
  if (grid.d != d) throw ModelError("grid dimension differs from model dimension");
  dispersion.validate();
  form_factor.validate();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Lattice3& n = grid.lattice[i];
    if (grid.find({-n[0], -n[1], -n[2]}) == KGridSpec::npos) throw ModelError("grid is not symmetric under k -> -k");
  }
}

double eval_omega(const ModelSpec& model, const Vec3& k) { return model.dispersion.at(norm(k)); }

double eval_g(const ModelSpec& model, const Vec3& k) { return model.form_factor.at(norm(k)); }

std::vector<KernelMode> kernel_modes(const ModelSpec& model) {
  std::vector<KernelMode> out;
  const double vol = model.grid.cell_volume();
  for (std::size_t i = 0; i < model.grid.size(); ++i) {
    const Lattice3& n = model.grid.lattice[i];
    // Keep the member of each {k, -k} pair whose first nonzero coordinate is positive.
    const int lead = n[0] != 0 ? n[0] : (n[1] != 0 ? n[1] : n[2]);
    if (lead < 0) continue;
    const Vec3& k = model.grid.modes[i];
    const double g = eval_g(model, k);
    out.push_back({k, 2.0 * vol * g * g, eval_omega(model, k)});
  }
  return out;
}

double eval_W_discrete(const ModelSpec& model, const Vec3& x, double t) {
  const double at = std::abs(t);
  double sum = 0.0;
  for (const auto& m : kernel_modes(model)) sum += m.weight * std::cos(dot(m.k, x)) * std::exp(-m.omega * at);
  return sum;
}

double froehlich_kernel(double r, double t) { return std::exp(-std::abs(t)) / r; }

double smooth_cutoff_kernel(double r, double t, double kappa) {
  if (r == 0.0) return 2.0 / std::numbers::pi * kappa * std::exp(-std::abs(t));
  return 2.0 / std::numbers::pi * std::atan(kappa * r) / r * std::exp(-std::abs(t));
}

KernelValue eval_W_continuum(const ModelSpec& model, const Vec3& x, double t) {
  const double r = norm(x);
  const double at = std::abs(t);
  const auto& ff = model.form_factor;
  if (ff.singular_at_origin() && model.d < 3)
    throw ModelError("froehlich coupling diverges in the continuum for d < 3");
  if (ff.singular_at_origin() && model.dispersion.is_constant()) {
    const double decay = std::exp(-model.dispersion.c0 * at);
    if (ff.kind == FormFactorSpec::Kind::FroehlichSharpCutoff) {
      if (std::isinf(ff.kappa)) {
        if (r == 0.0) throw ModelError("froehlich kernel is singular at x = 0");
        return {decay / r, 0.0};
      }
      if (r == 0.0) return {2.0 / std::numbers::pi * ff.kappa * decay, 0.0};
      return {2.0 / std::numbers::pi * gsl_sf_Si(ff.kappa * r) / r * decay, 0.0};
    }
    if (std::isinf(ff.kappa)) {
      if (r == 0.0) throw ModelError("froehlich kernel is singular at x = 0");
      return {decay / r, 0.0};
    }
    return {smooth_cutoff_kernel(r, 0.0, ff.kappa) * decay, 0.0};
  }

  // Radial reduction of int d^dk |g|^2 e^{ikx} e^{-omega |t|}.
  std::function<double(double)> integrand;
  switch (model.d) {
    case 1:
      integrand = [&](double k) {
        if (k == 0.0 && ff.singular_at_origin()) return 0.0;
        const double g = ff.at(k);
        return 2.0 * g * g * std::cos(k * r) * std::exp(-model.dispersion.at(k) * at);
      };
      break;
    case 2:
      integrand = [&](double k) {
        if (k == 0.0) return 0.0;
        const double g = ff.at(k);
        return 2.0 * std::numbers::pi * k * g * g * std::cyl_bessel_j(0.0, k * r) *
               std::exp(-model.dispersion.at(k) * at);
      };
      break;
    default:
      integrand = [&](double k) {
        if (k == 0.0) {
          if (ff.singular_at_origin()) return 4.0 * std::numbers::pi * froehlich_prefactor() * froehlich_prefactor() *
                                              std::exp(-model.dispersion.at(0.0) * at);
          return 0.0;
        }
        const double g = ff.at(k);
        return 4.0 * std::numbers::pi * k * k * g * g * sinc(k * r) * std::exp(-model.dispersion.at(k) * at);
      };
      break;
  }
  const double upper = ff.kind == FormFactorSpec::Kind::FroehlichSharpCutoff
                           ? ff.kappa
                           : std::numeric_limits<double>::infinity();
  QuadResult q;
  if (std::isinf(upper) && ff.kind == FormFactorSpec::Kind::Gaussian) {
    // Split at a few widths so the oscillating part is resolved before the tail map.
    const double w = ff.width;
    q = integrate_piecewise(integrand, {0.0, 4.0 * w, 8.0 * w, 16.0 * w}, kQuadRel, kQuadAbs);
    const auto tail = integrate_adaptive(integrand, 16.0 * w, upper, kQuadRel, kQuadAbs);
    q.value += tail.value;
    q.error += tail.error;
    q.converged = q.converged && tail.converged;
  } else {
    q = integrate_adaptive(integrand, 0.0, upper, kQuadRel, kQuadAbs);
  }
  if (!q.converged || !std::isfinite(q.value)) {
    std::ostringstream msg;
    msg << "continuum kernel quadrature missed tolerance (achieved abs error " << q.error << ")";
    throw QuadratureError(msg.str(), q.error);
  }
  return {q.value, q.error};
}

double discrete_g_norm2(const ModelSpec& model) {
  double sum = 0.0;
  for (const auto& k : model.grid.modes) {
    const double g = eval_g(model, k);
    sum += g * g;
  }
  return sum * model.grid.cell_volume();
}

bool ConditionReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ConditionCheck& c) { return c.passed; });
}

ConditionReport check_condition_C(const ModelSpec& model, std::size_t samples, std::uint64_t seed) {
  ConditionReport report;
  const auto& grid = model.grid;

  bool g_ok = true;
  bool omega_sym = true;
  double worst_g = 0.0;
  for (const auto& k : grid.modes) {
    const double g = eval_g(model, k);
    const double w = eval_omega(model, k);
    if (!std::isfinite(g)) g_ok = false;
    for (const auto& img : symmetry_images(k, model.d)) {
      worst_g = std::max(worst_g, std::abs(eval_g(model, img) - g));
      if (eval_omega(model, img) != w) omega_sym = false;
    }
  }
  g_ok = g_ok && worst_g == 0.0;
  report.checks.push_back({"form_factor_real_rotation_invariant", g_ok,
                           "max |g(Rk)-g(k)| over grid symmetries = " + std::to_string(worst_g)});

  const double norm2 = discrete_g_norm2(model);
  report.checks.push_back({"form_factor_norm_finite", std::isfinite(norm2),
                           "discrete |g|^2 = " + std::to_string(norm2)});

  double c0 = model.dispersion.at(0.0);
  for (const auto& k : grid.modes) c0 = std::min(c0, eval_omega(model, k));
  report.checks.push_back({"omega_massive", c0 > 0.0, "inf omega over origin and grid = " + std::to_string(c0)});

  report.checks.push_back({"omega_rotation_invariant", omega_sym, "exact under axis permutations and sign flips"});

  Philox4x32 rng(seed);
  std::size_t violations = 0;
  double worst = 0.0;
  const std::size_t m = grid.size();
  for (std::size_t s = 0; s < samples && m > 0; ++s) {
    const auto i = static_cast<std::size_t>(rng.below(m));
    const auto j = static_cast<std::size_t>(rng.below(m));
    const Vec3 sum = grid.modes[i] + grid.modes[j];
    const double excess = eval_omega(model, sum) - eval_omega(model, grid.modes[i]) - eval_omega(model, grid.modes[j]);
    worst = std::max(worst, excess);
    if (excess > 1e-12) ++violations;
  }
  report.checks.push_back({"omega_subadditive", violations == 0,
                           std::to_string(violations) + " violations in " + std::to_string(samples) +
                               " sampled pairs, max excess " + std::to_string(worst)});
  return report;
}

const char* to_string(DispersionSpec::Kind kind) {
  switch (kind) {
    case DispersionSpec::Kind::Constant:
      return "constant";
    case DispersionSpec::Kind::MassiveQuadratic:
      return "massive-quadratic";
    case DispersionSpec::Kind::Tabulated:
      return "tabulated";
  }
  return "?";
}

const char* to_string(FormFactorSpec::Kind kind) {
  switch (kind) {
    case FormFactorSpec::Kind::Gaussian:
      return "gaussian";
    case FormFactorSpec::Kind::FroehlichSharpCutoff:
      return "froehlich-sharp-cutoff";
    case FormFactorSpec::Kind::FroehlichExpCutoff:
      return "froehlich-exp-cutoff";
  }
  return "?";
}

}  // namespace polaron
