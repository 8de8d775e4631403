#include "polaron/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "polaron/numerics.hpp"
#include "polaron/parallel.hpp"

namespace polaron {

const char* to_string(Boundary b) {
  switch (b) {
    case Boundary::OneSided:
      return "one-sided";
    case Boundary::Relaxed:
      return "relaxed";
    case Boundary::TwoSided:
      return "two-sided";
  }
  return "?";
}

SpectralSolver::SpectralSolver(ModelSpec model, SolverSettings settings)
    : model_(std::move(model)),
      settings_(settings),
      basis_(FockBasis::enumerate(model_.grid, settings.N_max, settings.basis_limit)) {
  model_.validate();
}

SparseOperator SpectralSolver::hamiltonian(const Vec3& P) const {
  return assemble_fiber_hamiltonian(model_, P, basis_, 1);
}

SpectralResult SpectralSolver::solve(const Vec3& P) const {
  const auto H = hamiltonian(P);
  const auto pair = ground_state(H, settings_.lanczos);
  SpectralResult r;
  r.P = P;
  r.E = pair.E;
  r.overlap = std::abs(pair.psi[0]);
  r.gap = pair.gap;
  r.iterations = pair.iterations;
  r.residual = pair.residual;
  r.degenerate = pair.gap < 10.0 * pair.residual;
  r.psi = pair.psi;
  return r;
}

const SpectralResult& SpectralSolver::ground_zero() const {
  std::call_once(zero_once_, [this] { zero_ = solve({0.0, 0.0, 0.0}); });
  return *zero_;
}

EnergyCurve SpectralSolver::energy_curve(const std::vector<Vec3>& P_list, double tol) const {
  EnergyCurve curve;
  curve.points.resize(P_list.size());
  parallel_for(P_list.size(), settings_.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      curve.points[i] = solve(P_list[i]);
      curve.points[i].psi.clear();
    }
  });
  const double E0 = ground_zero().E;
  for (const auto& p : curve.points) {
    const double violation = E0 - p.E;
    curve.worst_violation = std::max(curve.worst_violation, violation);
    if (violation > tol) {
      curve.minimum_at_zero = false;
      std::ostringstream msg;
      msg.precision(17);
      msg << "E(P) below E(0) by " << violation << " at P = (" << p.P[0] << ", " << p.P[1] << ", " << p.P[2] << ")";
      curve.warnings.push_back(msg.str());
    }
    if (p.degenerate) curve.warnings.push_back("near-degenerate ground state; overlap unreliable");
  }
  return curve;
}

MassResult SpectralSolver::effective_mass(double h, int levels, int axis) const {
  if (!(h > 0.0)) throw ModelError("effective_mass: h must be positive");
  if (levels < 1) throw ModelError("effective_mass: levels must be at least 1");
  if (axis < 0 || axis >= model_.d) throw ModelError("effective_mass: axis outside the model dimension");
  MassResult out;
  out.axis = axis;
  const Vec3 e = axis_vector(axis);
  std::vector<Vec3> points;
  for (int l = 0; l < levels; ++l) {
    const double hl = h / std::pow(2.0, l);
    out.h.push_back(hl);
    points.push_back(hl * e);
    points.push_back(-hl * e);
  }
  std::vector<SpectralResult> res(points.size());
  parallel_for(points.size(), settings_.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) res[i] = solve(points[i]);
  });
  const auto& zero = ground_zero();
  for (int l = 0; l < levels; ++l) {
    const auto& plus = res[2 * static_cast<std::size_t>(l)];
    const auto& minus = res[2 * static_cast<std::size_t>(l) + 1];
    const double hl = out.h[static_cast<std::size_t>(l)];
    out.raw.push_back((plus.E - 2.0 * zero.E + minus.E) / (hl * hl));
    const double floor = 100.0 * std::max({plus.residual, minus.residual, zero.residual});
    if (std::abs(plus.E - zero.E) < floor || std::abs(minus.E - zero.E) < floor) {
      out.precision_warning = true;
      out.warnings.push_back("energy differences at h = " + std::to_string(hl) + " below 100x solver residual");
    }
    if (plus.degenerate || minus.degenerate || zero.degenerate) out.warnings.push_back("near-degenerate ground state");
  }
  const auto ex = richardson_h2(out.raw);
  out.extrapolated = ex.value;
  out.error = levels > 1 ? ex.error : std::abs(out.raw[0]);
  return out;
}

double SpectralSolver::energy_lower_bound() const {
  double s = 0.0;
  const double vol = model_.grid.cell_volume();
  for (const auto& k : model_.grid.modes) {
    const double g = eval_g(model_, k);
    s += vol * g * g / eval_omega(model_, k);
  }
  return -model_.alpha * s;
}

EssentialEdge SpectralSolver::essential_edge(const Vec3& P, int n_max) const {
  if (n_max < 1) throw ModelError("essential_edge: n_max must be at least 1");
  EssentialEdge out;
  out.P = P;
  const auto& grid = model_.grid;
  const std::size_t M = grid.size();
  std::vector<double> omega(M);
  for (std::size_t i = 0; i < M; ++i) omega[i] = eval_omega(model_, grid.modes[i]);
  const double lower = energy_lower_bound();

  std::map<Lattice3, double> cache;
  auto energy_at = [&](const Lattice3& q) {
    auto it = cache.find(q);
    if (it != cache.end()) return it->second;
    const Vec3 Q{P[0] - q[0] * grid.dk, P[1] - q[1] * grid.dk, P[2] - q[2] * grid.dk};
    const double E = solve(Q).E;
    ++out.solves;
    cache.emplace(q, E);
    return E;
  };

  struct Combo {
    double omega_sum;
    Lattice3 q;
    std::vector<std::size_t> modes;
  };
  double best_total = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> current;
  for (int n = 1; n <= n_max; ++n) {
    // Distinct lattice sums of n-mode multisets, keeping the cheapest field energy.
    std::map<Lattice3, Combo> by_sum;
    current.assign(static_cast<std::size_t>(n), 0);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t from) {
      if (pos == static_cast<std::size_t>(n)) {
        Lattice3 q{0, 0, 0};
        double w = 0.0;
        for (auto m : current) {
          for (std::size_t a = 0; a < 3; ++a) q[a] += grid.lattice[m][a];
          w += omega[m];
        }
        auto it = by_sum.find(q);
        if (it == by_sum.end() || w < it->second.omega_sum ||
            (w == it->second.omega_sum && current < it->second.modes))
          by_sum[q] = Combo{w, q, current};
        return;
      }
      for (std::size_t m = from; m < M; ++m) {
        current[pos] = m;
        rec(pos + 1, m);
      }
    };
    rec(0, 0);
    std::vector<Combo> combos;
    combos.reserve(by_sum.size());
    for (auto& [q, c] : by_sum) combos.push_back(std::move(c));
    std::stable_sort(combos.begin(), combos.end(), [](const Combo& a, const Combo& b) {
      if (a.omega_sum != b.omega_sum) return a.omega_sum < b.omega_sum;
      return a.modes < b.modes;
    });
    double best_n = std::numeric_limits<double>::infinity();
    const Combo* arg = nullptr;
    for (const auto& c : combos) {
      if (c.omega_sum + lower >= best_n) break;
      const double total = energy_at(c.q) + c.omega_sum;
      if (total < best_n || (total == best_n && arg && c.modes < arg->modes)) {
        best_n = total;
        arg = &c;
      }
    }
    out.thresholds.push_back(best_n);
    if (best_n < best_total) {
      best_total = best_n;
      out.argmin_n = n;
      out.argmin_modes = arg ? arg->modes : std::vector<std::size_t>{};
    }
  }
  out.E_ess = best_total;
  const double shell = grid.kmax - grid.dk;
  for (auto m : out.argmin_modes)
    if (norm(grid.modes[m]) > shell + 1e-12) out.boundary_argmin = true;
  if (out.boundary_argmin)
    out.warnings.push_back("threshold minimizer uses an outer-shell mode; the grid may not bracket the minimum");
  for (std::size_t i = 1; i < out.thresholds.size(); ++i)
    if (out.thresholds[i] < out.thresholds[i - 1] - 1e-10)
      out.warnings.push_back("thresholds not monotone in n at n = " + std::to_string(i + 1));
  return out;
}

CharFnResult SpectralSolver::char_fn(const Vec3& k, double t, Boundary boundary, const TwoSidedSpec& two) const {
  if (!(t >= 0.0)) throw ModelError("char_fn: t must be nonnegative");
  CharFnResult out;
  out.k = k;
  out.t = t;
  out.boundary = boundary;
  out.T = boundary == Boundary::TwoSided ? two.T : 0.0;
  if (t == 0.0 || norm2(k) == 0.0) return out;

  const auto& zero = ground_zero();
  const double shift = zero.E;
  const std::size_t dim = basis_.size();
  std::vector<double> omega_vec(dim, 0.0);
  omega_vec[0] = 1.0;
  const auto& kopt = settings_.krylov;

  auto vacuum_weight = [&](const Vec3& P, double tau) {
    // <Omega, e^{-tau (H(P) - shift)} Omega> = |e^{-tau/2 (H - shift)} Omega|^2
    const auto r = propagate(hamiltonian(P), omega_vec, 0.5 * tau, shift, kopt);
    const double n = norm(r.v);
    return std::pair{n * n, 2.0 * n * r.error_bound};
  };

  switch (boundary) {
    case Boundary::OneSided: {
      const auto [num, en] = vacuum_weight(k, t);
      const auto [den, ed] = vacuum_weight({0.0, 0.0, 0.0}, t);
      if (!(den > 0.0)) throw ModelError("char_fn: vanishing normalization");
      out.value = num / den;
      out.error_bound = en / den + out.value * ed / den;
      break;
    }
    case Boundary::Relaxed: {
      if (!(zero.overlap > 0.0)) throw ModelError("char_fn: ground state has no vacuum overlap");
      const auto r = propagate(hamiltonian(k), zero.psi, t, shift, kopt);
      out.value = r.v[0] / zero.psi[0];
      out.error_bound = r.error_bound / zero.overlap;
      break;
    }
    case Boundary::TwoSided: {
      const auto rule = gauss_legendre(two.nodes);
      const int d = model_.d;
      std::size_t total = 1;
      for (int a = 0; a < d; ++a) total *= two.nodes;
      std::vector<double> num(total), den(total), err(total);
      parallel_for(total, settings_.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t idx = begin; idx < end; ++idx) {
          std::size_t rem = idx;
          Vec3 P{0.0, 0.0, 0.0};
          double w = 1.0;
          for (int a = 0; a < d; ++a) {
            const std::size_t node = rem % two.nodes;
            rem /= two.nodes;
            P[static_cast<std::size_t>(a)] = two.radius * rule.nodes[node];
            w *= two.radius * rule.weights[node];
          }
          const double phi = std::exp(-norm2(P) / (2.0 * two.phi_width * two.phi_width));
          w *= phi * phi;
          const auto u = propagate(hamiltonian(P), omega_vec, two.T, shift, kopt);
          const auto a = propagate(hamiltonian(P + k), u.v, 0.5 * t, shift, kopt);
          const auto b = propagate(hamiltonian(P), u.v, 0.5 * t, shift, kopt);
          const double na = norm(a.v), nb = norm(b.v);
          num[idx] = w * na * na;
          den[idx] = w * nb * nb;
          err[idx] = w * (2.0 * na * a.error_bound + 2.0 * nb * b.error_bound + 2.0 * (na + nb) * u.error_bound);
        }
      });
      double sn = 0.0, sd = 0.0, se = 0.0;
      for (std::size_t i = 0; i < total; ++i) {
        sn += num[i];
        sd += den[i];
        se += err[i];
      }
      if (!(sd > 0.0)) throw ModelError("char_fn: vanishing two-sided normalization");
      out.value = sn / sd;
      out.error_bound = se / sd * (1.0 + out.value);
      break;
    }
  }
  return out;
}

SigmaScaling SpectralSolver::sigma_from_scaling(const Vec3& khat, double t, const std::vector<double>& eps_list,
                                                Boundary boundary, const TwoSidedSpec& two) const {
  if (eps_list.empty()) throw ModelError("sigma_from_scaling: empty eps list");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) throw ModelError("sigma_from_scaling: eps must be positive");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw ModelError("sigma_from_scaling: eps must decrease");
  }
  if (!(t > 0.0)) throw ModelError("sigma_from_scaling: t must be positive");
  const double k2 = norm2(khat);
  if (!(k2 > 0.0)) throw ModelError("sigma_from_scaling: k must be nonzero");
  SigmaScaling out;
  out.khat = khat;
  out.t = t;
  out.boundary = boundary;
  out.eps = eps_list;
  out.G.resize(eps_list.size());
  out.sigma2.resize(eps_list.size());
  parallel_for(eps_list.size(), settings_.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double eps = eps_list[i];
      out.G[i] = char_fn(eps * khat, t / (eps * eps), boundary, two).value;
    }
  });
  const double gap = ground_zero().gap;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    const double eps = eps_list[i];
    const double G = out.G[i];
    out.sigma2[i] = (G > 0.0 && std::isfinite(G)) ? -2.0 * std::log(G) / (k2 * t) : std::numeric_limits<double>::quiet_NaN();
    if (!(G > std::numeric_limits<double>::min()) || !std::isfinite(G)) {
      out.warnings.push_back("G underflow at eps = " + std::to_string(eps));
      continue;
    }
    if (t * gap / (eps * eps) < 30.0) out.gap_warning = true;
    out.usable_eps.push_back(eps);
    x.push_back(eps * eps);
    y.push_back(out.sigma2[i]);
  }
  if (out.gap_warning)
    out.warnings.push_back("t * gap / eps^2 < 30: excited-state contamination not negligible at the largest eps");
  if (x.empty()) throw ModelError("sigma_from_scaling: no usable eps values");
  const auto ex = neville_to_zero(x, y);
  out.extrapolated = ex.value;
  out.error = ex.error;
  // Trend check: successive raw values must approach each other.
  if (y.size() >= 3) {
    for (std::size_t i = 2; i < y.size(); ++i)
      if (std::abs(y[i] - y[i - 1]) > std::abs(y[i - 1] - y[i - 2]) * (1.0 + 1e-9) + 1e-13) out.converged = false;
  }
  if (!out.converged) out.warnings.push_back("sigma^2 sequence is not contracting in eps");
  return out;
}

double perturbative_slope(const ModelSpec& model) {
  double s = 0.0;
  const double vol = model.grid.cell_volume();
  for (const auto& k : model.grid.modes) {
    const double g = eval_g(model, k);
    s += vol * g * g / (eval_omega(model, k) + 0.5 * norm2(k));
  }
  return -s;
}

}  // namespace polaron
