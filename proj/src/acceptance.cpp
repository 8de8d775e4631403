#include "polaron/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <unistd.h>

#include <Eigen/Dense>

#include "polaron/cltlab.hpp"
#include "polaron/commands.hpp"
#include "polaron/config.hpp"
#include "polaron/pathmc.hpp"
#include "polaron/rng.hpp"
#include "polaron/spectral.hpp"

namespace polaron {

namespace {

using io::number;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------- 1

namespace free_model {
constexpr double kEnergyTol = 1e-10;
constexpr double kMassTol = 1e-8;
constexpr double kCharFnTol = 1e-9;
constexpr double kSigmaStderrs = 3.0;
constexpr std::size_t kSweeps = 1'000'000;
}  // namespace free_model

CriterionResult criterion_free(unsigned threads) {
  using namespace free_model;
  CriterionResult r;
  r.id = 1;
  r.name = "free-model exactness";
  r.tolerances = {{"energy_abs", kEnergyTol},
                  {"inverse_mass_abs", kMassTol},
                  {"charfn_rel", kCharFnTol},
                  {"sigma2_stderrs", kSigmaStderrs},
                  {"mc_sweeps", kSweeps}};
  const auto model = ModelSpec::make(3, DispersionSpec::constant(1.0), FormFactorSpec::gaussian(1.0, 1.0), 0.0, 0.5, 1.15);
  SolverSettings s;
  s.N_max = 2;
  s.threads = threads;
  SpectralSolver solver(model, s);

  double worst_E = 0.0;
  for (const Vec3& P : {Vec3{0, 0, 0}, Vec3{0.3, 0, 0}, Vec3{0.5, -0.5, 0}, Vec3{0.2, 0.7, -0.4}, Vec3{1.0, 0.5, 0.25}})
    worst_E = std::max(worst_E, std::abs(solver.solve(P).E - 0.5 * norm2(P)));
  double worst_mass = 0.0;
  for (int axis = 0; axis < 3; ++axis)
    worst_mass = std::max(worst_mass, std::abs(solver.effective_mass(0.125, 3, axis).extrapolated - 1.0));
  double worst_G = 0.0;
  for (double k : {0.3, 0.7, 1.2})
    for (double t : {0.5, 2.0, 8.0}) {
      const double exact = std::exp(-0.5 * k * k * t);
      const double g = solver.char_fn({0.0, k, 0.0}, t, Boundary::OneSided).value;
      worst_G = std::max(worst_G, std::abs(g - exact) / exact);
    }

  PathConfig path;
  path.t = 4.0;
  path.T_minus = 0.0;
  path.T_plus = 0.0;
  path.dt = 0.1;
  path.boundary = PathBoundary::FreeBoth;
  MCConfig mc;
  mc.chains = 4;
  mc.sweeps = kSweeps / mc.chains;
  mc.burn_in = 100;
  mc.seed = 20240601;
  mc.threads = threads;
  mc.k_list = {1.0};
  const auto run = run_mc(model, path, mc);
  const double sigma = run.sigma2.slope.mean;
  const double se = run.sigma2.slope.stderr_;
  const bool sigma_ok = std::abs(sigma - 1.0) <= kSigmaStderrs * se;

  r.measured = {{"modes", model.grid.size()},
                {"basis_size", solver.basis().size()},
                {"max_energy_error", number(worst_E)},
                {"max_inverse_mass_error", number(worst_mass)},
                {"max_charfn_rel_error", number(worst_G)},
                {"mc_sigma2", number(sigma)},
                {"mc_sigma2_stderr", number(se)}};
  r.passed = worst_E <= kEnergyTol && worst_mass <= kMassTol && worst_G <= kCharFnTol && sigma_ok;
  r.detail = "M=" + std::to_string(model.grid.size()) + " dE=" + fmt(worst_E) + " d(1/m)=" + fmt(worst_mass) +
             " dG=" + fmt(worst_G) + " MC sigma2=" + fmt(sigma) + "+-" + fmt(se);
  return r;
}

// ---------------------------------------------------------------- 2

namespace oracle {
constexpr double kEnergyTol = 1e-10;
constexpr double kVectorTol = 1e-10;
constexpr std::size_t kMaxBasis = 500;
}  // namespace oracle

CriterionResult criterion_oracle(unsigned threads) {
  using namespace oracle;
  CriterionResult r;
  r.id = 2;
  r.name = "Lanczos versus dense diagonalization";
  r.tolerances = {{"energy_abs", kEnergyTol}, {"one_minus_overlap", kVectorTol}, {"max_basis", kMaxBasis}};
  Philox4x32 rng(77);
  std::size_t models = 0;
  double worst_E = 0.0, worst_v = 0.0;
  for (int d = 1; d <= 3; ++d) {
    for (int variant = 0; variant < 4; ++variant) {
      const double dk = variant % 2 ? 0.75 : 0.5;
      const double kmax = std::max(dk, d == 1 ? 2.0 : (d == 2 ? 1.0 : 0.6));
      const auto disp = variant == 3 ? DispersionSpec::massive_quadratic(0.7, 0.3) : DispersionSpec::constant(1.0);
      const auto model =
          ModelSpec::make(d, disp, FormFactorSpec::gaussian(0.5 + rng.uniform(), 1.0), 2.0 * rng.uniform(), dk, kmax);
      for (int N_max = 1; N_max <= 6; ++N_max) {
        if (FockBasis::count_states(model.grid.size(), N_max) > kMaxBasis) break;
        const auto basis = FockBasis::enumerate(model.grid, N_max);
        const Vec3 P{0.6 * rng.normal(), d > 1 ? 0.6 * rng.normal() : 0.0, d > 2 ? 0.6 * rng.normal() : 0.0};
        const auto H = assemble_fiber_hamiltonian(model, P, basis, threads);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.to_dense());
        LanczosOptions opt;
        opt.threads = threads;
        const auto gs = ground_state(H, opt);
        Eigen::Map<const Eigen::VectorXd> v(gs.psi.data(), static_cast<Eigen::Index>(gs.psi.size()));
        worst_E = std::max(worst_E, std::abs(gs.E - es.eigenvalues()[0]));
        worst_v = std::max(worst_v, 1.0 - std::abs(v.dot(es.eigenvectors().col(0))));
        ++models;
      }
    }
  }
  r.measured = {{"models", models}, {"max_energy_error", number(worst_E)}, {"max_one_minus_overlap", number(worst_v)}};
  r.passed = models > 0 && worst_E <= kEnergyTol && worst_v <= kVectorTol;
  r.detail = std::to_string(models) + " models, dE=" + fmt(worst_E) + " 1-|<v,w>|=" + fmt(worst_v);
  return r;
}

// ---------------------------------------------------------------- 3

namespace identity {
constexpr double kRelTol = 1e-3;
constexpr double kStderrs = 3.0;
constexpr int kNmax = 4;
constexpr double kMassH = 0.125;
constexpr int kMassLevels = 3;
constexpr double kSigmaT = 1.0;
const std::vector<double> kEps{0.4, 0.3, 0.2, 0.1};
constexpr std::size_t kChains = 4;
constexpr std::size_t kSweepsPerChain = 25000;
constexpr std::size_t kBurnIn = 2000;
}  // namespace identity

ModelSpec identity_model(double alpha) {
  return ModelSpec::make(1, DispersionSpec::constant(1.0), FormFactorSpec::gaussian(1.0, 1.0), alpha, 0.5, 3.0);
}

struct Agreement {
  bool ok;
  double diff;
  double allowed;
};

Agreement agree(double a, double ea, double b, double eb) {
  const double allowed = std::max(identity::kRelTol * std::max(std::abs(a), std::abs(b)), identity::kStderrs * std::hypot(ea, eb));
  const double diff = std::abs(a - b);
  return {diff <= allowed, diff, allowed};
}

CriterionResult identity_check(const std::vector<double>& alphas, double coupling_sign, unsigned threads) {
  using namespace identity;
  CriterionResult r;
  r.id = 3;
  r.name = "inverse mass equals diffusion constant";
  r.tolerances = {{"relative", kRelTol}, {"combined_stderrs", kStderrs}, {"N_max", kNmax}};
  r.passed = true;
  Json rows = Json::array();
  std::string detail;
  for (double alpha : alphas) {
    const auto model = identity_model(alpha);
    SolverSettings s;
    s.N_max = kNmax;
    s.threads = threads;
    SpectralSolver solver(model, s);
    const auto mass = solver.effective_mass(kMassH, kMassLevels);
    const auto sigma = solver.sigma_from_scaling({1.0, 0.0, 0.0}, kSigmaT, kEps);

    PathConfig path;
    path.t = 40.0;
    path.T_minus = 5.0;
    path.T_plus = 5.0;
    path.dt = 0.1;
    path.boundary = PathBoundary::FreeBoth;
    MCConfig mc;
    mc.chains = kChains;
    mc.sweeps = kSweepsPerChain;
    mc.burn_in = kBurnIn;
    mc.seed = 977;
    mc.threads = threads;
    mc.k_list = {0.25};
    mc.coupling_sign = coupling_sign;
    const auto run = run_mc(model, path, mc);
    const auto& mcs = run.sigma2.slope;

    const auto a = agree(mass.extrapolated, mass.error, sigma.extrapolated, sigma.error);
    const auto b = agree(mass.extrapolated, mass.error, mcs.mean, mcs.stderr_);
    const auto c = agree(sigma.extrapolated, sigma.error, mcs.mean, mcs.stderr_);
    const bool ok = a.ok && b.ok && c.ok && sigma.converged;
    r.passed = r.passed && ok;
    rows.push_back({{"alpha", number(alpha)},
                    {"inverse_mass", number(mass.extrapolated)},
                    {"inverse_mass_error", number(mass.error)},
                    {"sigma2_spectral", number(sigma.extrapolated)},
                    {"sigma2_spectral_error", number(sigma.error)},
                    {"sigma2_mc", number(mcs.mean)},
                    {"sigma2_mc_stderr", number(mcs.stderr_)},
                    {"mc_acceptance", number(run.acceptance)},
                    {"mc_flags", run.flags},
                    {"pairs_ok", {a.ok, b.ok, c.ok}}});
    detail += (detail.empty() ? "" : "; ") + std::string("alpha=") + fmt(alpha) + " 1/m=" + fmt(mass.extrapolated) +
              " spec=" + fmt(sigma.extrapolated) + " MC=" + fmt(mcs.mean) + "+-" + fmt(mcs.stderr_);
  }
  r.measured = {{"ladder", rows}, {"coupling_sign", coupling_sign}};
  r.detail = detail;
  return r;
}

// ---------------------------------------------------------------- 4

constexpr double kSlopeAlpha = 1e-3;
constexpr double kSlopeRelTol = 1e-3;

CriterionResult criterion_slope(unsigned threads) {
  CriterionResult r;
  r.id = 4;
  r.name = "perturbative slope";
  r.tolerances = {{"alpha", kSlopeAlpha}, {"relative", kSlopeRelTol}};
  const auto model =
      ModelSpec::make(1, DispersionSpec::constant(1.0), FormFactorSpec::gaussian(1.0, 1.0), kSlopeAlpha, 0.5, 2.0);
  SolverSettings s;
  s.N_max = 3;
  s.threads = threads;
  SpectralSolver coupled(model, s);
  SpectralSolver bare(model.with_alpha(0.0), s);
  const double slope = (coupled.ground_zero().E - bare.ground_zero().E) / kSlopeAlpha;
  const double expected = perturbative_slope(model);
  const double rel = std::abs(slope - expected) / std::abs(expected);
  r.measured = {{"slope", number(slope)}, {"expected", number(expected)}, {"relative_error", number(rel)}};
  r.passed = rel < kSlopeRelTol;
  r.detail = "slope=" + fmt(slope) + " expected=" + fmt(expected) + " rel=" + fmt(rel);
  return r;
}

// ---------------------------------------------------------------- 5

constexpr double kEdgeTol = 1e-8;
constexpr double kMonotoneTol = 1e-10;

CriterionResult criterion_edge(unsigned threads) {
  CriterionResult r;
  r.id = 5;
  r.name = "essential edge at E(0)+1";
  r.tolerances = {{"edge_abs", kEdgeTol}, {"monotone_slack", kMonotoneTol}};
  SolverSettings s;
  s.N_max = 2;
  s.threads = threads;
  double worst = 0.0;
  bool monotone = true;
  std::size_t scanned = 0;
  for (const auto& model :
       {ModelSpec::make(1, DispersionSpec::constant(1.0), FormFactorSpec::gaussian(0.8, 1.0), 0.4, 0.5, 1.5),
        ModelSpec::make(2, DispersionSpec::constant(1.0), FormFactorSpec::gaussian(0.6, 1.0), 0.3, 0.5, 0.75)}) {
    SpectralSolver solver(model, s);
    const double E0 = solver.ground_zero().E;
    for (const auto& P : model.grid.modes) {
      const auto edge = solver.essential_edge(P, 3);
      worst = std::max(worst, std::abs(edge.E_ess - (E0 + 1.0)));
      for (std::size_t n = 1; n < edge.thresholds.size(); ++n)
        monotone = monotone && edge.thresholds[n] >= edge.thresholds[n - 1] - kMonotoneTol;
      ++scanned;
    }
  }
  r.measured = {{"points", scanned}, {"max_edge_error", number(worst)}, {"thresholds_monotone", monotone}};
  r.passed = worst <= kEdgeTol && monotone;
  r.detail = std::to_string(scanned) + " lattice P, |E_ess-E(0)-1|<=" + fmt(worst) + (monotone ? ", monotone" : ", NOT monotone");
  return r;
}

// ---------------------------------------------------------------- 6

constexpr std::size_t kKernelSamples = 100;
constexpr double kKernelLimitTol = 1e-2;
constexpr double kKernelRmin = 0.3;
constexpr double kKernelRmax = 5.0;
constexpr double kKernelTmax = 3.0;

CriterionResult criterion_kernel(unsigned) {
  CriterionResult r;
  r.id = 6;
  r.name = "kernel monotone in the cutoff";
  r.tolerances = {{"limit_relative", kKernelLimitTol},
                  {"samples", kKernelSamples},
                  {"r_range", {kKernelRmin, kKernelRmax}},
                  {"t_range", {0.0, kKernelTmax}}};
  Philox4x32 rng(2718);
  bool monotone = true;
  double worst_limit = 0.0;
  std::vector<ModelSpec> ladder;
  for (double kappa = 1; kappa <= 256; kappa *= 2)
    ladder.push_back(
        ModelSpec::make(3, DispersionSpec::constant(1.0), FormFactorSpec::froehlich_exp(kappa), 1.0, 0.5, 1.0));
  for (std::size_t i = 0; i < kKernelSamples; ++i) {
    const double rad = kKernelRmin + (kKernelRmax - kKernelRmin) * rng.uniform();
    Vec3 dir{rng.normal(), rng.normal(), rng.normal()};
    dir = (1.0 / norm(dir)) * dir;
    const Vec3 x = rad * dir;
    const double t = kKernelTmax * (2.0 * rng.uniform() - 1.0);
    double prev = -INFINITY;
    for (const auto& m : ladder) {
      const double w = eval_W_continuum(m, x, t).value;
      monotone = monotone && w >= prev;
      prev = w;
    }
    const double limit = froehlich_kernel(rad, t);
    worst_limit = std::max(worst_limit, std::abs(prev - limit) / limit);
  }
  r.measured = {{"monotone", monotone}, {"max_relative_gap_at_256", number(worst_limit)}};
  r.passed = monotone && worst_limit <= kKernelLimitTol;
  r.detail = std::string(monotone ? "monotone" : "NOT monotone") + " on 9-rung ladder, gap at 256: " + fmt(worst_limit);
  return r;
}

// ---------------------------------------------------------------- 7

constexpr double kLadderTol = 1e-4;
constexpr double kEpsTol = 1e-6;

ToyFiberModel toy(int d, std::vector<ToyMinimum> minima, double theta1 = 0.2, double gap0 = 100.0, double w = 1.0) {
  ToyFiberModel m;
  m.d = d;
  m.minima = std::move(minima);
  m.theta1 = theta1;
  m.gap0 = gap0;
  m.phi_width = w;
  return m;
}

CriterionResult criterion_limits(unsigned) {
  CriterionResult r;
  r.id = 7;
  r.name = "pinned limits and epsilon ladders";
  const std::vector<double> T{10, 20, 40, 80, 160};
  r.tolerances = {{"last_rung_relative", kLadderTol}, {"epsilon_abs", kEpsTol}, {"T", T}};
  struct Fixture {
    const char* name;
    ToyFiberModel m;
    double k, t;
    LimitCase expected;
  };
  const std::vector<Fixture> fixtures{
      {"one-minimum", toy(3, {{0.0, 2, 100.0}}), 1.0, 0.01, LimitCase::OneMinimum},
      {"case a", toy(3, {{0.0, 2, 100.0}, {1.0, 2, 100.0}}), 1.0, 0.01, LimitCase::CaseA},
      {"case b", toy(1, {{0.0, 2, 100.0}, {1.0, 2, 100.0}}), 1.0, 0.01, LimitCase::CaseB},
      {"case c", toy(1, {{0.0, 4, 1e4}, {2.0, 2, 10.0}}, 0.125, 100.0, 0.5), 2.0, 0.01, LimitCase::CaseC},
      {"off-zero", toy(3, {{1.0, 2, 100.0}, {1.6, 2, 60.0}}), 0.7, 0.01, LimitCase::OffZero},
  };
  r.passed = true;
  Json ladders = Json::array();
  double worst = 0.0;
  for (const auto& f : fixtures) {
    const auto lad = pinned_limit_ladder(f.m, f.k, f.t, T);
    const bool ok = lad.limit_case == f.expected && lad.rel_error.back() < kLadderTol;
    r.passed = r.passed && ok;
    worst = std::max(worst, lad.rel_error.back());
    ladders.push_back({{"fixture", f.name},
                       {"case", to_string(lad.limit_case)},
                       {"limit", number(lad.limit)},
                       {"rel_error", lad.rel_error}});
  }
  const std::vector<double> eps{0.08, 0.04, 0.02, 0.01, 0.005};
  Json eps_rows = Json::array();
  double worst_eps = 0.0;
  const auto one = toy(1, {{0.0, 2, 0.5}}, 0.2, 1.0);
  const auto ring = toy(3, {{0.0, 2, 1.0}, {1.3, 2, 2.0}}, 0.2, 1.0);
  for (const auto& e : {epsilon_limit(one, 0, std::sqrt(2.0), 1.0, 1.0, eps, kEpsTol),
                        epsilon_limit(ring, 0, 0.9, 1.0, 1.5, eps, kEpsTol),
                        epsilon_limit(ring, 1, 0.9, 0.6, 1.5, eps, kEpsTol),
                        epsilon_limit(ring, 1, 0.9, 0.0, 1.5, eps, kEpsTol)}) {
    const double dev = std::abs(e.extrapolated - e.target);
    worst_eps = std::max(worst_eps, dev);
    r.passed = r.passed && dev <= kEpsTol;
    eps_rows.push_back({{"minimum", e.minimum},
                        {"cos_angle", number(e.cos_angle)},
                        {"extrapolated", number(e.extrapolated)},
                        {"target", number(e.target)}});
  }
  r.measured = {{"ladders", ladders}, {"epsilon", eps_rows}};
  r.detail = "5 fixtures, worst last-rung error " + fmt(worst) + "; epsilon ladders within " + fmt(worst_eps);
  return r;
}

// ---------------------------------------------------------------- 8

constexpr double kCltSigmaTol = 1e-6;

CriterionResult criterion_clt(unsigned) {
  CriterionResult r;
  r.id = 8;
  r.name = "CLT classification battery";
  const std::vector<double> ks{0.25, 0.5, 1.0, 2.0, 4.0};
  const std::vector<double> eps{0.004, 0.002, 0.001, 0.0005, 0.00025, 0.000125};
  const double t = 1.0;
  r.tolerances = {{"sigma2_relative", kCltSigmaTol}, {"eps", eps}, {"k", ks}};
  struct Case {
    const char* name;
    ToyFiberModel m;
    CltVerdict expected;
    double sigma2;  // checked when positive
  };
  const std::vector<Case> cases{
      {"zero minimum d=2", toy(2, {{0.0, 2, 0.6}}), CltVerdict::Gaussian, 1.2},
      {"zero minimum d=3", toy(3, {{0.0, 2, 0.7}}), CltVerdict::Gaussian, 1.4},
      {"zero and ring d=2", toy(2, {{0.0, 4, 1.0}, {1.0, 2, 1.0}}), CltVerdict::NonGaussian, 0.0},
      {"zero and ring d=3", toy(3, {{0.0, 2, 1.0}, {1.0, 2, 1.0}}), CltVerdict::NonGaussian, 0.0},
      {"off-zero ring d=2", toy(2, {{0.8, 2, 1.0}, {1.5, 2, 3.0}}), CltVerdict::NonGaussian, 0.0},
      {"off-zero ring d=3", toy(3, {{1.0, 2, 1.0}}), CltVerdict::NonGaussian, 0.0},
      {"equal curvature d=1", toy(1, {{0.0, 2, 0.9}, {1.0, 2, 0.9}}), CltVerdict::Gaussian, 1.8},
  };
  r.passed = true;
  Json rows = Json::array();
  int good = 0;
  for (const auto& c : cases) {
    const auto res = clt_classify(c.m, ks, t, eps);
    bool ok = res.verdict == c.expected;
    if (c.sigma2 > 0.0) ok = ok && std::abs(res.sigma2 - c.sigma2) <= kCltSigmaTol * c.sigma2;
    good += ok;
    r.passed = r.passed && ok;
    rows.push_back({{"fixture", c.name},
                    {"verdict", to_string(res.verdict)},
                    {"expected", to_string(c.expected)},
                    {"sigma2", number(res.sigma2)},
                    {"residual", number(res.residual)}});
  }
  r.measured = {{"fixtures", rows}};
  r.detail = std::to_string(good) + "/" + std::to_string(cases.size()) + " fixtures classified as expected";
  return r;
}

// ---------------------------------------------------------------- 9

Config determinism_config() {
  Config c;
  c.seed = 4242;
  c.model.dimension = 1;
  c.model.alpha = 0.3;
  c.model.dk = 0.5;
  c.model.kmax = 1.5;
  c.fock.N_max = 3;
  c.spectral.essential_n = 2;
  c.spectral.P = {0.0, 0.5, 1.0};
  c.model.form_factor = FormFactorSpec::gaussian(1.0, 1.0);
  c.path.t = 4.0;
  c.path.T_plus = 1.0;
  c.path.boundary = PathBoundary::FreeBoth;
  c.mc.chains = 3;
  c.mc.sweeps = 2000;
  c.mc.burn_in = 200;
  c.toy.model = toy(1, {{0.0, 2, 100.0}, {1.0, 2, 100.0}});
  c.toy.T = {10, 20};
  c.toy.clt_k = {0.5, 1.0};
  c.toy.clt_eps = {0.004, 0.002, 0.001};
  c.mc.seed = c.seed;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

CriterionResult criterion_determinism(unsigned threads) {
  CriterionResult r;
  r.id = 9;
  r.name = "determinism across runs and thread counts";
  const unsigned many = std::max(3u, threads);
  r.tolerances = {{"comparison", "byte-identical"}, {"threads", {1, 1, many}}};
  const auto root = std::filesystem::temp_directory_path() / ("polaron-determinism-" + std::to_string(::getpid()));
  std::filesystem::remove_all(root);
  const Config config = determinism_config();
  r.passed = true;
  Json compared = Json::array();
  std::size_t files = 0;
  for (const auto& name : subcommands()) {
    if (name == "verify") continue;
    std::vector<std::vector<std::filesystem::path>> runs;
    int i = 0;
    for (unsigned th : {1u, 1u, many}) {
      for (OutputFormat f : {OutputFormat::Csv}) {
        RunOptions opt;
        opt.threads = th;
        opt.format = f;
        const auto res = run_command(name, config, opt);
        runs.push_back(write_result(res, root / (name + "-" + std::to_string(i++)), f));
      }
    }
    bool same = true;
    for (std::size_t k = 1; k < runs.size(); ++k) {
      same = same && runs[k].size() == runs[0].size();
      for (std::size_t f = 0; same && f < runs[0].size(); ++f) same = slurp(runs[0][f]) == slurp(runs[k][f]);
    }
    files += runs[0].size();
    compared.push_back({{"subcommand", name}, {"files", runs[0].size()}, {"identical", same}});
    r.passed = r.passed && same;
  }
  std::filesystem::remove_all(root);
  r.measured = {{"subcommands", compared}};
  r.detail = std::to_string(files) + " output files per run, 3 runs per subcommand (threads 1, 1, " +
             std::to_string(many) + ")";
  return r;
}

}  // namespace

bool AcceptanceReport::passed() const {
  bool ok = std::all_of(criteria.begin(), criteria.end(), [](const CriterionResult& c) { return c.passed; });
  if (mutation) ok = ok && mutation->passed;
  return ok;
}

CriterionResult run_criterion(int id, unsigned threads) {
  switch (id) {
    case 1: return criterion_free(threads);
    case 2: return criterion_oracle(threads);
    case 3: return identity_check({0.1, 0.25, 0.5}, 1.0, threads);
    case 4: return criterion_slope(threads);
    case 5: return criterion_edge(threads);
    case 6: return criterion_kernel(threads);
    case 7: return criterion_limits(threads);
    case 8: return criterion_clt(threads);
    case 9: return criterion_determinism(threads);
    default: throw std::invalid_argument("no acceptance criterion " + std::to_string(id));
  }
}

CriterionResult run_mutation_check(unsigned threads) {
  auto inner = identity_check({0.5}, -1.0, threads);
  CriterionResult r;
  r.id = 0;
  r.name = "mutation: sign-flipped MC coupling breaks the identity";
  r.tolerances = inner.tolerances;
  r.measured = inner.measured;
  r.passed = !inner.passed;
  r.detail = std::string(inner.passed ? "NOT detected: " : "detected: ") + inner.detail;
  return r;
}

AcceptanceReport run_acceptance(const AcceptanceOptions& options,
                                const std::function<void(const CriterionResult&)>& progress) {
  AcceptanceReport report;
  for (int id : options.criteria) {
    CriterionResult r;
    try {
      r = run_criterion(id, options.threads);
    } catch (const std::exception& e) {
      r.id = id;
      r.name = "criterion " + std::to_string(id);
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    if (progress) progress(r);
    report.criteria.push_back(std::move(r));
  }
  if (options.mutation_check) {
    CriterionResult r;
    try {
      r = run_mutation_check(options.threads);
    } catch (const std::exception& e) {
      r.name = "mutation check";
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    if (progress) progress(r);
    report.mutation = std::move(r);
  }
  return report;
}

std::string summary_line(const CriterionResult& r) {
  std::ostringstream s;
  s << (r.passed ? "[PASS] " : "[FAIL] ");
  if (r.id > 0)
    s << r.id << " ";
  else
    s << "- ";
  s << r.name << ": " << r.detail;
  return s.str();
}

Json to_json(const CriterionResult& r) {
  return {{"id", r.id},
          {"name", r.name},
          {"passed", r.passed},
          {"tolerances", r.tolerances},
          {"measured", r.measured},
          {"detail", r.detail}};
}

Json to_json(const AcceptanceReport& r) {
  Json j;
  Json list = Json::array();
  for (const auto& c : r.criteria) list.push_back(to_json(c));
  j["criteria"] = std::move(list);
  j["mutation"] = r.mutation ? to_json(*r.mutation) : Json();
  j["passed"] = r.passed();
  return j;
}

}  // namespace polaron
