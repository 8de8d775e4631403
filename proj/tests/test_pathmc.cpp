#include "doctest.h"

#include <chrono>
#include <cmath>

#include "polaron/pathmc.hpp"
#include "polaron/spectral.hpp"

using namespace polaron;

namespace {

ModelSpec model_1d(double alpha) {
  return ModelSpec::make(1, DispersionSpec::constant(1.0), FormFactorSpec::gaussian(1.0, 1.0), alpha, 0.5, 1.5);
}

PathConfig path_cfg(PathBoundary b, double t, double Tm, double Tp, double dt) {
  PathConfig p;
  p.boundary = b;
  p.t = t;
  p.T_minus = Tm;
  p.T_plus = Tp;
  p.dt = dt;
  return p;
}

Path random_path(int d, std::size_t n, double dt, std::uint64_t seed) {
  Philox4x32 rng(seed);
  Path p;
  p.d = d;
  p.dt = dt;
  p.q.assign(n, Vec3{0, 0, 0});
  for (std::size_t j = 1; j < n; ++j)
    for (int c = 0; c < d; ++c) p.q[j][static_cast<std::size_t>(c)] = p.q[j - 1][static_cast<std::size_t>(c)] + std::sqrt(dt) * rng.normal();
  return p;
}

bool within(const MCEstimate& e, double target, double sigmas = 3.0) {
  return std::abs(e.mean - target) <= sigmas * e.stderr_;
}

}  // namespace

TEST_CASE("path config") {
  auto p = path_cfg(PathBoundary::FreeBoth, 1.0, 0.5, 0.3, 0.1);
  CHECK(p.points() == 19);
  p.T_plus = 0.25;
  CHECK_THROWS(p.validate());
  auto delta = path_cfg(PathBoundary::DeltaStartFreeEnd, 1.0, 0.5, 0.0, 0.1);
  CHECK_THROWS(delta.validate());
  PathConfig two = path_cfg(PathBoundary::TwoSidedPinned, 1.0, 0.0, 0.0, 0.1);
  CHECK(two.phi(0.0) == 1.0);
  CHECK(two.phi(1.0) == doctest::Approx(std::exp(-0.5)));
  two.phi_r = {0.0, 1.0, 2.0};
  two.phi_value = {1.0, 0.5, 0.25};
  CHECK(two.phi(1.5) == doctest::Approx(0.375));
  CHECK(two.phi(2.5) == 0.0);
}

TEST_CASE("action: alpha = 0 and constant path oracle") {
  const auto p = random_path(1, 30, 0.1, 1);
  CHECK(interaction_action(p, ActionKernel(model_1d(0.0), KernelKind::Discrete, 0.1)) == 0.0);

  const auto model = model_1d(0.3);
  Path flat;
  flat.d = 1;
  flat.dt = 0.1;
  flat.q.assign(25, Vec3{0.7, 0, 0});
  double oracle = 0.0;
  for (std::size_t i = 0; i < 25; ++i)
    for (std::size_t j = 0; j < 25; ++j)
      if (i != j) oracle += eval_W_discrete(model, Vec3{0, 0, 0}, (static_cast<double>(i) - static_cast<double>(j)) * 0.1);
  oracle *= -0.5 * 0.3 * 0.01;
  const ActionKernel kernel(model, KernelKind::Discrete, 0.1);
  CHECK(interaction_action_reference(flat, kernel) == doctest::Approx(oracle).epsilon(1e-13));
  CHECK(interaction_action(flat, kernel) == doctest::Approx(oracle).epsilon(1e-13));
}

TEST_CASE("action: kernel table matches eval_W_discrete") {
  const auto model = ModelSpec::make(3, DispersionSpec::massive_quadratic(1.0, 0.2), FormFactorSpec::gaussian(0.8, 1.2),
                                     0.4, 0.5, 1.0);
  const ActionKernel kernel(model, KernelKind::Discrete, 0.05);
  for (std::size_t lag : {0u, 1u, 7u, 40u}) {
    const Vec3 x{0.3, -1.1, 0.25};
    CHECK(kernel.W(x, lag) == doctest::Approx(eval_W_discrete(model, x, static_cast<double>(lag) * 0.05)).epsilon(1e-14));
  }
  CHECK(kernel.W00() == doctest::Approx(discrete_g_norm2(model)).epsilon(1e-14));
}

TEST_CASE("action: blocked variant is bit-identical and bounded") {
  const auto model = ModelSpec::make(3, DispersionSpec::constant(1.0), FormFactorSpec::gaussian(1.0, 1.0), 0.5, 0.5, 1.0);
  const ActionKernel kernel(model, KernelKind::Discrete, 0.1);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = random_path(3, 150, 0.1, seed);
    const double ref = interaction_action_reference(p, kernel);
    CHECK(interaction_action(p, kernel) == ref);
    const double L = 0.1 * 149.0;
    CHECK(std::abs(ref) <= 0.5 * 0.5 * L * L * kernel.W00());
  }
}

TEST_CASE("acceptance ratio identity") {
  Philox4x32 rng(9);
  for (int i = 0; i < 200; ++i) {
    const double Sx = 3.0 * rng.normal(), Sy = 3.0 * rng.normal();
    const double bx = 0.1 + rng.uniform(), by = 0.1 + rng.uniform();
    const double forward = acceptance_probability(Sx, Sy, by / bx);
    const double backward = acceptance_probability(Sy, Sx, bx / by);
    CHECK(forward / backward == doctest::Approx(std::exp(-(Sy - Sx)) * by / bx).epsilon(1e-12));
  }
  CHECK(acceptance_probability(1.0, 1.0) == 1.0);
}

TEST_CASE("sampler: incremental action tracks the reference") {
  for (auto b : {PathBoundary::FreeBoth, PathBoundary::DeltaStartFreeEnd, PathBoundary::TwoSidedPinned}) {
    const auto model = model_1d(0.5);
    const auto cfg = path_cfg(b, 3.0, b == PathBoundary::DeltaStartFreeEnd ? 0.0 : 1.0, 1.0, 0.1);
    PathSampler s(model, cfg, KernelKind::Discrete, Philox4x32(4));
    s.set_segment(7);
    for (int i = 0; i < 300; ++i) s.sweep();
    const ActionKernel kernel(model, KernelKind::Discrete, 0.1);
    CHECK(s.action() == doctest::Approx(interaction_action_reference(s.path(), kernel)).epsilon(1e-11));
    CHECK(s.accepted() > 0);
    CHECK(s.accepted() < s.proposed());
    if (b == PathBoundary::DeltaStartFreeEnd) {
      CHECK(s.path().q[0][0] == 0.0);
      CHECK_THROWS(s.propose(Move::EndpointExtendLeft, 0, 3));
    }
    if (b != PathBoundary::FreeBoth) CHECK_THROWS(s.propose(Move::GlobalTranslate, 0, 0));
  }
}

TEST_CASE("sampler: alpha = 0 accepts everything, Brownian increments") {
  const auto model = ModelSpec::make(3, DispersionSpec::constant(1.0), FormFactorSpec::gaussian(1.0, 1.0), 0.0, 0.5, 1.0);
  const auto cfg = path_cfg(PathBoundary::FreeBoth, 1.0, 0.0, 0.0, 0.1);
  PathSampler s(model, cfg, KernelKind::Discrete, Philox4x32(21));
  s.set_segment(3);
  CHECK(s.segment() == 10);
  std::vector<double> inc;
  for (int i = 0; i < 100000; ++i) {
    s.sweep();
    const Vec3 dq = s.path().q[5] - s.path().q[4];
    inc.push_back(norm2(dq));
  }
  CHECK(s.accepted() == s.proposed());
  CHECK(s.action() == 0.0);
  const auto e = to_estimate(blocking_analysis(inc), 21);
  CHECK(within(e, 3 * 0.1));

  // Bridge moves alone also preserve the increment law.
  PathSampler b(model, path_cfg(PathBoundary::DeltaStartFreeEnd, 2.0, 0.0, 0.0, 0.1), KernelKind::Discrete, Philox4x32(2));
  std::vector<double> mid;
  for (int i = 0; i < 100000; ++i) {
    b.propose(Move::BridgeRegenerate, 3, 15);
    mid.push_back(b.path().q[9][1] - b.path().q[8][1]);
    b.propose(Move::EndpointExtendRight, 3, 0);
  }
  double m2 = 0.0;
  for (double v : mid) m2 += v * v;
  m2 /= static_cast<double>(mid.size());
  CHECK(std::abs(m2 - 0.1) < 3.0 * 0.1 * std::sqrt(2.0 / static_cast<double>(mid.size())) * 2.0);
}

TEST_CASE("mc: free particle statistics") {
  const auto model = model_1d(0.0);
  MCConfig mc;
  mc.chains = 2;
  mc.sweeps = 20000;
  mc.burn_in = 100;
  mc.seed = 77;
  mc.k_list = {0.0, 0.5, 1.0};
  for (auto b : {PathBoundary::FreeBoth, PathBoundary::DeltaStartFreeEnd}) {
    const auto cfg = path_cfg(b, 4.0, b == PathBoundary::FreeBoth ? 0.5 : 0.0, 0.5, 0.1);
    const auto run = run_mc(model, cfg, mc);
    CHECK(run.acceptance == 1.0);
    CHECK(run.charfn[0].re.mean == 1.0);
    CHECK(run.charfn[0].re.stderr_ == 0.0);
    for (std::size_t a = 1; a < 3; ++a) {
      const double k = mc.k_list[a];
      CHECK(within(run.charfn[a].re, std::exp(-0.5 * k * k * 4.0)));
      CHECK(run.charfn[a].imaginary_consistent);
    }
    CHECK(within(run.sigma2.slope, 1.0));
    CHECK(std::abs(run.sigma2.intercept) < 0.05);
    CHECK(run.sigma2.lags.size() >= 5);
    CHECK_FALSE(run.sigma2.short_lag_span);
  }
}

TEST_CASE("mc: seed determinism and thread independence") {
  const auto model = model_1d(0.3);
  const auto cfg = path_cfg(PathBoundary::FreeBoth, 2.0, 0.5, 0.5, 0.1);
  MCConfig mc;
  mc.chains = 3;
  mc.sweeps = 400;
  mc.burn_in = 100;
  mc.seed = 5;
  mc.record_trace = true;
  mc.threads = 1;
  const auto a = run_mc(model, cfg, mc);
  mc.threads = 3;
  const auto b = run_mc(model, cfg, mc);
  REQUIRE(a.chains.size() == b.chains.size());
  for (std::size_t c = 0; c < a.chains.size(); ++c) {
    CHECK(a.chains[c].slope == b.chains[c].slope);
    CHECK(a.chains[c].cos_k == b.chains[c].cos_k);
    CHECK(a.chains[c].trace.size() == b.chains[c].trace.size());
    CHECK(a.chains[c].trace.back().S == b.chains[c].trace.back().S);
  }
  CHECK(a.chains[0].stream_key != a.chains[1].stream_key);
  CHECK(a.sigma2.slope.mean == b.sigma2.slope.mean);
  mc.seed = 6;
  const auto c = run_mc(model, cfg, mc);
  CHECK(c.sigma2.slope.mean != a.sigma2.slope.mean);
}

TEST_CASE("mc: config errors") {
  const auto cfg = path_cfg(PathBoundary::FreeBoth, 1.0, 0.0, 0.0, 0.1);
  MCConfig mc;
  mc.lags = {0.1, 0.2, 0.3, 0.4};
  CHECK_THROWS(mc.validate(cfg));
  mc.lags = {0.1, 0.2, 0.3, 0.4, 0.5};
  CHECK_NOTHROW(mc.validate(cfg));
  CHECK(resolve_lags(mc, cfg).size() == 5);
  mc.lags = {0.1, 0.2, 0.3, 0.4, 1.5};
  CHECK_THROWS(mc.validate(cfg));
}

TEST_CASE("mc: continuum froehlich action stays finite") {
  const auto model = ModelSpec::make(3, DispersionSpec::constant(1.0), FormFactorSpec::froehlich_sharp(
                                         std::numeric_limits<double>::infinity()), 1.0, 0.5, 1.0);
  const auto cfg = path_cfg(PathBoundary::FreeBoth, 1.0, 0.0, 0.0, 0.1);
  PathSampler s(model, cfg, KernelKind::Continuum, Philox4x32(8));
  s.set_segment(4);
  for (int i = 0; i < 200; ++i) {
    s.sweep();
    REQUIRE(std::isfinite(s.action()));
  }
  const ActionKernel kernel(model, KernelKind::Continuum, 0.1);
  CHECK(s.action() == doctest::Approx(interaction_action_reference(s.path(), kernel)).epsilon(1e-9));
  // Coincident points are capped, not infinite.
  Path flat;
  flat.d = 3;
  flat.dt = 0.1;
  flat.q.assign(4, Vec3{0, 0, 0});
  std::size_t capped = 0;
  CHECK(std::isfinite(interaction_action_reference(flat, kernel, &capped)));
  CHECK(capped == 6);
  const auto fr1 = ModelSpec::make(1, DispersionSpec::constant(1.0), FormFactorSpec::froehlich_exp(2.0), 1.0, 0.5, 1.0);
  CHECK_THROWS_AS(ActionKernel(fr1, KernelKind::Continuum, 0.1), ModelError);
  CHECK_NOTHROW(ActionKernel(fr1, KernelKind::Discrete, 0.1));
}

TEST_CASE("mc: weak coupling one-sided char fn matches the spectral route") {
  const auto model = model_1d(0.5);
  SolverSettings s;
  s.N_max = 4;
  const SpectralSolver solver(model, s);
  const double t = 4.0;
  MCConfig mc;
  mc.chains = 2;
  mc.sweeps = 20000;
  mc.burn_in = 500;
  mc.seed = 123;
  mc.k_list = {0.5, 1.0};
  mc.lags = {0.4, 0.8, 1.6, 2.4, 3.2, 4.0};
  const auto cfg = path_cfg(PathBoundary::DeltaStartFreeEnd, t, 0.0, 0.0, 0.1);
  const auto run = run_mc(model, cfg, mc);
  for (const auto& e : run.charfn) {
    const double ref = solver.char_fn(Vec3{e.k, 0, 0}, t, Boundary::OneSided).value;
    const double free = std::exp(-0.5 * e.k * e.k * t);
    CHECK(std::abs(e.re.mean - ref) <= 3.0 * e.re.stderr_ + 1e-3 * ref);
    // The interaction is visible at this precision.
    CHECK(std::abs(ref - free) > 3.0 * e.re.stderr_);
    CHECK(e.imaginary_consistent);
  }
}

TEST_CASE("mc: sigma2 does not depend on the boundary kind") {
  const auto model = model_1d(0.5);
  MCConfig mc;
  mc.chains = 2;
  mc.sweeps = 15000;
  mc.burn_in = 500;
  mc.seed = 31;
  mc.lags = {2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 20.0};
  const auto free = run_mc(model, path_cfg(PathBoundary::FreeBoth, 20.0, 3.0, 3.0, 0.1), mc).sigma2;
  const auto delta = run_mc(model, path_cfg(PathBoundary::DeltaStartFreeEnd, 20.0, 0.0, 3.0, 0.1), mc).sigma2;
  const double comb = std::hypot(free.slope.stderr_, delta.slope.stderr_);
  CHECK(std::abs(free.slope.mean - delta.slope.mean) <= 3.0 * comb);
  CHECK(free.slope.mean < 0.9);
  CHECK(free.alternative.mean == doctest::Approx(free.slope.mean).epsilon(0.2));
}
