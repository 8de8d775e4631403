#include "doctest.h"

#include <cmath>

#include <Eigen/Dense>

#include "polaron/cltlab.hpp"

using namespace polaron;

namespace {

ToyFiberModel toy(int d, std::vector<ToyMinimum> minima, double theta1 = 0.2, double gap0 = 100.0, double w = 1.0) {
  ToyFiberModel m;
  m.d = d;
  m.minima = std::move(minima);
  m.theta1 = theta1;
  m.gap0 = gap0;
  m.phi_width = w;
  return m;
}

// Independent oracle for d = 1: explicit 2x2 matrices exponentiated by
// eigendecomposition, composite Simpson rule on a fine P grid.
double oracle_1d(const ToyFiberModel& m, double k, double t, double T) {
  auto H = [&](double P) {
    const double r2 = P * P;
    const double th = m.theta(r2);
    Eigen::Vector2d psi(std::cos(th), std::sin(th)), perp(-std::sin(th), std::cos(th));
    const double E = m.energy(r2);
    return Eigen::Matrix2d(E * psi * psi.transpose() + (E + m.gap(r2)) * perp * perp.transpose());
  };
  auto expm = [](const Eigen::Matrix2d& A, double s) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(A);
    return Eigen::Matrix2d(es.eigenvectors() * (-s * es.eigenvalues().array()).exp().matrix().asDiagonal() *
                           es.eigenvectors().transpose());
  };
  auto integrand = [&](double P, double kk) {
    const Eigen::Vector2d phi = m.phi(P * P) * Eigen::Vector2d(1.0, 0.0);
    const Eigen::Vector2d u = expm(H(P), T) * phi;
    return u.dot(expm(H(P + kk), t) * u);
  };
  const double L = 12.0;
  const int n = 40000;
  const double h = 2.0 * L / n;
  double num = 0.0, den = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double P = -L + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    num += w * integrand(P, k);
    den += w * integrand(P, 0.0);
  }
  return num / den;
}

}  // namespace

TEST_CASE("toy: validation and energy landscape") {
  CHECK_THROWS(toy(1, {{1.0, 3, 1.0}}).validate());
  CHECK_THROWS(toy(1, {{1.0, 2, 1.0}, {0.5, 2, 1.0}}).validate());
  CHECK_THROWS(toy(1, {{0.0, 1, 1.0}}).validate());
  CHECK_THROWS(toy(4, {{0.0, 2, 1.0}}).validate());
  auto bad = toy(1, {{0.0, 2, 1.0}});
  bad.theta0 = std::numbers::pi / 2;
  bad.theta1 = 0.0;
  CHECK_THROWS(bad.validate());

  const auto m = toy(2, {{0.0, 4, 3.0}, {1.5, 2, 7.0}});
  CHECK(m.energy(0.0) == 0.0);
  CHECK(m.energy(2.25) == 0.0);
  for (double r = 0.05; r < 4.0; r += 0.1) CHECK(m.energy(r * r) > 0.0);
  // Local forms a_l R^{n_l}.
  const double R = 1e-4;
  CHECK(m.energy(R * R) / (3.0 * std::pow(R, 4)) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(m.energy((1.5 + R) * (1.5 + R)) / (7.0 * R * R) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(m.curvature(0) == 0.0);
  CHECK(m.curvature(1) == 14.0);
  // Second difference at the ring reproduces the curvature.
  const double h = 1e-4;
  const double E2 = (m.energy((1.5 + h) * (1.5 + h)) + m.energy((1.5 - h) * (1.5 - h))) / (h * h);
  CHECK(E2 == doctest::Approx(14.0).epsilon(1e-6));
}

TEST_CASE("toy: exactly one limit case fires") {
  CHECK(classify_limit(toy(3, {{0.0, 2, 1.0}})) == LimitCase::OneMinimum);
  CHECK(classify_limit(toy(3, {{0.0, 2, 1.0}, {1.0, 2, 1.0}})) == LimitCase::CaseA);
  CHECK(classify_limit(toy(1, {{0.0, 2, 1.0}, {1.0, 2, 1.0}})) == LimitCase::CaseB);
  CHECK(classify_limit(toy(2, {{0.0, 4, 1.0}, {1.0, 2, 1.0}})) == LimitCase::CaseB);
  CHECK(classify_limit(toy(3, {{0.0, 6, 1.0}, {1.0, 2, 1.0}})) == LimitCase::CaseB);
  CHECK(classify_limit(toy(1, {{0.0, 4, 1.0}, {1.0, 2, 1.0}})) == LimitCase::CaseC);
  CHECK(classify_limit(toy(3, {{0.0, 8, 1.0}, {1.0, 2, 1.0}})) == LimitCase::CaseC);
  CHECK(classify_limit(toy(1, {{0.0, 2, 1.0}, {1.0, 4, 1.0}})) == LimitCase::CaseA);
  CHECK(classify_limit(toy(3, {{1.0, 2, 1.0}, {2.0, 4, 1.0}})) == LimitCase::OffZero);
  // The ring with the larger order dominates and the flatter ring drops out.
  const auto lim = gT_limit_formula(toy(3, {{1.0, 2, 1.0}, {2.0, 4, 1.0}}), 0.5, 1.0);
  REQUIRE(lim.terms.size() == 1);
  CHECK(lim.terms[0].Q == 2.0);
}

TEST_CASE("gT_exact: trivial values and normalization") {
  const auto m = toy(2, {{0.0, 2, 5.0}, {1.0, 2, 5.0}});
  CHECK(gT_exact(m, 0.7, 0.0, 3.0).value == 1.0);
  CHECK(gT_exact(m, 0.0, 0.4, 3.0).value == 1.0);
  for (double k : {0.3, 1.0, 2.5}) {
    const double g = gT_exact(m, k, 0.4, 2.0).value;
    CHECK(g > 0.0);
    CHECK(g <= 1.0);
  }
}

TEST_CASE("gT_exact: matches the matrix oracle in d = 1") {
  const auto m = toy(1, {{0.0, 2, 2.0}, {1.2, 2, 3.0}}, 0.3, 2.0, 1.0);
  for (double T : {0.0, 0.5, 3.0}) {
    const double g = gT_exact(m, 0.8, 0.6, T).value;
    CHECK(g == doctest::Approx(oracle_1d(m, 0.8, 0.6, T)).epsilon(1e-8));
  }
}

TEST_CASE("gT_exact converges to the limit formula") {
  struct Fixture {
    ToyFiberModel m;
    double k, t;
    LimitCase expected;
  };
  const std::vector<Fixture> fixtures{
      {toy(3, {{0.0, 2, 100.0}}), 1.0, 0.01, LimitCase::OneMinimum},
      {toy(3, {{0.0, 2, 100.0}, {1.0, 2, 100.0}}), 1.0, 0.01, LimitCase::CaseA},
      {toy(1, {{0.0, 2, 100.0}, {1.0, 2, 100.0}}), 1.0, 0.01, LimitCase::CaseB},
      {toy(1, {{0.0, 4, 1e4}, {2.0, 2, 10.0}}, 0.125, 100.0, 0.5), 2.0, 0.01, LimitCase::CaseC},
      {toy(3, {{1.0, 2, 100.0}, {1.6, 2, 60.0}}), 0.7, 0.01, LimitCase::OffZero},
  };
  for (const auto& f : fixtures) {
    const auto r = pinned_limit_ladder(f.m, f.k, f.t, {10, 20, 40, 80, 160});
    CHECK(r.limit_case == f.expected);
    REQUIRE(r.rel_error.size() == 5);
    CHECK(r.rel_error.back() < 1e-4);
    CHECK(r.rel_error[4] < r.rel_error[3]);
    CHECK(r.rel_error[3] < r.rel_error[2]);
    // The limit is not trivially close to 1 or to the free value.
    CHECK(r.limit < 0.96);
  }
}

TEST_CASE("epsilon ladders") {
  // E''(0) = 1 and k^2 t = 2.
  const auto one = toy(1, {{0.0, 2, 0.5}}, 0.2, 1.0);
  const std::vector<double> eps{0.08, 0.04, 0.02, 0.01, 0.005};
  const auto z = epsilon_limit(one, 0, std::sqrt(2.0), 1.0, 1.0, eps);
  CHECK(z.target == doctest::Approx(0.36787944117144233).epsilon(1e-15));
  CHECK(z.converged);
  CHECK(std::abs(z.extrapolated - std::exp(-1.0)) < 1e-6);

  const auto ring = toy(3, {{0.0, 2, 1.0}, {1.3, 2, 2.0}}, 0.2, 1.0);
  const auto par = epsilon_limit(ring, 1, 0.9, 0.6, 1.5, eps);
  CHECK(par.target == doctest::Approx(std::exp(-0.75 * 4.0 * 0.54 * 0.54)).epsilon(1e-14));
  CHECK(par.converged);
  const auto perp = epsilon_limit(ring, 1, 0.9, 0.0, 1.5, eps);
  CHECK(perp.target == 1.0);
  CHECK(std::abs(perp.extrapolated - 1.0) < 1e-6);

  CHECK_THROWS_AS(epsilon_limit(toy(1, {{0.0, 4, 1.0}}), 0, 1.0, 1.0, 1.0, eps), std::domain_error);
}

TEST_CASE("clt classification") {
  const std::vector<double> ks{0.25, 0.5, 1.0, 2.0, 4.0};
  const std::vector<double> eps{0.004, 0.002, 0.001, 0.0005, 0.00025, 0.000125};
  const double t = 1.0;

  const auto single = clt_classify(toy(3, {{0.0, 2, 0.7}}), ks, t, eps);
  CHECK(single.verdict == CltVerdict::Gaussian);
  CHECK(single.sigma2 == doctest::Approx(1.4).epsilon(1e-6));

  CHECK(clt_classify(toy(3, {{1.0, 2, 1.0}}), ks, t, eps).verdict == CltVerdict::NonGaussian);
  CHECK(clt_classify(toy(2, {{0.8, 2, 1.0}, {1.5, 2, 3.0}}), ks, t, eps).verdict == CltVerdict::NonGaussian);
  CHECK(clt_classify(toy(3, {{0.0, 2, 1.0}, {1.0, 2, 1.0}}), ks, t, eps).verdict == CltVerdict::NonGaussian);
  CHECK(clt_classify(toy(2, {{0.0, 4, 1.0}, {1.0, 2, 1.0}}), ks, t, eps).verdict == CltVerdict::NonGaussian);
  CHECK(clt_classify(toy(1, {{0.0, 4, 1.0}, {1.0, 2, 1.0}}), ks, t, eps).verdict == CltVerdict::Degenerate);

  const auto ring1 = clt_classify(toy(1, {{1.0, 2, 0.9}}), ks, t, eps);
  CHECK(ring1.verdict == CltVerdict::Gaussian);
  CHECK(ring1.sigma2 == doctest::Approx(1.8).epsilon(1e-6));
  const auto equal = clt_classify(toy(1, {{0.0, 2, 0.9}, {1.0, 2, 0.9}}), ks, t, eps);
  CHECK(equal.verdict == CltVerdict::Gaussian);
  CHECK(equal.sigma2 == doctest::Approx(1.8).epsilon(1e-6));
  CHECK(clt_classify(toy(1, {{0.0, 2, 0.9}, {1.0, 2, 2.0}}), ks, t, eps).verdict == CltVerdict::NonGaussian);
}
