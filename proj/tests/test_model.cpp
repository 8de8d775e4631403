#include "doctest.h"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/sin_pi.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "polaron/model.hpp"
#include "polaron/numerics.hpp"
#include "polaron/rng.hpp"

using namespace polaron;
using big = boost::multiprecision::cpp_bin_float_50;

namespace {

ModelSpec gaussian_model(int d, double dk, double kmax, double g0 = 1.0, double w = 1.0) {
  return ModelSpec::make(d, DispersionSpec::constant(1.0), FormFactorSpec::gaussian(g0, w), 0.3, dk, kmax);
}

Vec3 random_rotation_apply(const Vec3& v, Philox4x32& rng) {
  // Random unit quaternion.
  double q[4];
  double n = 0;
  for (auto& x : q) {
    x = rng.normal();
    n += x * x;
  }
  n = std::sqrt(n);
  for (auto& x : q) x /= n;
  const double a = q[0], b = q[1], c = q[2], d = q[3];
  const double R[3][3] = {{a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
                          {2 * (b * c + a * d), a * a - b * b + c * c - d * d, 2 * (c * d - a * b)},
                          {2 * (b * d - a * c), 2 * (c * d + a * b), a * a - b * b - c * c + d * d}};
  Vec3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out[i] += R[i][j] * v[j];
  return out;
}

}  // namespace

TEST_CASE("eval_omega examples") {
  auto m = gaussian_model(3, 0.5, 1.0);
  CHECK(eval_omega(m, {0.3, 0, 0}) == 1.0);
  auto q = ModelSpec::make(3, DispersionSpec::massive_quadratic(1, 1), FormFactorSpec::gaussian(1, 1), 0, 0.5, 1);
  CHECK(eval_omega(q, {0, 0, 0}) == 1.0);
  Philox4x32 rng(3);
  for (int i = 0; i < 20; ++i) {
    Vec3 k{rng.normal(), rng.normal(), rng.normal()};
    const Vec3 rk = random_rotation_apply(k, rng);
    CHECK(eval_omega(m, rk) == eval_omega(m, k));
    CHECK(eval_omega(q, rk) == doctest::Approx(eval_omega(q, k)).epsilon(1e-14));
  }
}

TEST_CASE("eval_g examples") {
  auto m = ModelSpec::make(3, DispersionSpec::constant(1), FormFactorSpec::froehlich_sharp(2.0), 1.0, 0.5, 1.0);
  const big oracle = 1 / (boost::multiprecision::sqrt(big(2)) * boost::math::constants::pi<big>());
  CHECK(eval_g(m, {1, 0, 0}) == doctest::Approx(static_cast<double>(oracle)).epsilon(1e-15));
  CHECK(eval_g(m, {1, 0, 0}) == doctest::Approx(0.225079).epsilon(1e-6));
  CHECK(eval_g(m, {3, 0, 0}) == 0.0);
  CHECK_THROWS_AS(eval_g(m, {0, 0, 0}), ModelError);
  auto g = gaussian_model(2, 0.5, 1.0, 0.7, 2.0);
  CHECK(eval_g(g, {0, 0, 0}) == 0.7);
}

TEST_CASE("grid is symmetric and excludes the origin") {
  for (int d = 1; d <= 3; ++d) {
    auto grid = KGridSpec::build(d, 0.5, 1.6);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto& n = grid.lattice[i];
      CHECK(grid.find({-n[0], -n[1], -n[2]}) != KGridSpec::npos);
      CHECK(norm(grid.modes[i]) <= 1.6 + 1e-12);
      CHECK(norm(grid.modes[i]) > 0.0);
    }
  }
  CHECK(KGridSpec::build(1, 0.5, 3.0).size() == 12);
  // |n|^2 <= 5 in d = 3: 6 + 12 + 8 + 6 + 24 = 56
  CHECK(KGridSpec::build(3, 0.5, 0.5 * std::sqrt(5.0)).size() == 56);
}

TEST_CASE("continuum kernel closed forms") {
  auto fr = ModelSpec::make(3, DispersionSpec::constant(1), FormFactorSpec::froehlich_sharp(INFINITY), 1.0, 0.5, 1.0);
  CHECK(eval_W_continuum(fr, {1, 0, 0}, 0.0).value == 1.0);
  auto ex = ModelSpec::make(3, DispersionSpec::constant(1), FormFactorSpec::froehlich_exp(10.0), 1.0, 0.5, 1.0);
  const big oracle = 2 / boost::math::constants::pi<big>() * boost::multiprecision::atan(big(10));
  CHECK(eval_W_continuum(ex, {1, 0, 0}, 0.0).value == doctest::Approx(static_cast<double>(oracle)).epsilon(1e-15));
  CHECK(eval_W_continuum(ex, {1, 0, 0}, 0.0).value == doctest::Approx(0.936550).epsilon(1e-6));
}

TEST_CASE("exp-cutoff closed form agrees with radial quadrature of its form factor") {
  // Independent route: 4 pi int k^2 g^2 sinc(k r) dk with g = e^{-k/(2 kappa)} / (sqrt2 pi k).
  for (double kappa : {1.0, 4.0}) {
    for (double r : {0.5, 1.7}) {
      auto f = [&](double k) { return 4.0 / (2.0 * std::numbers::pi) * std::exp(-k / kappa) * std::sin(k * r) / (k * r); };
      const auto q = integrate_adaptive(f, 0.0, INFINITY, 1e-12, 0.0);
      CHECK(smooth_cutoff_kernel(r, 0.0, kappa) == doctest::Approx(q.value).epsilon(1e-9));
    }
  }
}

TEST_CASE("sharp cutoff closed form agrees with quadrature") {
  auto m = ModelSpec::make(3, DispersionSpec::constant(1), FormFactorSpec::froehlich_sharp(3.0), 1.0, 0.5, 1.0);
  const double r = 0.8;
  auto f = [&](double k) { return 2.0 / std::numbers::pi * std::sin(k * r) / (k * r); };
  const auto q = integrate_adaptive(f, 0.0, 3.0, 1e-13, 0.0);
  CHECK(eval_W_continuum(m, {0, r, 0}, 0.0).value == doctest::Approx(q.value).epsilon(1e-10));
}

TEST_CASE("gaussian continuum kernel against closed forms") {
  // d = 1: int dk g0^2 e^{-k^2/w^2} cos(kx) = g0^2 w sqrt(pi) e^{-w^2 x^2 / 4}
  auto m1 = gaussian_model(1, 0.5, 2.0, 0.8, 1.3);
  const double x = 0.9, w = 1.3;
  const double exact1 = 0.64 * w * std::sqrt(std::numbers::pi) * std::exp(-w * w * x * x / 4);
  CHECK(eval_W_continuum(m1, {x, 0, 0}, 0.0).value == doctest::Approx(exact1).epsilon(1e-8));
  // d = 3: (w sqrt(pi))^3 g0^2 e^{-w^2 r^2/4}; d = 2: pi w^2 g0^2 e^{-w^2 r^2/4}
  auto m3 = gaussian_model(3, 0.5, 1.0, 0.8, 1.3);
  const double exact3 = 0.64 * std::pow(w * std::sqrt(std::numbers::pi), 3) * std::exp(-w * w * x * x / 4);
  CHECK(eval_W_continuum(m3, {0, x, 0}, 0.5).value == doctest::Approx(exact3 * std::exp(-0.5)).epsilon(1e-8));
  auto m2 = gaussian_model(2, 0.5, 1.0, 0.8, 1.3);
  const double exact2 = 0.64 * std::numbers::pi * w * w * std::exp(-w * w * x * x / 4);
  CHECK(eval_W_continuum(m2, {x, 0, 0}, 0.0).value == doctest::Approx(exact2).epsilon(1e-8));
  // |W| <= |g|^2
  CHECK(std::abs(eval_W_continuum(m2, {x, 0.4, 0}, 0.3).value) <= eval_W_continuum(m2, {0, 0, 0}, 0).value);
}

TEST_CASE("froehlich continuum kernel refuses d < 3") {
  auto m = ModelSpec::make(1, DispersionSpec::constant(1), FormFactorSpec::froehlich_exp(2.0), 1.0, 0.5, 1.0);
  CHECK_THROWS_AS(eval_W_continuum(m, {1, 0, 0}, 0.0), ModelError);
}

TEST_CASE("kernel monotone in kappa") {
  Philox4x32 rng(11);
  for (int i = 0; i < 50; ++i) {
    const double r = 0.05 + 5 * rng.uniform();
    const double t = 3 * rng.uniform();
    double prev = 0.0;
    for (double kappa = 1; kappa <= 256; kappa *= 2) {
      const double w = smooth_cutoff_kernel(r, t, kappa);
      CHECK(w >= prev);
      prev = w;
    }
    CHECK(prev <= froehlich_kernel(r, t));
  }
}

TEST_CASE("discrete kernel properties") {
  auto m = gaussian_model(2, 0.5, 1.6, 0.9, 1.1);
  const double w00 = eval_W_discrete(m, {0, 0, 0}, 0.0);
  CHECK(w00 == doctest::Approx(discrete_g_norm2(m)).epsilon(1e-14));
  // Direct sum over all modes (no pairing) as oracle.
  Philox4x32 rng(5);
  for (int i = 0; i < 20; ++i) {
    const Vec3 x{rng.normal(), rng.normal(), 0};
    const double t = rng.normal();
    double direct = 0.0;
    for (const auto& k : m.grid.modes) {
      const double g = eval_g(m, k);
      direct += m.grid.cell_volume() * g * g * std::cos(dot(k, x)) * std::exp(-std::abs(t));
    }
    const double w = eval_W_discrete(m, x, t);
    CHECK(w == doctest::Approx(direct).epsilon(1e-12));
    CHECK(std::abs(w) <= w00 + 1e-14);
    CHECK(eval_W_discrete(m, -1.0 * x, t) == doctest::Approx(w).epsilon(1e-14));
    CHECK(eval_W_discrete(m, x, -t) == w);
    CHECK(eval_W_discrete(m.with_alpha(2.0), x, t) == w);
    CHECK(w <= std::exp(-std::abs(t)) * w00 + 1e-14);
  }
}

TEST_CASE("discrete kernel converges to the continuum on refinement") {
  // Fixed kmax large enough for the gaussian tail. The error is O(dk) and
  // dominated by the excluded k = 0 cell.
  const Vec3 x{0.7, 0, 0};
  double prev = INFINITY;
  for (double dk : {0.8, 0.4, 0.2}) {
    auto m = gaussian_model(1, dk, 8.0, 1.0, 1.0);
    const double cont = eval_W_continuum(m, x, 0.2).value;
    const double err = std::abs(eval_W_discrete(m, x, 0.2) - cont);
    CHECK(err < prev);
    prev = err;
    if (dk < 0.3) CHECK(eval_W_discrete(m, x, 0.2) + dk * std::exp(-0.2) == doctest::Approx(cont).epsilon(1e-8));
  }
}

TEST_CASE("condition C report") {
  auto ok = gaussian_model(3, 0.5, 1.2);
  auto rep = check_condition_C(ok, 500);
  CHECK(rep.all_passed());
  auto acoustic = ModelSpec::make(3, DispersionSpec::tabulated({0.0, 10.0}, {0.0, 10.0}), FormFactorSpec::gaussian(1, 1),
                                  0.1, 0.5, 1.2);
  auto bad = check_condition_C(acoustic, 500);
  CHECK_FALSE(bad.all_passed());
  bool massive_failed = false;
  for (const auto& c : bad.checks)
    if (c.name == "omega_massive") massive_failed = !c.passed;
  CHECK(massive_failed);
  auto fr = ModelSpec::make(3, DispersionSpec::constant(1), FormFactorSpec::froehlich_sharp(2.0), 1.0, 0.5, 1.2);
  auto fr_rep = check_condition_C(fr, 100);
  CHECK(fr_rep.all_passed());
  double oracle = 0.0;
  for (const auto& k : fr.grid.modes) {
    const double r = norm(k);
    if (r <= 2.0) oracle += 0.125 / (2.0 * std::numbers::pi * std::numbers::pi * r * r);
  }
  CHECK(discrete_g_norm2(fr) == doctest::Approx(oracle).epsilon(1e-13));
}
