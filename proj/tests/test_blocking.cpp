#include "doctest.h"

#include <cmath>
#include <vector>

#include "polaron/blocking.hpp"
#include "polaron/rng.hpp"

using namespace polaron;

TEST_CASE("blocking: independent normals") {
  Philox4x32 rng(11);
  std::vector<double> x(1 << 16);
  for (auto& v : x) v = rng.normal();
  const auto b = blocking_analysis(x);
  CHECK(b.used == x.size());
  CHECK(b.plateau);
  CHECK(b.stderr_ == doctest::Approx(1.0 / std::sqrt(static_cast<double>(x.size()))).epsilon(0.1));
  CHECK(b.tau_int == doctest::Approx(0.5).epsilon(0.2));
  CHECK(std::abs(b.mean) < 4.0 * b.stderr_);
}

TEST_CASE("blocking: AR(1) integrated autocorrelation time") {
  // x_i = rho x_{i-1} + e_i: tau_int = (1 + rho) / (2 (1 - rho)), var x = 1 / (1 - rho^2).
  const double rho = 0.9;
  Philox4x32 rng(5);
  std::vector<double> x(1 << 18);
  double prev = rng.normal() / std::sqrt(1.0 - rho * rho);
  for (auto& v : x) {
    prev = rho * prev + rng.normal();
    v = prev;
  }
  const auto b = blocking_analysis(x);
  const double tau = (1.0 + rho) / (2.0 * (1.0 - rho));
  const double se = std::sqrt(2.0 * tau / (1.0 - rho * rho) / static_cast<double>(x.size()));
  CHECK(b.plateau);
  CHECK(b.level > 0);
  CHECK(b.stderr_ == doctest::Approx(se).epsilon(0.2));
  CHECK(b.tau_int == doctest::Approx(tau).epsilon(0.3));
}

TEST_CASE("blocking: degenerate series") {
  std::vector<double> c(1000, 1.0);
  const auto b = blocking_analysis(c);
  CHECK(b.mean == 1.0);
  CHECK(b.stderr_ == 0.0);
  CHECK(b.used == 512);
  CHECK_FALSE(blocking_analysis(std::vector<double>{}).plateau);
}

TEST_CASE("blocking: trailing power of two") {
  std::vector<double> x(100);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = i < 36 ? 1000.0 : 0.0;
  const auto b = blocking_analysis(x);
  CHECK(b.used == 64);
  CHECK(b.mean == 0.0);
}

TEST_CASE("merge_chains") {
  std::vector<MCEstimate> parts(2);
  parts[0].mean = 1.0;
  parts[0].stderr_ = 0.3;
  parts[0].samples = 10;
  parts[1].mean = 2.0;
  parts[1].stderr_ = 0.4;
  parts[1].samples = 10;
  parts[1].plateau = false;
  const auto m = merge_chains(parts);
  CHECK(m.mean == doctest::Approx(1.5));
  CHECK(m.stderr_ == doctest::Approx(0.25));
  CHECK(m.samples == 20);
  CHECK_FALSE(m.plateau);
}

TEST_CASE("jackknife over blocks") {
  Philox4x32 rng(3);
  std::vector<std::vector<double>> s(2, std::vector<double>(4000));
  for (std::size_t i = 0; i < 4000; ++i) {
    s[0][i] = rng.normal();
    s[1][i] = 2.0 + rng.normal();
  }
  // Linear estimator: value is the plain mean and the error is that of block means.
  const auto lin = jackknife_blocks(s, 40, [](const std::vector<double>& m) { return m[0]; });
  double mean = 0.0;
  for (double v : s[0]) mean += v;
  mean /= 4000.0;
  CHECK(lin.value == doctest::Approx(mean).epsilon(1e-12));
  std::vector<double> bm(40, 0.0);
  for (std::size_t i = 0; i < 4000; ++i) bm[i / 100] += s[0][i] / 100.0;
  double var = 0.0;
  for (double v : bm) var += (v - mean) * (v - mean);
  CHECK(lin.stderr_ == doctest::Approx(std::sqrt(var / 39.0 / 40.0)).epsilon(1e-9));

  const auto ratio = jackknife_blocks(s, 40, [](const std::vector<double>& m) { return std::log(m[1]); });
  CHECK(ratio.value == doctest::Approx(std::log(2.0)).epsilon(0.02));
  CHECK(ratio.stderr_ == doctest::Approx(1.0 / 2.0 / std::sqrt(4000.0)).epsilon(0.35));
  CHECK_THROWS(jackknife_blocks(s, 1, [](const std::vector<double>& m) { return m[0]; }));
}
