#include "polaron/blocking.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

namespace polaron {

BlockingResult blocking_analysis(std::span<const double> series) {
  BlockingResult out;
  if (series.empty()) {
    out.plateau = false;
    return out;
  }
  int d = 0;
  while ((std::size_t{1} << (d + 1)) <= series.size()) ++d;
  const std::size_t n = std::size_t{1} << d;
  out.used = n;
  std::vector<double> x(series.end() - static_cast<std::ptrdiff_t>(n), series.end());
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(n);
  out.mean = mu;
  if (d == 0) {
    out.plateau = false;
    out.stderr_ = 0.0;
    return out;
  }

  std::vector<double> s(static_cast<std::size_t>(d)), gamma(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    const std::size_t len = x.size();
    double var = 0.0, cov = 0.0;
    for (std::size_t j = 0; j < len; ++j) var += (x[j] - mu) * (x[j] - mu);
    for (std::size_t j = 0; j + 1 < len; ++j) cov += (x[j] - mu) * (x[j + 1] - mu);
    s[static_cast<std::size_t>(i)] = var / static_cast<double>(len);
    gamma[static_cast<std::size_t>(i)] = cov / static_cast<double>(len);
    out.level_stderr.push_back(std::sqrt(s[static_cast<std::size_t>(i)] / static_cast<double>(len)));
    std::vector<double> next(len / 2);
    for (std::size_t j = 0; j < next.size(); ++j) next[j] = 0.5 * (x[2 * j] + x[2 * j + 1]);
    x.swap(next);
  }
  if (s[0] == 0.0) {
    out.stderr_ = 0.0;
    return out;
  }

  // M_j = sum_{i >= j} n_i (gamma_i / s_i)^2, compared with chi^2_{d-j} at 0.99.
  std::vector<double> M(static_cast<std::size_t>(d), 0.0);
  double acc = 0.0;
  for (int i = d - 1; i >= 0; --i) {
    const auto u = static_cast<std::size_t>(i);
    const double ni = static_cast<double>(n >> i);
    const double ratio = s[u] > 0.0 ? gamma[u] / s[u] : 0.0;
    acc += ni * ratio * ratio;
    M[u] = acc;
  }
  int level = d - 1;
  out.plateau = false;
  for (int j = 0; j < d; ++j) {
    const boost::math::chi_squared dist(static_cast<double>(d - j));
    if (M[static_cast<std::size_t>(j)] < boost::math::quantile(dist, 0.99)) {
      level = j;
      out.plateau = true;
      break;
    }
  }
  // A choice in the last two levels leaves too few blocks to trust.
  if (level >= d - 1) out.plateau = false;
  out.level = level;
  out.stderr_ = out.level_stderr[static_cast<std::size_t>(level)];
  const double naive = out.level_stderr[0];
  out.tau_int = naive > 0.0 ? 0.5 * (out.stderr_ * out.stderr_) / (naive * naive) : 0.5;
  return out;
}

MCEstimate to_estimate(const BlockingResult& b, std::uint64_t seed) {
  MCEstimate e;
  e.mean = b.mean;
  e.stderr_ = b.stderr_;
  e.tau_int = b.tau_int;
  e.samples = b.used;
  e.seed = seed;
  e.plateau = b.plateau;
  return e;
}

MCEstimate merge_chains(std::span<const MCEstimate> chains) {
  MCEstimate out;
  if (chains.empty()) return out;
  double se2 = 0.0, tau = 0.0;
  for (const auto& c : chains) {
    out.mean += c.mean;
    se2 += c.stderr_ * c.stderr_;
    tau += c.tau_int;
    out.samples += c.samples;
    out.plateau = out.plateau && c.plateau;
  }
  const double C = static_cast<double>(chains.size());
  out.mean /= C;
  out.stderr_ = std::sqrt(se2) / C;
  out.tau_int = tau / C;
  out.seed = chains.front().seed;
  return out;
}

}  // namespace polaron
