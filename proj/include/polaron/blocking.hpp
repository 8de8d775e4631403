#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace polaron {

/// Error analysis of a correlated series by recursive pair averaging, with the
/// blocking level chosen by the chi-squared M-test at 99%.
struct BlockingResult {
  double mean = 0.0;
  double stderr_ = 0.0;
  double tau_int = 0.5;      // var_blocked / var_naive / 2
  std::size_t used = 0;      // samples entering the analysis (a power of two)
  int level = 0;             // chosen blocking level
  bool plateau = true;       // false when no level passes the test
  std::vector<double> level_stderr;
};

/// Uses the trailing 2^floor(log2 n) samples.
BlockingResult blocking_analysis(std::span<const double> series);

struct MCEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  double tau_int = 0.5;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  bool plateau = true;
};

MCEstimate to_estimate(const BlockingResult& b, std::uint64_t seed);

/// Mean of chain means with stderr sqrt(sum se^2) / C; flags are and-ed.
MCEstimate merge_chains(std::span<const MCEstimate> chains);

/// Delete-one-block jackknife of a scalar function of block means of several
/// series. Returns {estimate from all data, jackknife stderr}.
struct JackknifeResult {
  double value = 0.0;
  double stderr_ = 0.0;
};
template <class Fn>
JackknifeResult jackknife_blocks(const std::vector<std::vector<double>>& series, std::size_t blocks, Fn&& fn);

}  // namespace polaron

#include "polaron/blocking_impl.hpp"
