#pragma once

#include <cmath>
#include <stdexcept>

namespace polaron {

template <class Fn>
JackknifeResult jackknife_blocks(const std::vector<std::vector<double>>& series, std::size_t blocks, Fn&& fn) {
  if (series.empty()) throw std::invalid_argument("jackknife: no series");
  const std::size_t n = series.front().size();
  if (blocks < 2 || n < blocks) throw std::invalid_argument("jackknife: too few samples for the block count");
  const std::size_t len = n / blocks;
  const std::size_t used = len * blocks;
  const std::size_t start = n - used;
  const std::size_t k = series.size();
  std::vector<std::vector<double>> block_sum(k, std::vector<double>(blocks, 0.0));
  std::vector<double> total(k, 0.0);
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t i = 0; i < used; ++i) block_sum[s][i / len] += series[s][start + i];
    for (double v : block_sum[s]) total[s] += v;
  }
  std::vector<double> means(k);
  for (std::size_t s = 0; s < k; ++s) means[s] = total[s] / static_cast<double>(used);
  JackknifeResult out;
  out.value = fn(means);
  std::vector<double> leave(blocks);
  double avg = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t s = 0; s < k; ++s) means[s] = (total[s] - block_sum[s][b]) / static_cast<double>(used - len);
    leave[b] = fn(means);
    avg += leave[b];
  }
  avg /= static_cast<double>(blocks);
  double var = 0.0;
  for (double v : leave) var += (v - avg) * (v - avg);
  out.stderr_ = std::sqrt(var * static_cast<double>(blocks - 1) / static_cast<double>(blocks));
  return out;
}

}  // namespace polaron
