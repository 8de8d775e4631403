#pragma once

#include <array>
#include <cstdint>

namespace polaron {

/// Philox4x32-10 counter-based generator. A stream is fixed by its 64-bit key;
/// the 128-bit counter advances by one per block of four 32-bit outputs.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t key = 0, std::uint64_t counter_hi = 0);

  static Block bijection(Block counter, std::array<std::uint32_t, 2> key);

  /// Independent child stream (key mixed with splitmix64).
  Philox4x32 split(std::uint64_t stream) const;

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }
  /// Standard normal (Box-Muller, cached pair).
  double normal();
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }

 private:
  void refill();

  std::uint64_t key_;
  std::uint64_t counter_lo_ = 0;
  std::uint64_t counter_hi_;
  Block buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace polaron
