#include "polaron/rng.hpp"

#include <cmath>
#include <numbers>

namespace polaron {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Philox4x32::Philox4x32(std::uint64_t key, std::uint64_t counter_hi) : key_(key), counter_hi_(counter_hi) {}

Philox4x32::Block Philox4x32::bijection(Block c, std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

Philox4x32 Philox4x32::split(std::uint64_t stream) const {
  return Philox4x32(splitmix64(key_ ^ splitmix64(stream + 0x632BE59BD9B4E019ull)));
}

void Philox4x32::refill() {
  const Block ctr{static_cast<std::uint32_t>(counter_lo_), static_cast<std::uint32_t>(counter_lo_ >> 32),
                  static_cast<std::uint32_t>(counter_hi_), static_cast<std::uint32_t>(counter_hi_ >> 32)};
  buffer_ = bijection(ctr, {static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)});
  if (++counter_lo_ == 0) ++counter_hi_;
  used_ = 0;
}

std::uint32_t Philox4x32::next_u32() {
  if (used_ == 4) refill();
  return buffer_[static_cast<std::size_t>(used_++)];
}

std::uint64_t Philox4x32::next_u64() {
  const std::uint64_t hi = next_u32();
  return (hi << 32) | next_u32();
}

double Philox4x32::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Philox4x32::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform_pos();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

std::uint64_t Philox4x32::below(std::uint64_t n) {
  const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

}  // namespace polaron
