#pragma once

// Counter-based random streams (Philox4x32-10).
//
// A stream is addressed by (seed, stream id) and advanced by a 64-bit
// counter, so draws for one stream never depend on how many other streams
// exist or how far they have been advanced. The noise generator uses one
// stream per real mode, which keeps the draws of mode k identical when the
// mode cutoff changes.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace glstable {

namespace detail {

inline void philox_round(std::array<std::uint32_t, 4>& ctr, const std::array<std::uint32_t, 2>& key) {
  constexpr std::uint64_t kM0 = 0xD2511F53u;
  constexpr std::uint64_t kM1 = 0xCD9E8D57u;
  const std::uint64_t p0 = kM0 * ctr[0];
  const std::uint64_t p1 = kM1 * ctr[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace detail

/// Philox4x32 with 10 rounds. Pure function of (key, counter).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    detail::philox_round(ctr, key);
  }
  return ctr;
}

/// SplitMix64 finalizer; used to derive per-path seeds from a base seed.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return mix64(base ^ mix64(index + 0x632BE59BD9B4E019ull));
}

/// Stream tags keep unrelated uses of one seed apart.
enum class StreamTag : std::uint8_t {
  kScalar = 0,
  kNoise = 1,     // cylindrical noise, one stream per real mode
  kPilot = 2,     // calibration pilots
  kFamily = 3,    // random field families
  kEuler = 4,     // fine-grid Euler oracle
  kAux = 5,
};

/// Stream id for real mode `slot` (cos k -> 2(k-1), sin k -> 2(k-1)+1).
inline std::uint64_t stream_id(StreamTag tag, std::uint64_t slot) {
  return (static_cast<std::uint64_t>(tag) << 56) | (slot & 0x00FFFFFFFFFFFFFFull);
}

/// Single-owner counter-based stream. Identical (seed, id) reproduce
/// identical draws; `seek` jumps to an arbitrary block.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t id) : seed_(seed), id_(id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t id() const { return id_; }
  std::uint64_t counter() const { return counter_; }
  void seek(std::uint64_t counter) { counter_ = counter; }

  /// One Philox block: four 32-bit words.
  std::array<std::uint32_t, 4> next_block() {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
        static_cast<std::uint32_t>(id_), static_cast<std::uint32_t>(id_ >> 32)};
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                              static_cast<std::uint32_t>(seed_ >> 32)};
    ++counter_;
    return philox4x32(ctr, key);
  }

  /// Two uniforms in the open interval (0, 1), 52 bits each, from one block.
  std::array<double, 2> next_uniform_pair() {
    const auto w = next_block();
    const std::uint64_t x0 = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
    const std::uint64_t x1 = (static_cast<std::uint64_t>(w[2]) << 32) | w[3];
    return {to_open_unit(x0), to_open_unit(x1)};
  }

  double next_uniform() { return next_uniform_pair()[0]; }

  /// Standard normal via Box-Muller (one draw per block).
  double next_normal() {
    const auto u = next_uniform_pair();
    return std::sqrt(-2.0 * std::log(u[0])) * std::cos(2.0 * std::numbers::pi * u[1]);
  }

  static double to_open_unit(std::uint64_t x) {
    return (static_cast<double>(x >> 12) + 0.5) * 0x1.0p-52;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t id_;
  std::uint64_t counter_ = 0;
};

}  // namespace glstable
