#pragma once

// Counter-based random streams (Philox4x64-10). A stream is addressed by
// (seed, stream_id, substream) and the draw index, so any path of any run can
// be regenerated independently of how work was scheduled.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace stablesde {

using PhiloxCounter = std::array<std::uint64_t, 4>;
using PhiloxKey = std::array<std::uint64_t, 2>;

namespace detail {

inline void mulhilo64(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace detail

/// One Philox4x64 block with 10 rounds.
inline PhiloxCounter philox4x64(PhiloxCounter c, PhiloxKey k) {
  constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
  constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
  constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
  constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    detail::mulhilo64(kM0, c[0], hi0, lo0);
    detail::mulhilo64(kM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kW0;
    k[1] += kW1;
  }
  return c;
}

/// Sequential view over the Philox counter space for one (seed, stream, substream).
/// Satisfies UniformRandomBitGenerator so std distributions can draw from it.
class PhiloxStream {
 public:
  using result_type = std::uint64_t;

  PhiloxStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t substream = 0)
      : key_{seed, stream_id}, substream_(substream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 4) refill();
    return buffer_[pos_++];
  }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() {
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    return (static_cast<double>((*this)() >> 11) + 0.5) * kScale;
  }

  double exponential() { return -std::log(uniform()); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double phi = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::uint64_t> dist(mean);
    return dist(*this);
  }

  /// Number of 64-bit words consumed so far.
  std::uint64_t draws() const { return block_ * 4 - (4 - pos_); }

 private:
  void refill() {
    buffer_ = philox4x64({block_, substream_, 0, 0}, key_);
    ++block_;
    pos_ = 0;
  }

  PhiloxKey key_;
  std::uint64_t substream_;
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace stablesde
