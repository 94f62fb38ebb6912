#pragma once

// Reproducible random streams.
//
// Every trajectory owns a RandomStream built from a single 64-bit seed. The
// stream holds two independent xoshiro256++ engines: the noise engine feeds
// the Gaussian increments and the flip engine feeds the Bernoulli sign flips
// of the skew-symmetric scheme. Because the noise engine is never touched by
// flip draws, every integrator started from the same seed sees the same
// Gaussian sequence (common random numbers).
//
// Normals are produced by inverting the standard normal CDF on an open-interval
// uniform, so one uniform draw yields exactly one normal.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/math/policies/policy.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "skewdrift/types.hpp"

namespace skewdrift {

/// One SplitMix64 output; advances `state`.
constexpr std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of item `index` under `master`. Depends only on the pair, so any
/// subset of trajectories can be rerun in isolation.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  std::uint64_t state = master;
  const std::uint64_t a = splitmix64_next(state);
  state = a ^ (index * 0xd1b54a32d192ed03ULL);
  splitmix64_next(state);
  return splitmix64_next(state);
}

/// xoshiro256++ (Blackman & Vigna). Satisfies UniformRandomBitGenerator.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Xoshiro256pp(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64_next(sm);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
};

/// Maps 64 random bits to the open interval (0, 1): midpoints of a 2^-52
/// lattice, so both 2^-53 and 1 - 2^-53 are exactly representable.
constexpr double bits_to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Standard normal quantile for u in (0, 1).
inline double standard_normal_quantile(double u) {
  using Policy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;
  // Use the tail closest to u so that 1 - u is never formed near 1.
  if (u < 0.5) return -M_SQRT2 * boost::math::erfc_inv(2.0 * u, Policy{});
  return M_SQRT2 * boost::math::erfc_inv(2.0 * (1.0 - u), Policy{});
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) noexcept
      : noise_(derive_seed(seed, 0)), flips_(derive_seed(seed, 1)) {}

  double normal() { return standard_normal_quantile(bits_to_open_unit(noise_())); }

  /// Uniform on (0, 1) drawn from the flip stream.
  double flip_uniform() noexcept { return bits_to_open_unit(flips_()); }

  /// Uniform on (0, 1) drawn from the noise stream; used for initial states.
  double uniform() noexcept { return bits_to_open_unit(noise_()); }

  template <typename Scalar>
  VectorX<Scalar> normal_vector(Index d) {
    VectorX<Scalar> v(d);
    for (Index i = 0; i < d; ++i) v[i] = static_cast<Scalar>(normal());
    return v;
  }

  Xoshiro256pp& noise_engine() noexcept { return noise_; }

 private:
  Xoshiro256pp noise_;
  Xoshiro256pp flips_;
};

}  // namespace skewdrift
