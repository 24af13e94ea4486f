#ifndef SDRN_RANDOM_HPP
#define SDRN_RANDOM_HPP

#include <cmath>
#include <cstdint>

#include <boost/math/distributions/normal.hpp>

namespace sdrn {

/// SplitMix64 finaliser.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent key from a parent key and a label (e.g. a replication index).
inline constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label) noexcept {
  return mix64(mix64(parent) ^ mix64(label + 0x632be59bd9b4e019ULL));
}

/// Named streams. Each stream of a key is an independent sequence.
enum class Stream : std::uint64_t {
  covariates = 1,
  noise = 2,
  evaluation_design = 3,
  test_covariates = 4,
  test_noise = 5,
  labels = 6,
  minibatch = 7,
  general = 8,
};

/// Counter-based generator: the i-th draw of (key, stream) is
/// mix64(mix64(key ^ stream * C) + i), so any draw can be recomputed
/// independently and results do not depend on the platform's <random>.
class CounterRng {
 public:
  CounterRng(std::uint64_t key, Stream stream) noexcept
      : base_(mix64(key ^ (static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ULL))) {}

  std::uint64_t next_u64() noexcept { return mix64(base_ + counter_++); }
  std::uint64_t counter() const noexcept { return counter_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal by inversion.
  double normal() {
    static const boost::math::normal_distribution<double> standard;
    return boost::math::quantile(standard, uniform_open());
  }

  /// Standard Laplace (location 0, scale 1, variance 2) by inversion.
  double laplace() noexcept {
    const double u = uniform_open() - 0.5;
    return u < 0.0 ? std::log1p(2.0 * u) : -std::log1p(-2.0 * u);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % (n == 0 ? 1 : n);
  }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

}  // namespace sdrn

#endif  // SDRN_RANDOM_HPP
