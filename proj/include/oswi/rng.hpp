#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

namespace oswi {

/// SplitMix64 finalizer; used both to expand seeds and to hash stream keys.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ engine. Satisfies UniformRandomBitGenerator so it plugs into
/// the Boost.Random distributions, whose algorithms (unlike the std ones) are
/// fixed across standard library implementations.
class Rng {
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) noexcept { reseed(seed); }

  /// Independent stream keyed by (seed, k0, k1, ...). Streams depend only on
  /// the key, never on how many other streams were created before.
  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> key) noexcept {
    std::uint64_t state = seed;
    std::uint64_t h = splitmix64(state);
    for (std::uint64_t k : key) {
      std::uint64_t s = h ^ (k + 0x632be59bd9b4e019ULL);
      h = splitmix64(s);
    }
    return Rng(h);
  }

  static Rng substream(std::uint64_t seed, std::uint64_t k0) noexcept { return substream(seed, {k0}); }

  void reseed(std::uint64_t seed) noexcept {
    std::uint64_t st = seed;
    for (auto& w : s_) w = splitmix64(st);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
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

  /// Standard normal draw (ziggurat).
  double normal() { return normal_(*this); }
  double normal(double mean, double stddev) { return mean + stddev * normal_(*this); }
  double uniform(double lo, double hi) { return boost::random::uniform_real_distribution<double>(lo, hi)(*this); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return boost::random::uniform_int_distribution<std::uint64_t>(0, n - 1)(*this);
  }

private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> s_{};
  boost::random::normal_distribution<double> normal_{};
};

/// Fisher-Yates with the library's engine (std::shuffle is implementation defined).
template <typename RandomIt>
void shuffle(RandomIt first, RandomIt last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.below(i);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

} // namespace oswi
