#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

namespace saod {

// Counter-based random streams.
//
// A stream is identified by (seed, tag, id) and yields mix(key + k * gamma)
// for k = 1, 2, ... . Two streams with different keys never share state, so
// results do not depend on the order or thread in which streams are drawn.
// The distribution transforms are written out here instead of using <random>
// distributions, whose output is implementation-defined.

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t stream_key(std::uint64_t seed, std::string_view tag,
                                   std::uint64_t id) noexcept {
  return splitmix64(splitmix64(seed ^ fnv1a64(tag)) ^ splitmix64(id + 0x632be59bd9b4e019ULL));
}

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string_view tag, std::uint64_t id = 0)
      : key_(stream_key(seed, tag, id)) {}
  explicit RandomStream(std::uint64_t key) : key_(key) {}

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t draws() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return splitmix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  // Uniform integer in [lo, hi], unbiased (Lemire's rejection).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
    if (hi <= lo) return lo;
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    if (range == 0) return static_cast<std::int64_t>(next_u64());
    const std::uint64_t threshold = (0 - range) % range;
    for (;;) {
      const std::uint64_t r = next_u64();
      __extension__ using u128 = unsigned __int128;
      const u128 m = static_cast<u128>(r) * range;
      if (static_cast<std::uint64_t>(m) >= threshold)
        return lo + static_cast<std::int64_t>(m >> 64);
    }
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  // Standard normal via Box-Muller; one draw pair per call.
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sigma) noexcept {
    if (sigma == 0.0) return mean;
    return mean + sigma * normal();
  }

  // Knuth's product method; intended for small rates.
  std::int64_t poisson(double lambda) noexcept {
    if (lambda <= 0.0) return 0;
    const double limit = std::exp(-lambda);
    std::int64_t k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(items[i - 1], items[j]);
    }
  }

  // k distinct positions from [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    k = std::min(k, n);
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = static_cast<std::size_t>(
          uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(n) - 1));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace saod
