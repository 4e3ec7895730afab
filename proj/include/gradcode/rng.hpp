#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace gradcode {

// splitmix64; used for seed expansion and substream derivation.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic random stream.
//
// The engine is std::mt19937_64, whose output sequence is fully specified by
// the standard, and every floating-point draw goes through our own transforms,
// so a given seed reproduces bit-identical streams across platforms and runs.
// One instance per thread; instances may be moved between threads but must not
// be shared.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t root_seed() const { return seed_; }

  // Derives an independent stream from this stream's seed and a tag path,
  // e.g. rng.substream({kDelays, t}) for the iteration-t delay draws. The
  // derivation depends only on the seed and tags, not on draw position.
  Rng substream(std::initializer_list<std::uint64_t> tags) const {
    std::uint64_t h = seed_;
    for (std::uint64_t t : tags) h = splitmix64(h ^ splitmix64(t));
    return Rng(h);
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Exponential with the given rate, via inverse CDF.
  double exponential(double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be positive");
    return -std::log1p(-uniform01()) / rate;
  }

  // Standard normal (Box-Muller, no caching so the draw count is predictable).
  double normal() {
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [lo, hi], bias-free by rejection.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
    std::uint64_t span = hi - lo + 1;
    if (span == 0) return next_u64();  // full 64-bit range
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return lo + x % span;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Uniformly random r-subset of {0, ..., k-1} via partial Fisher-Yates.
inline std::vector<int> random_subset(int k, int r, Rng& rng) {
  if (r < 0 || r > k) throw std::invalid_argument("random_subset: need 0 <= r <= k");
  std::vector<int> pool(k);
  for (int i = 0; i < k; ++i) pool[i] = i;
  for (int i = 0; i < r; ++i) {
    int j = static_cast<int>(rng.uniform_int(i, k - 1));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(r);
  return pool;
}

}  // namespace gradcode
