#pragma once

// Deterministic random streams. Campaigns must replay bit-identically across
// platforms, so the generator and every derived distribution are spelled out
// here instead of using std distributions, whose output is
// implementation-defined.

#include <cstdint>
#include <string_view>
#include <vector>

#include "funfuzz/hash.hpp"

namespace funfuzz {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// xoshiro256** seeded via splitmix64. One instance per named stream; streams
// with distinct (seed, label) pairs are statistically independent.
class Rng {
 public:
  Rng() : Rng(0x853c49e6748fea9bull) {}

  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl64(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl64(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01() {
    return double(next_u64() >> 11) * (1.0 / 9007199254740992.0);
  }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  bool coin(double p) { return uniform01() < p; }

  std::size_t index(std::size_t n) { return std::size_t(below(n)); }

  // Sample k distinct indices from [0, n) without replacement.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    if (k > n) k = n;
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + index(n - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

 private:
  std::uint64_t s_[4];
};

// Derives the stream for a named role within a campaign. Identical
// (seed, label) pairs yield identical sequences on every platform.
inline Rng new_campaign_rng(std::uint64_t seed, std::string_view stream_label) {
  return Rng(seed ^ fnv1a64(stream_label));
}

}  // namespace funfuzz
