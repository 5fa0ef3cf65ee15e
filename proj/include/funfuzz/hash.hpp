#pragma once

// Stable hashing used for content addressing, crash digests and the
// deterministic test doubles. Everything here is fixed by construction:
// no seed salting from the environment, identical output on every platform.

#include <array>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace funfuzz {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : data) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

struct Digest128 {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;
  bool operator==(const Digest128&) const = default;
  auto operator<=>(const Digest128&) const = default;
};

namespace detail {

inline std::uint64_t rotl64(std::uint64_t x, int r) {
  return (x << r) | (x >> (64 - r));
}

inline std::uint64_t fmix64(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdull;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ull;
  k ^= k >> 33;
  return k;
}

inline std::uint64_t load_le64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace detail

// MurmurHash3 x64 128, Austin Appleby's public-domain finalizer constants.
// Chosen as the stable 128-bit digest for crash fingerprints; the algorithm
// name is recorded in every ledger header so digests stay comparable.
inline Digest128 murmur3_x64_128(std::string_view data, std::uint64_t seed = 0) {
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  const std::size_t len = data.size();
  const std::size_t nblocks = len / 16;

  std::uint64_t h1 = seed, h2 = seed;
  const std::uint64_t c1 = 0x87c37b91114253d5ull;
  const std::uint64_t c2 = 0x4cf5ad432745937full;

  for (std::size_t i = 0; i < nblocks; ++i) {
    std::uint64_t k1 = detail::load_le64(p + i * 16);
    std::uint64_t k2 = detail::load_le64(p + i * 16 + 8);
    k1 *= c1; k1 = detail::rotl64(k1, 31); k1 *= c2; h1 ^= k1;
    h1 = detail::rotl64(h1, 27); h1 += h2; h1 = h1 * 5 + 0x52dce729;
    k2 *= c2; k2 = detail::rotl64(k2, 33); k2 *= c1; h2 ^= k2;
    h2 = detail::rotl64(h2, 31); h2 += h1; h2 = h2 * 5 + 0x38495ab5;
  }

  const unsigned char* tail = p + nblocks * 16;
  std::uint64_t k1 = 0, k2 = 0;
  switch (len & 15) {
    case 15: k2 ^= std::uint64_t(tail[14]) << 48; [[fallthrough]];
    case 14: k2 ^= std::uint64_t(tail[13]) << 40; [[fallthrough]];
    case 13: k2 ^= std::uint64_t(tail[12]) << 32; [[fallthrough]];
    case 12: k2 ^= std::uint64_t(tail[11]) << 24; [[fallthrough]];
    case 11: k2 ^= std::uint64_t(tail[10]) << 16; [[fallthrough]];
    case 10: k2 ^= std::uint64_t(tail[9]) << 8; [[fallthrough]];
    case 9:
      k2 ^= std::uint64_t(tail[8]);
      k2 *= c2; k2 = detail::rotl64(k2, 33); k2 *= c1; h2 ^= k2;
      [[fallthrough]];
    case 8: k1 ^= std::uint64_t(tail[7]) << 56; [[fallthrough]];
    case 7: k1 ^= std::uint64_t(tail[6]) << 48; [[fallthrough]];
    case 6: k1 ^= std::uint64_t(tail[5]) << 40; [[fallthrough]];
    case 5: k1 ^= std::uint64_t(tail[4]) << 32; [[fallthrough]];
    case 4: k1 ^= std::uint64_t(tail[3]) << 24; [[fallthrough]];
    case 3: k1 ^= std::uint64_t(tail[2]) << 16; [[fallthrough]];
    case 2: k1 ^= std::uint64_t(tail[1]) << 8; [[fallthrough]];
    case 1:
      k1 ^= std::uint64_t(tail[0]);
      k1 *= c1; k1 = detail::rotl64(k1, 31); k1 *= c2; h1 ^= k1;
      break;
    case 0: break;
  }

  h1 ^= std::uint64_t(len); h2 ^= std::uint64_t(len);
  h1 += h2; h2 += h1;
  h1 = detail::fmix64(h1); h2 = detail::fmix64(h2);
  h1 += h2; h2 += h1;
  return Digest128{h1, h2};
}

inline std::string to_hex(std::uint64_t v, int width = 16) {
  static const char* digits = "0123456789abcdef";
  std::string out(width, '0');
  for (int i = width - 1; i >= 0 && v; --i, v >>= 4) out[i] = digits[v & 15];
  return out;
}

inline std::string to_hex(const Digest128& d) {
  return to_hex(d.hi) + to_hex(d.lo);
}

// Short stable name for content-addressed program files.
inline std::string content_address(std::string_view source) {
  return to_hex(murmur3_x64_128(source));
}

}  // namespace funfuzz
