#pragma once

// Exact line-coverage sets. Elements are (unit_id, line) pairs packed into a
// single 64-bit key; unit ids come from an interner so equality is cheap and
// set algebra is exact, never approximate.

#include <algorithm>
#include <cstdint>
#include <unordered_set>
#include <vector>

namespace funfuzz {

struct CoveragePoint {
  std::uint32_t unit_id = 0;
  std::uint32_t line = 0;
  bool operator==(const CoveragePoint&) const = default;
  auto operator<=>(const CoveragePoint&) const = default;
};

class CoverageSet {
 public:
  static std::uint64_t pack(std::uint32_t unit_id, std::uint32_t line) {
    return (std::uint64_t(unit_id) << 32) | line;
  }
  static CoveragePoint unpack(std::uint64_t key) {
    return CoveragePoint{std::uint32_t(key >> 32), std::uint32_t(key & 0xffffffffu)};
  }

  void insert(std::uint32_t unit_id, std::uint32_t line) { keys_.insert(pack(unit_id, line)); }
  void insert_key(std::uint64_t key) { keys_.insert(key); }

  bool contains(std::uint32_t unit_id, std::uint32_t line) const {
    return keys_.contains(pack(unit_id, line));
  }
  bool contains_key(std::uint64_t key) const { return keys_.contains(key); }

  std::size_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }
  void clear() { keys_.clear(); }

  void union_in_place(const CoverageSet& other) {
    for (auto k : other.keys_) keys_.insert(k);
  }

  // |other \ this|: the marginal contribution of `other` over this frontier.
  std::size_t count_new(const CoverageSet& other) const {
    std::size_t n = 0;
    for (auto k : other.keys_)
      if (!keys_.contains(k)) ++n;
    return n;
  }

  std::size_t intersection_size(const CoverageSet& other) const {
    const CoverageSet& small = size() <= other.size() ? *this : other;
    const CoverageSet& large = size() <= other.size() ? other : *this;
    std::size_t n = 0;
    for (auto k : small.keys_)
      if (large.keys_.contains(k)) ++n;
    return n;
  }

  // Sorted element list; the canonical order for serialization and digests.
  std::vector<std::uint64_t> sorted_keys() const {
    std::vector<std::uint64_t> out(keys_.begin(), keys_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  bool operator==(const CoverageSet& other) const { return keys_ == other.keys_; }

  auto begin() const { return keys_.begin(); }
  auto end() const { return keys_.end(); }

 private:
  std::unordered_set<std::uint64_t> keys_;
};

}  // namespace funfuzz
