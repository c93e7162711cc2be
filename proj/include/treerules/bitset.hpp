#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace treerules {

// Packed instance-coverage set. Length is fixed at construction and always
// equals the owning dataset's instance count; `count()` is kept in sync with
// the popcount of the words.
class CoverageBitset {
 public:
  CoverageBitset() = default;
  explicit CoverageBitset(std::size_t size, bool value = false);

  std::size_t size() const noexcept { return size_; }
  std::size_t count() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }

  bool test(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1U; }
  void set(std::size_t i);
  void reset(std::size_t i);

  CoverageBitset& operator&=(const CoverageBitset& other);
  CoverageBitset& operator|=(const CoverageBitset& other);
  // this \ other
  CoverageBitset& subtract(const CoverageBitset& other);

  friend CoverageBitset operator&(CoverageBitset a, const CoverageBitset& b) { return a &= b; }
  friend CoverageBitset operator|(CoverageBitset a, const CoverageBitset& b) { return a |= b; }

  // popcount(this & other) without materializing the intersection.
  std::size_t intersect_count(const CoverageBitset& other) const;
  // popcount(this & a & b)
  std::size_t intersect_count(const CoverageBitset& a, const CoverageBitset& b) const;
  // Both of the above in one pass: {popcount(this & a), popcount(this & a & b)}.
  std::pair<std::size_t, std::size_t> intersect_counts(const CoverageBitset& a, const CoverageBitset& b) const;

  const std::vector<std::uint64_t>& words() const noexcept { return words_; }
  std::vector<std::uint64_t>& mutable_words() noexcept { return words_; }
  // Re-derives count after direct word manipulation; clears padding bits.
  void recount();

  template <typename F>
  void for_each_set(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w];
      while (bits) {
        const int tz = std::countr_zero(bits);
        f(w * 64 + static_cast<std::size_t>(tz));
        bits &= bits - 1;
      }
    }
  }

  bool operator==(const CoverageBitset& other) const {
    return size_ == other.size_ && words_ == other.words_;
  }

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
  std::size_t count_ = 0;
};

}  // namespace treerules
