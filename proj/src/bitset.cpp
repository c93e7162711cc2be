#include "treerules/bitset.hpp"

#include <cassert>

namespace treerules {

CoverageBitset::CoverageBitset(std::size_t size, bool value)
    : words_((size + 63) / 64, value ? ~std::uint64_t{0} : 0), size_(size) {
  recount();
}

void CoverageBitset::set(std::size_t i) {
  assert(i < size_);
  std::uint64_t& w = words_[i >> 6];
  const std::uint64_t mask = std::uint64_t{1} << (i & 63);
  if (!(w & mask)) {
    w |= mask;
    ++count_;
  }
}

void CoverageBitset::reset(std::size_t i) {
  assert(i < size_);
  std::uint64_t& w = words_[i >> 6];
  const std::uint64_t mask = std::uint64_t{1} << (i & 63);
  if (w & mask) {
    w &= ~mask;
    --count_;
  }
}

CoverageBitset& CoverageBitset::operator&=(const CoverageBitset& other) {
  assert(size_ == other.size_);
  std::size_t c = 0;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    words_[w] &= other.words_[w];
    c += static_cast<std::size_t>(std::popcount(words_[w]));
  }
  count_ = c;
  return *this;
}

CoverageBitset& CoverageBitset::operator|=(const CoverageBitset& other) {
  assert(size_ == other.size_);
  std::size_t c = 0;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    words_[w] |= other.words_[w];
    c += static_cast<std::size_t>(std::popcount(words_[w]));
  }
  count_ = c;
  return *this;
}

CoverageBitset& CoverageBitset::subtract(const CoverageBitset& other) {
  assert(size_ == other.size_);
  std::size_t c = 0;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    words_[w] &= ~other.words_[w];
    c += static_cast<std::size_t>(std::popcount(words_[w]));
  }
  count_ = c;
  return *this;
}

std::size_t CoverageBitset::intersect_count(const CoverageBitset& other) const {
  assert(size_ == other.size_);
  std::size_t c = 0;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    c += static_cast<std::size_t>(std::popcount(words_[w] & other.words_[w]));
  }
  return c;
}

std::size_t CoverageBitset::intersect_count(const CoverageBitset& a, const CoverageBitset& b) const {
  assert(size_ == a.size_ && size_ == b.size_);
  std::size_t c = 0;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    c += static_cast<std::size_t>(std::popcount(words_[w] & a.words_[w] & b.words_[w]));
  }
  return c;
}

std::pair<std::size_t, std::size_t> CoverageBitset::intersect_counts(const CoverageBitset& a,
                                                                    const CoverageBitset& b) const {
  assert(size_ == a.size_ && size_ == b.size_);
  std::size_t ca = 0, cab = 0;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    const std::uint64_t x = words_[w] & a.words_[w];
    ca += static_cast<std::size_t>(std::popcount(x));
    cab += static_cast<std::size_t>(std::popcount(x & b.words_[w]));
  }
  return {ca, cab};
}

void CoverageBitset::recount() {
  if (!words_.empty() && (size_ & 63) != 0) {
    words_.back() &= (std::uint64_t{1} << (size_ & 63)) - 1;
  }
  std::size_t c = 0;
  for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
  count_ = c;
}

}  // namespace treerules
