#pragma once

#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

namespace treerules {

enum class Op : std::uint8_t { LE = 0, GT = 1 };

// Atomic threshold predicate `x[feature] <= threshold` or `x[feature] > threshold`.
// Identity is the (feature, op, threshold-bits) triple.
struct Condition {
  std::uint32_t feature = 0;
  Op op = Op::LE;
  double threshold = 0.0;

  bool holds(double value) const noexcept {
    return op == Op::LE ? value <= threshold : value > threshold;
  }

  Condition complement() const noexcept {
    return {feature, op == Op::LE ? Op::GT : Op::LE, threshold};
  }

  friend bool operator==(const Condition& a, const Condition& b) noexcept {
    return a.feature == b.feature && a.op == b.op &&
           std::bit_cast<std::uint64_t>(a.threshold) == std::bit_cast<std::uint64_t>(b.threshold);
  }

  // Canonical order: feature, then LE before GT, then threshold. Thresholds that
  // compare equal but differ in bits (+0/-0) fall back to the bit pattern.
  friend std::strong_ordering operator<=>(const Condition& a, const Condition& b) noexcept {
    if (auto c = a.feature <=> b.feature; c != 0) return c;
    if (auto c = a.op <=> b.op; c != 0) return c;
    if (a.threshold < b.threshold) return std::strong_ordering::less;
    if (b.threshold < a.threshold) return std::strong_ordering::greater;
    return std::bit_cast<std::uint64_t>(a.threshold) <=> std::bit_cast<std::uint64_t>(b.threshold);
  }
};

std::string to_string(const Condition& c);

struct ConditionHash {
  std::size_t operator()(const Condition& c) const noexcept {
    std::uint64_t h = std::bit_cast<std::uint64_t>(c.threshold);
    h ^= (static_cast<std::uint64_t>(c.feature) << 1 | static_cast<std::uint64_t>(c.op)) *
         0x9E3779B97F4A7C15ULL;
    h ^= h >> 33;
    h *= 0xFF51AFD7ED558CCDULL;
    h ^= h >> 33;
    return static_cast<std::size_t>(h);
  }
};

}  // namespace treerules
