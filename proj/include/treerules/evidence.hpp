#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "treerules/dataset.hpp"

namespace treerules {

// Class-wise log-likelihood evidence, held in fixed point (units of 2^-44 nats).
// Integer addition is associative, so E(a) + E(b) - E(shared) is bit-identical
// to summing the union's atoms in any order. Quantization error per atom is
// below 3e-14 nats; the representable range is about +/-5e5 nats.
class Evidence {
 public:
  static constexpr double kScale = 17592186044416.0;  // 2^44

  Evidence() = default;

  static Evidence from_log(const ClassProbs& logs) {
    Evidence e;
    for (std::size_t y = 0; y < kNumClasses; ++y) e.raw_[y] = std::llround(logs[y] * kScale);
    return e;
  }

  double operator[](std::size_t y) const { return static_cast<double>(raw_[y]) / kScale; }
  ClassProbs values() const { return {(*this)[0], (*this)[1]}; }
  const std::array<std::int64_t, kNumClasses>& raw() const noexcept { return raw_; }

  Evidence& operator+=(const Evidence& o) {
    for (std::size_t y = 0; y < kNumClasses; ++y) raw_[y] += o.raw_[y];
    return *this;
  }
  Evidence& operator-=(const Evidence& o) {
    for (std::size_t y = 0; y < kNumClasses; ++y) raw_[y] -= o.raw_[y];
    return *this;
  }
  friend Evidence operator+(Evidence a, const Evidence& b) { return a += b; }
  friend Evidence operator-(Evidence a, const Evidence& b) { return a -= b; }
  bool operator==(const Evidence&) const = default;

 private:
  std::array<std::int64_t, kNumClasses> raw_{0, 0};
};

}  // namespace treerules
