#pragma once

#include <cstdint>
#include <span>

namespace treerules {

// F1 of `positive_class`; 0 when precision + recall is 0. Throws LengthMismatch
// on unequal or empty inputs.
double f1_score(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels,
                std::uint8_t positive_class);
double accuracy(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels);

}  // namespace treerules
