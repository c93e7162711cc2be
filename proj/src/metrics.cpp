#include "treerules/metrics.hpp"

#include <string>

#include "treerules/error.hpp"

namespace treerules {

namespace {

void check_lengths(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels) {
  if (predictions.size() != labels.size() || labels.empty()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(predictions.size()) + " predictions vs " +
                                               std::to_string(labels.size()) + " labels");
  }
}

}  // namespace

double f1_score(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels,
                std::uint8_t positive_class) {
  check_lengths(predictions, labels);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = predictions[i] == positive_class;
    const bool actual = labels[i] == positive_class;
    tp += pred && actual;
    fp += pred && !actual;
    fn += !pred && actual;
  }
  // 2PR/(P+R) == 2TP/(2TP+FP+FN), and is 0 exactly when TP == 0.
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double accuracy(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels) {
  check_lengths(predictions, labels);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += predictions[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

}  // namespace treerules
