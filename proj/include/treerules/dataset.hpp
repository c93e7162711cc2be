#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "treerules/bitset.hpp"
#include "treerules/condition.hpp"

namespace treerules {

inline constexpr std::size_t kNumClasses = 2;

using ClassCounts = std::array<std::int64_t, kNumClasses>;
using ClassProbs = std::array<double, kNumClasses>;

// Binary-labelled numeric dataset. Features are stored column-major because
// condition evaluation walks one feature over all instances.
class Dataset {
 public:
  Dataset() = default;
  // `columns[j][i]` is feature j of instance i. Validates shape, finiteness and
  // labels; throws Error on violation.
  Dataset(std::vector<std::vector<double>> columns, std::vector<std::uint8_t> labels,
          std::vector<std::string> feature_names, std::array<std::string, kNumClasses> class_names);

  static Dataset from_rows(const std::vector<std::vector<double>>& rows,
                           std::vector<std::uint8_t> labels);

  std::size_t n() const noexcept { return labels_.size(); }
  std::size_t m() const noexcept { return columns_.size(); }

  double value(std::size_t i, std::size_t j) const { return columns_[j][i]; }
  std::span<const double> column(std::size_t j) const { return columns_[j]; }
  std::vector<double> row(std::size_t i) const;
  std::uint8_t label(std::size_t i) const { return labels_[i]; }
  const std::vector<std::uint8_t>& labels() const noexcept { return labels_; }

  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::array<std::string, kNumClasses>& class_names() const noexcept { return class_names_; }

  ClassCounts class_counts() const;
  // Bits set where label == 1; class-0 membership is its complement.
  const CoverageBitset& positive_mask() const noexcept { return positive_; }
  bool has_both_classes() const;
  // Throws MissingClass unless both classes are present.
  void require_both_classes() const;

  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<std::vector<double>> columns_;
  std::vector<std::uint8_t> labels_;
  std::vector<std::string> feature_names_;
  std::array<std::string, kNumClasses> class_names_;
  CoverageBitset positive_;
};

// Label column chosen by header name; std::nullopt selects the last column.
struct LabelColumn {
  std::optional<std::string> name;
  std::optional<std::size_t> index;
};

Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label = {});

CoverageBitset eval_condition(const Dataset& ds, const Condition& cond);

struct FoldPlan {
  std::size_t repeats = 0;
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  // assignments[r][i] = test fold of instance i in repeat r.
  std::vector<std::vector<std::uint32_t>> assignments;

  std::vector<std::size_t> train_indices(std::size_t repeat, std::size_t fold) const;
  std::vector<std::size_t> test_indices(std::size_t repeat, std::size_t fold) const;
};

FoldPlan stratified_folds(const Dataset& ds, std::size_t repeats, std::size_t folds,
                          std::uint64_t seed);
// Same procedure on a bare label vector; used for inner CV on subsets.
FoldPlan stratified_folds(std::span<const std::uint8_t> labels, std::size_t repeats,
                          std::size_t folds, std::uint64_t seed);

}  // namespace treerules
