#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "treerules/dataset.hpp"

namespace treerules {

// Node of a binary threshold tree. Internal nodes route `x[feature] <= threshold`
// to `left` and everything else to `right`; leaves carry class counts.
struct TreeNode {
  static constexpr std::int32_t kNone = -1;

  std::uint32_t feature = 0;
  double threshold = 0.0;
  std::int32_t left = kNone;
  std::int32_t right = kNone;
  ClassCounts counts{0, 0};

  bool is_leaf() const noexcept { return left == kNone; }
  bool operator==(const TreeNode&) const = default;
};

// Nodes stored in a flat array, root at index 0.
struct Tree {
  std::vector<TreeNode> nodes;

  const TreeNode& root() const { return nodes.front(); }
  std::size_t leaf_index(std::span<const double> x) const;
  std::size_t leaf_index(const Dataset& ds, std::size_t i) const;
  std::size_t n_leaves() const;
  std::size_t depth() const;
  bool operator==(const Tree&) const = default;
};

enum class EnsembleKind { Independent, Dependent };

struct Ensemble {
  std::vector<Tree> trees;
  EnsembleKind kind = EnsembleKind::Independent;
  std::size_t m = 0;

  std::size_t size() const noexcept { return trees.size(); }
};

struct TrainConfig {
  std::size_t n_trees = 1;
  std::size_t max_depth = 3;
  bool bootstrap = false;
  double feature_subsample = 1.0;
  std::size_t min_leaf = 1;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

// Greedy Gini CART. Uses cfg.max_depth, cfg.min_leaf; ignores n_trees/bootstrap.
Ensemble train_cart(const Dataset& ds, const TrainConfig& cfg);
Ensemble train_forest(const Dataset& ds, const TrainConfig& cfg);

std::uint8_t predict_ensemble(const Ensemble& h, std::span<const double> x);
std::size_t n_rules(const Ensemble& h);

std::string export_json(const Ensemble& h);
void export_json(const Ensemble& h, const std::filesystem::path& path);
// Parses the ensemble and recomputes every leaf's counts by routing `ds`.
Ensemble import_json_string(const std::string& text, const Dataset& ds);
Ensemble import_json(const std::filesystem::path& path, const Dataset& ds);

// Overwrites leaf counts with the class counts of `ds` routed through each tree.
void recount_leaves(Ensemble& h, const Dataset& ds);

}  // namespace treerules
