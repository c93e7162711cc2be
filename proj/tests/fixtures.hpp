#pragma once
// Hand-built 50-instance, two-binary-feature data with two stumps, one per feature.
//
//   cell (x0,x1)  class0  class1
//   (0,0)           20      0
//   (0,1)            4      1
//   (1,0)            1      4
//   (1,1)            0     20
//
// Tree 1 splits x0 <= 0.5 with leaves (24,1) | (1,24); tree 2 splits x1 <= 0.5
// with leaves (21,4) | (4,21).
//
// Hand trace, exact counting, z = 1.15:
//   R* from tree 1: A = x0<=0.5 (24,1) and B = x0>0.5 (1,24). Covering takes A then
//   B (equal confidence and coverage, A is canonically first). Single-condition
//   rules are not generalized. F1(class 1) = 2*24/(2*24+1+1) = 0.96.
//   Tree 2: four candidates, no contradictions: C00 (20,0), C01 (4,1), C10 (1,4),
//   C11 (0,20). Covering picks C00, C11 (confidence 1), then C01, C10 (0.8).
//   Generalization, e_upper with the current value first:
//     C00: 0.06202; drop x0 -> 0.26101, drop x1 -> 0.11274  => kept
//     C01: 0.45616; drop x1 -> x0<=0.5 (24,1) 0.11274       => becomes A
//     C10: 0.45616; drop x1 -> x0>0.5 (1,24) 0.11274        => becomes B
//     C11: 0.06202                                            => kept
//   Four rules with the same predictions as R*: F1 0.96 ties, more rules, R* kept.
//   Default: everything covered, dataset majority ties 25/25 -> class 0.

#include <vector>

#include "treerules/dataset.hpp"
#include "treerules/ensemble.hpp"

namespace fixtures {

struct TwoStump {
  treerules::Dataset ds;
  treerules::Ensemble h;
};

inline treerules::Tree stump_on(std::uint32_t feature) {
  treerules::Tree t;
  treerules::TreeNode root;
  root.feature = feature;
  root.threshold = 0.5;
  root.left = 1;
  root.right = 2;
  t.nodes = {root, treerules::TreeNode{}, treerules::TreeNode{}};
  return t;
}

inline TwoStump two_stump() {
  std::vector<std::vector<double>> rows;
  std::vector<std::uint8_t> labels;
  auto cell = [&](double x0, double x1, int n0, int n1) {
    for (int i = 0; i < n0; ++i) {
      rows.push_back({x0, x1});
      labels.push_back(0);
    }
    for (int i = 0; i < n1; ++i) {
      rows.push_back({x0, x1});
      labels.push_back(1);
    }
  };
  cell(0, 0, 20, 0);
  cell(0, 1, 4, 1);
  cell(1, 0, 1, 4);
  cell(1, 1, 0, 20);
  TwoStump f{treerules::Dataset::from_rows(rows, labels), {}};
  f.h.m = 2;
  f.h.trees = {stump_on(0), stump_on(1)};
  treerules::recount_leaves(f.h, f.ds);
  return f;
}

}  // namespace fixtures
