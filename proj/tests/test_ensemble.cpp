#include <doctest.h>

#include <random>

#include "oracle.hpp"
#include "treerules/ensemble.hpp"
#include "treerules/error.hpp"

using namespace treerules;

namespace {

Tree stump(std::uint32_t feature, double thr, ClassCounts left, ClassCounts right) {
  Tree t;
  TreeNode root;
  root.feature = feature;
  root.threshold = thr;
  root.left = 1;
  root.right = 2;
  root.counts = {left[0] + right[0], left[1] + right[1]};
  TreeNode l, r;
  l.counts = left;
  r.counts = right;
  t.nodes = {root, l, r};
  return t;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::InvalidConfig;
}

std::size_t max_path(const Tree& t, std::size_t node = 0) {
  const auto& nd = t.nodes[node];
  if (nd.is_leaf()) return 0;
  return 1 + std::max(max_path(t, nd.left), max_path(t, nd.right));
}

}  // namespace

TEST_SUITE("ensemble") {
  TEST_CASE("1-D stump splits at the midpoint with pure leaves") {
    const auto ds = Dataset::from_rows({{0}, {1}, {2}, {3}}, {0, 0, 1, 1});
    TrainConfig cfg;
    cfg.max_depth = 1;
    const auto h = train_cart(ds, cfg);
    REQUIRE(h.trees.size() == 1);
    const auto& t = h.trees[0];
    REQUIRE(t.nodes.size() == 3);
    CHECK(t.root().feature == 0);
    CHECK(t.root().threshold == 1.5);
    CHECK(t.nodes[t.root().left].counts == ClassCounts{2, 0});
    CHECK(t.nodes[t.root().right].counts == ClassCounts{0, 2});
  }

  TEST_CASE("pure-label data gives a single leaf") {
    const auto ds = Dataset::from_rows({{0}, {1}, {2}}, {1, 1, 1});
    const auto h = train_cart(ds, TrainConfig{});
    REQUIRE(h.trees[0].nodes.size() == 1);
    CHECK(h.trees[0].nodes[0].counts == ClassCounts{0, 3});
  }

  TEST_CASE("identical features with mixed labels give a leaf, not an error") {
    const auto ds = Dataset::from_rows({{5, 5}, {5, 5}, {5, 5}}, {0, 1, 0});
    const auto h = train_cart(ds, TrainConfig{});
    CHECK(h.trees[0].nodes.size() == 1);
  }

  TEST_CASE("XOR needs both levels and ends in four pure leaves") {
    const auto ds = Dataset::from_rows({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {0, 1, 1, 0});
    TrainConfig cfg;
    cfg.max_depth = 2;
    const auto h = train_cart(ds, cfg);
    const auto& t = h.trees[0];
    CHECK(t.n_leaves() == 4);
    for (const auto& nd : t.nodes) {
      if (nd.is_leaf()) CHECK((nd.counts == ClassCounts{1, 0} || nd.counts == ClassCounts{0, 1}));
    }
  }

  TEST_CASE("forest size bound and determinism") {
    std::mt19937_64 rng(3);
    const auto ds = oracle::to_dataset(oracle::random_data(rng, 120, 4));
    TrainConfig cfg;
    cfg.n_trees = 10;
    cfg.max_depth = 3;
    cfg.bootstrap = true;
    cfg.feature_subsample = 0.5;
    cfg.seed = 99;
    const auto a = train_forest(ds, cfg);
    CHECK(a.trees.size() == 10);
    CHECK(n_rules(a) <= 80);
    const auto b = train_forest(ds, cfg);
    CHECK(a.trees == b.trees);
    cfg.seed = 100;
    CHECK_FALSE(train_forest(ds, cfg).trees == a.trees);
  }

  TEST_CASE("training validates its configuration") {
    const auto ds = Dataset::from_rows({{0}, {1}}, {0, 1});
    TrainConfig cfg;
    cfg.max_depth = 0;
    CHECK(kind_of([&] { train_cart(ds, cfg); }) == ErrorKind::InvalidConfig);
    cfg = {};
    cfg.n_trees = 0;
    CHECK(kind_of([&] { train_forest(ds, cfg); }) == ErrorKind::InvalidConfig);
  }

  TEST_CASE("property: native trees conserve counts and respect max depth") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
      const auto ds = oracle::to_dataset(oracle::random_data(rng, 30 + rng() % 100, 1 + rng() % 5));
      TrainConfig cfg;
      cfg.n_trees = 5;
      cfg.max_depth = 1 + rng() % 5;
      cfg.bootstrap = trial % 2;
      cfg.seed = trial;
      const auto h = train_forest(ds, cfg);
      for (const auto& t : h.trees) {
        std::int64_t total = 0;
        for (const auto& nd : t.nodes) {
          if (nd.is_leaf()) total += nd.counts[0] + nd.counts[1];
        }
        CHECK(total == static_cast<std::int64_t>(ds.n()));
        CHECK(max_path(t) <= cfg.max_depth);
      }
    }
  }

  TEST_CASE("import recounts leaves by routing") {
    const auto ds = Dataset::from_rows({{0.0}, {1.0}, {2.0}, {3.0}}, {0, 1, 1, 1});
    oracle::TempFile f("stump.json",
                       R"({"kind":"dependent","m":1,"trees":[{"feature":0,"threshold":1.5,)"
                       R"("left":{"counts":[100,100]},"right":{}}]})");
    const auto h = import_json(f.path, ds);
    CHECK(h.kind == EnsembleKind::Dependent);
    const auto& t = h.trees[0];
    CHECK(t.nodes[t.root().left].counts == ClassCounts{1, 1});
    CHECK(t.nodes[t.root().right].counts == ClassCounts{0, 2});
  }

  TEST_CASE("import rejections") {
    const auto ds = Dataset::from_rows({{0.0}, {1.0}}, {0, 1});
    CHECK(kind_of([&] { import_json_string(R"({"kind":"independent","m":1,"trees":[]})", ds); }) ==
          ErrorKind::SchemaError);
    CHECK(kind_of([&] { import_json_string(R"({"kind":"forest","m":1,"trees":[{}]})", ds); }) ==
          ErrorKind::SchemaError);
    CHECK(kind_of([&] { import_json_string("not json", ds); }) == ErrorKind::SchemaError);
    CHECK(kind_of([&] {
            import_json_string(
                R"({"kind":"independent","m":1,"trees":[{"feature":3,"threshold":0,"left":{},"right":{}}]})", ds);
          }) == ErrorKind::FeatureOutOfRange);
    CHECK(kind_of([&] {
            import_json_string(R"({"kind":"independent","m":1,"trees":[{"feature":0,"threshold":0,"left":{}}]})",
                               ds);
          }) == ErrorKind::SchemaError);
  }

  TEST_CASE("export then import is the identity on structure and thresholds") {
    std::mt19937_64 rng(17);
    auto raw = oracle::random_data(rng, 80, 3);
    for (auto& row : raw.rows) {
      for (auto& v : row) v += std::uniform_real_distribution<double>(0, 1)(rng) / 3.0;
    }
    const auto ds = oracle::to_dataset(raw);
    TrainConfig cfg;
    cfg.n_trees = 6;
    cfg.max_depth = 4;
    cfg.seed = 1;
    const auto h = train_forest(ds, cfg);
    const auto text = export_json(h);
    const auto back = import_json_string(text, ds);
    CHECK(export_json(back) == text);
    REQUIRE(back.trees.size() == h.trees.size());
    for (std::size_t k = 0; k < h.trees.size(); ++k) {
      REQUIRE(back.trees[k].nodes.size() == h.trees[k].nodes.size());
      for (std::size_t i = 0; i < h.trees[k].nodes.size(); ++i) {
        CHECK(back.trees[k].nodes[i].threshold == h.trees[k].nodes[i].threshold);
        CHECK(back.trees[k].nodes[i].feature == h.trees[k].nodes[i].feature);
      }
    }
  }

  TEST_CASE("predict_ensemble examples") {
    Ensemble one;
    one.m = 1;
    one.trees = {stump(0, 0.5, {3, 1}, {1, 2})};
    CHECK(predict_ensemble(one, std::vector<double>{0.0}) == 0);
    CHECK(predict_ensemble(one, std::vector<double>{1.0}) == 1);

    Ensemble vote;
    vote.m = 1;
    vote.trees = {stump(0, 0.5, {5, 0}, {5, 0}), stump(0, 0.5, {5, 0}, {5, 0}), stump(0, 0.5, {0, 5}, {0, 5})};
    CHECK(predict_ensemble(vote, std::vector<double>{0.0}) == 0);

    Ensemble dep;
    dep.m = 1;
    dep.kind = EnsembleKind::Dependent;
    dep.trees = {stump(0, 0.5, {9, 1}, {9, 1}), stump(0, 0.5, {2, 8}, {2, 8})};
    CHECK(predict_ensemble(dep, std::vector<double>{0.0}) == 0);

    Ensemble tie;
    tie.m = 1;
    tie.trees = {stump(0, 0.5, {5, 0}, {5, 0}), stump(0, 0.5, {0, 5}, {0, 5})};
    CHECK(predict_ensemble(tie, std::vector<double>{0.0}) == 0);

    CHECK(kind_of([&] { predict_ensemble(one, std::vector<double>{0.0, 1.0}); }) ==
          ErrorKind::DimensionMismatch);
  }

  TEST_CASE("n_rules counts leaves") {
    Ensemble h;
    Tree three = stump(0, 0.5, {1, 0}, {0, 1});
    // grow the right leaf into a split: 3 leaves
    three.nodes[2].left = 3;
    three.nodes[2].right = 4;
    three.nodes.push_back(TreeNode{});
    three.nodes.push_back(TreeNode{});
    Tree four = three;
    four.nodes[1].left = 5;
    four.nodes[1].right = 6;
    four.nodes.push_back(TreeNode{});
    four.nodes.push_back(TreeNode{});
    h.trees = {three, four};
    CHECK(n_rules(h) == 7);

    Ensemble leaf;
    leaf.trees = {Tree{{TreeNode{}}}};
    CHECK(n_rules(leaf) == 1);

    Ensemble stumps;
    for (int k = 0; k < 9; ++k) stumps.trees.push_back(stump(0, k, {1, 0}, {0, 1}));
    CHECK(n_rules(stumps) == 18);
  }
}
