#include "treerules/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "treerules/error.hpp"
#include "treerules/rng.hpp"

namespace treerules {

using nlohmann::ordered_json;

std::size_t Tree::leaf_index(std::span<const double> x) const {
  std::size_t idx = 0;
  while (!nodes[idx].is_leaf()) {
    const auto& nd = nodes[idx];
    idx = static_cast<std::size_t>(x[nd.feature] <= nd.threshold ? nd.left : nd.right);
  }
  return idx;
}

std::size_t Tree::leaf_index(const Dataset& ds, std::size_t i) const {
  std::size_t idx = 0;
  while (!nodes[idx].is_leaf()) {
    const auto& nd = nodes[idx];
    idx = static_cast<std::size_t>(ds.value(i, nd.feature) <= nd.threshold ? nd.left : nd.right);
  }
  return idx;
}

std::size_t Tree::n_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t Tree::depth() const {
  // Depth via parent-first ordering: children always follow their parent.
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) {
      best = std::max(best, d[i]);
      continue;
    }
    d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
    d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
  }
  return best;
}

void validate(const TrainConfig& cfg) {
  if (cfg.n_trees < 1) throw Error(ErrorKind::InvalidConfig, "n_trees must be >= 1");
  if (cfg.max_depth < 1) throw Error(ErrorKind::InvalidConfig, "max_depth must be >= 1");
  if (cfg.min_leaf < 1) throw Error(ErrorKind::InvalidConfig, "min_leaf must be >= 1");
  if (!(cfg.feature_subsample > 0.0 && cfg.feature_subsample <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "feature_subsample must lie in (0, 1]");
  }
}

namespace {

struct SplitChoice {
  bool found = false;
  std::uint32_t feature = 0;
  double threshold = 0.0;
  double score = -1.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& ds, const TrainConfig& cfg, std::mt19937_64* rng)
      : ds_(ds), cfg_(cfg), rng_(rng) {
    const auto m = ds.m();
    n_candidate_features_ = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(cfg.feature_subsample * static_cast<double>(m))), 1, m);
    features_.resize(m);
    std::iota(features_.begin(), features_.end(), 0U);
  }

  Tree build(std::vector<std::size_t> samples) {
    Tree tree;
    tree.nodes.reserve(64);
    tree.nodes.emplace_back();
    grow(tree, 0, samples, 0);
    return tree;
  }

 private:
  void grow(Tree& tree, std::size_t node, std::vector<std::size_t>& samples, std::size_t depth) {
    ClassCounts counts{0, 0};
    for (auto i : samples) ++counts[ds_.label(i)];
    tree.nodes[node].counts = counts;

    const auto n = static_cast<std::int64_t>(samples.size());
    const bool pure = counts[0] == 0 || counts[1] == 0;
    if (pure || depth >= cfg_.max_depth || n < 2 * static_cast<std::int64_t>(cfg_.min_leaf)) return;

    const SplitChoice split = best_split(samples, counts);
    if (!split.found) return;

    std::vector<std::size_t> left, right;
    for (auto i : samples) {
      (ds_.value(i, split.feature) <= split.threshold ? left : right).push_back(i);
    }
    samples.clear();
    samples.shrink_to_fit();

    const auto l = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& nd = tree.nodes[node];
    nd.feature = split.feature;
    nd.threshold = split.threshold;
    nd.left = l;
    nd.right = l + 1;
    nd.counts = counts;
    grow(tree, static_cast<std::size_t>(l), left, depth + 1);
    grow(tree, static_cast<std::size_t>(l) + 1, right, depth + 1);
  }

  std::vector<std::uint32_t> candidate_features() {
    if (rng_ == nullptr || n_candidate_features_ >= features_.size()) return features_;
    std::vector<std::uint32_t> pool = features_;
    for (std::size_t k = 0; k < n_candidate_features_; ++k) {
      const auto j = k + static_cast<std::size_t>(uniform_below(*rng_, pool.size() - k));
      std::swap(pool[k], pool[j]);
    }
    pool.resize(n_candidate_features_);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  // Maximizes sum over children of (c0^2 + c1^2)/n_child, which is equivalent to
  // maximizing the weighted Gini decrease. Strict '>' keeps the lower feature
  // index and lower threshold on ties.
  SplitChoice best_split(const std::vector<std::size_t>& samples, const ClassCounts& total) {
    SplitChoice best;
    const std::int64_t n = static_cast<std::int64_t>(samples.size());
    const auto min_leaf = static_cast<std::int64_t>(cfg_.min_leaf);
    std::vector<std::pair<double, std::uint8_t>> vals(samples.size());
    for (auto f : candidate_features()) {
      for (std::size_t k = 0; k < samples.size(); ++k) {
        vals[k] = {ds_.value(samples[k], f), ds_.label(samples[k])};
      }
      std::sort(vals.begin(), vals.end());
      ClassCounts left{0, 0};
      for (std::int64_t k = 0; k + 1 < n; ++k) {
        ++left[vals[static_cast<std::size_t>(k)].second];
        const double a = vals[static_cast<std::size_t>(k)].first;
        const double b = vals[static_cast<std::size_t>(k) + 1].first;
        if (!(a < b)) continue;
        const std::int64_t nl = k + 1;
        const std::int64_t nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const ClassCounts right{total[0] - left[0], total[1] - left[1]};
        const double score =
            static_cast<double>(left[0] * left[0] + left[1] * left[1]) / static_cast<double>(nl) +
            static_cast<double>(right[0] * right[0] + right[1] * right[1]) / static_cast<double>(nr);
        if (score > best.score) {
          double t = a + (b - a) / 2.0;
          if (!(t < b)) t = a;
          best = {true, f, t, score};
        }
      }
    }
    return best;
  }

  const Dataset& ds_;
  const TrainConfig& cfg_;
  std::mt19937_64* rng_;
  std::size_t n_candidate_features_ = 1;
  std::vector<std::uint32_t> features_;
};

std::uint8_t argmax(const ClassCounts& c) { return c[1] > c[0] ? 1 : 0; }

}  // namespace

Ensemble train_cart(const Dataset& ds, const TrainConfig& cfg) {
  validate(cfg);
  if (ds.n() == 0) throw Error(ErrorKind::EmptyDataset, "cannot train on an empty dataset");
  std::vector<std::size_t> all(ds.n());
  std::iota(all.begin(), all.end(), std::size_t{0});
  TrainConfig single = cfg;
  single.feature_subsample = 1.0;
  TreeBuilder builder(ds, single, nullptr);
  Ensemble h;
  h.kind = EnsembleKind::Independent;
  h.m = ds.m();
  h.trees.push_back(builder.build(std::move(all)));
  return h;
}

Ensemble train_forest(const Dataset& ds, const TrainConfig& cfg) {
  validate(cfg);
  if (ds.n() == 0) throw Error(ErrorKind::EmptyDataset, "cannot train on an empty dataset");
  Ensemble h;
  h.kind = EnsembleKind::Independent;
  h.m = ds.m();
  h.trees.reserve(cfg.n_trees);
  for (std::size_t k = 0; k < cfg.n_trees; ++k) {
    std::mt19937_64 rng(derive_seed(cfg.seed, k));
    std::vector<std::size_t> sample(ds.n());
    if (cfg.bootstrap) {
      for (auto& s : sample) s = static_cast<std::size_t>(uniform_below(rng, ds.n()));
      std::sort(sample.begin(), sample.end());
    } else {
      std::iota(sample.begin(), sample.end(), std::size_t{0});
    }
    TreeBuilder builder(ds, cfg, &rng);
    h.trees.push_back(builder.build(std::move(sample)));
  }
  return h;
}

std::uint8_t predict_ensemble(const Ensemble& h, std::span<const double> x) {
  if (x.size() != h.m) {
    throw Error(ErrorKind::DimensionMismatch,
                "expected " + std::to_string(h.m) + " features, got " + std::to_string(x.size()));
  }
  if (h.kind == EnsembleKind::Independent) {
    std::array<std::size_t, kNumClasses> votes{0, 0};
    for (const auto& t : h.trees) ++votes[argmax(t.nodes[t.leaf_index(x)].counts)];
    return votes[1] > votes[0] ? 1 : 0;
  }
  ClassProbs sum{0.0, 0.0};
  for (const auto& t : h.trees) {
    const auto& c = t.nodes[t.leaf_index(x)].counts;
    const auto total = c[0] + c[1];
    for (std::size_t y = 0; y < kNumClasses; ++y) {
      sum[y] += total > 0 ? static_cast<double>(c[y]) / static_cast<double>(total) : 0.5;
    }
  }
  return sum[1] > sum[0] ? 1 : 0;
}

std::size_t n_rules(const Ensemble& h) {
  std::size_t total = 0;
  for (const auto& t : h.trees) total += t.n_leaves();
  return total;
}

void recount_leaves(Ensemble& h, const Dataset& ds) {
  for (auto& t : h.trees) {
    for (auto& nd : t.nodes) nd.counts = {0, 0};
    for (std::size_t i = 0; i < ds.n(); ++i) {
      ++t.nodes[t.leaf_index(ds, i)].counts[ds.label(i)];
    }
    // Internal nodes hold the sum of their subtree.
    for (std::size_t k = t.nodes.size(); k-- > 0;) {
      auto& nd = t.nodes[k];
      if (nd.is_leaf()) continue;
      const auto& l = t.nodes[static_cast<std::size_t>(nd.left)].counts;
      const auto& r = t.nodes[static_cast<std::size_t>(nd.right)].counts;
      nd.counts = {l[0] + r[0], l[1] + r[1]};
    }
  }
}

namespace {

ordered_json node_to_json(const Tree& t, std::size_t idx) {
  const auto& nd = t.nodes[idx];
  ordered_json j;
  if (nd.is_leaf()) {
    j["counts"] = {nd.counts[0], nd.counts[1]};
    return j;
  }
  j["feature"] = nd.feature;
  j["threshold"] = nd.threshold;
  j["left"] = node_to_json(t, static_cast<std::size_t>(nd.left));
  j["right"] = node_to_json(t, static_cast<std::size_t>(nd.right));
  return j;
}

void node_from_json(const ordered_json& j, Tree& t, std::size_t idx, std::size_t m, std::size_t depth) {
  if (depth > 4096) throw Error(ErrorKind::SchemaError, "tree nesting too deep");
  if (!j.is_object()) throw Error(ErrorKind::SchemaError, "tree node must be an object");
  if (!j.contains("feature")) {
    if (j.contains("left") || j.contains("right") || j.contains("threshold")) {
      throw Error(ErrorKind::SchemaError, "internal node lacks 'feature'");
    }
    if (j.contains("counts")) {
      const auto& c = j["counts"];
      if (!c.is_array() || c.size() != kNumClasses || !c[0].is_number_integer() ||
          !c[1].is_number_integer() || c[0].get<std::int64_t>() < 0 || c[1].get<std::int64_t>() < 0) {
        throw Error(ErrorKind::SchemaError, "'counts' must be two non-negative integers");
      }
      t.nodes[idx].counts = {c[0].get<std::int64_t>(), c[1].get<std::int64_t>()};
    }
    return;
  }
  const auto& f = j["feature"];
  if (!f.is_number_integer() || f.get<std::int64_t>() < 0) {
    throw Error(ErrorKind::SchemaError, "'feature' must be a non-negative integer");
  }
  if (f.get<std::uint64_t>() >= m) {
    throw Error(ErrorKind::FeatureOutOfRange, "feature " + std::to_string(f.get<std::uint64_t>()) +
                                                  " >= m=" + std::to_string(m));
  }
  if (!j.contains("threshold") || !j["threshold"].is_number()) {
    throw Error(ErrorKind::SchemaError, "internal node needs a numeric 'threshold'");
  }
  if (!j.contains("left") || !j.contains("right")) {
    throw Error(ErrorKind::SchemaError, "internal node needs 'left' and 'right'");
  }
  const double thr = j["threshold"].get<double>();
  if (!std::isfinite(thr)) throw Error(ErrorKind::SchemaError, "threshold must be finite");

  const auto l = t.nodes.size();
  t.nodes.emplace_back();
  t.nodes.emplace_back();
  t.nodes[idx].feature = static_cast<std::uint32_t>(f.get<std::uint64_t>());
  t.nodes[idx].threshold = thr;
  t.nodes[idx].left = static_cast<std::int32_t>(l);
  t.nodes[idx].right = static_cast<std::int32_t>(l + 1);
  node_from_json(j["left"], t, l, m, depth + 1);
  node_from_json(j["right"], t, l + 1, m, depth + 1);
}

}  // namespace

std::string export_json(const Ensemble& h) {
  ordered_json j;
  j["kind"] = h.kind == EnsembleKind::Independent ? "independent" : "dependent";
  j["m"] = h.m;
  j["trees"] = ordered_json::array();
  for (const auto& t : h.trees) j["trees"].push_back(node_to_json(t, 0));
  return j.dump();
}

void export_json(const Ensemble& h, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::MissingFile, "cannot write " + path.string());
  out << export_json(h) << '\n';
}

Ensemble import_json_string(const std::string& text, const Dataset& ds) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::SchemaError, e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::SchemaError, "top level must be an object");
  Ensemble h;
  if (!j.contains("kind") || !j["kind"].is_string()) throw Error(ErrorKind::SchemaError, "missing 'kind'");
  const auto kind = j["kind"].get<std::string>();
  if (kind == "independent") {
    h.kind = EnsembleKind::Independent;
  } else if (kind == "dependent") {
    h.kind = EnsembleKind::Dependent;
  } else {
    throw Error(ErrorKind::SchemaError, "unknown kind '" + kind + "'");
  }
  if (!j.contains("m") || !j["m"].is_number_integer() || j["m"].get<std::int64_t>() < 1) {
    throw Error(ErrorKind::SchemaError, "'m' must be a positive integer");
  }
  h.m = j["m"].get<std::size_t>();
  if (h.m != ds.m()) {
    throw Error(ErrorKind::SchemaError, "ensemble expects m=" + std::to_string(h.m) +
                                            " but dataset has m=" + std::to_string(ds.m()));
  }
  if (!j.contains("trees") || !j["trees"].is_array() || j["trees"].empty()) {
    throw Error(ErrorKind::SchemaError, "'trees' must be a non-empty array");
  }
  for (const auto& tj : j["trees"]) {
    Tree t;
    t.nodes.emplace_back();
    node_from_json(tj, t, 0, h.m, 0);
    h.trees.push_back(std::move(t));
  }
  recount_leaves(h, ds);
  return h;
}

Ensemble import_json(const std::filesystem::path& path, const Dataset& ds) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return import_json_string(buf.str(), ds);
}

}  // namespace treerules
