#include "treerules/ruleset.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "treerules/error.hpp"

namespace treerules {

using nlohmann::ordered_json;

std::string to_string(const Condition& c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "x%u %s %.17g", c.feature, c.op == Op::LE ? "<=" : ">", c.threshold);
  return buf;
}

namespace {

// Input must already be sorted in canonical order.
std::optional<Antecedent> canonicalize_sorted(const Antecedent& sorted) {
  Antecedent out;
  out.reserve(sorted.size());
  std::size_t i = 0;
  while (i < sorted.size()) {
    const auto f = sorted[i].feature;
    std::optional<Condition> le, gt;
    for (; i < sorted.size() && sorted[i].feature == f; ++i) {
      const auto& c = sorted[i];
      if (c.op == Op::LE) {
        if (!le) le = c;  // ascending, so the first LE is the tightest
      } else {
        gt = c;  // ascending, so the last GT is the tightest
      }
    }
    if (le && gt && !(gt->threshold < le->threshold)) return std::nullopt;
    if (le) out.push_back(*le);
    if (gt) out.push_back(*gt);
  }
  return out;
}

}  // namespace

std::optional<Antecedent> canonicalize(Antecedent conditions) {
  std::sort(conditions.begin(), conditions.end());
  conditions.erase(std::unique(conditions.begin(), conditions.end()), conditions.end());
  return canonicalize_sorted(conditions);
}

std::size_t argmax(const ClassProbs& p) { return p[1] > p[0] ? 1 : 0; }

ClassProbs normalize_counts(const ClassCounts& c) {
  const auto total = c[0] + c[1];
  if (total <= 0) return {0.5, 0.5};
  return {static_cast<double>(c[0]) / static_cast<double>(total),
          static_cast<double>(c[1]) / static_cast<double>(total)};
}

bool Rule::covers(std::span<const double> x) const {
  return std::all_of(antecedent.begin(), antecedent.end(),
                     [&](const Condition& c) { return c.holds(x[c.feature]); });
}

std::size_t RuleSet::total_conditions() const {
  std::size_t total = 0;
  for (const auto& r : rules) total += r.antecedent.size();
  return total;
}

std::vector<Rule> extract_rules(const Tree& tree, std::vector<std::size_t>* leaf_nodes) {
  std::vector<Rule> out;
  Antecedent path;
  // Iterative DFS; each frame records the path length at its parent plus the edge taken.
  struct Frame {
    std::size_t node;
    std::size_t depth;
    std::optional<Condition> edge;
  };
  std::vector<Frame> frames{{0, 0, std::nullopt}};
  while (!frames.empty()) {
    Frame fr = frames.back();
    frames.pop_back();
    path.resize(fr.depth);
    if (fr.edge) path.push_back(*fr.edge);
    const auto& nd = tree.nodes[fr.node];
    if (nd.is_leaf()) {
      auto canon = canonicalize(path);
      if (!canon) continue;  // unreachable leaf in an imported tree
      Rule r;
      r.antecedent = std::move(*canon);
      r.head = normalize_counts(nd.counts);
      r.class_counts = nd.counts;
      out.push_back(std::move(r));
      if (leaf_nodes) leaf_nodes->push_back(fr.node);
      continue;
    }
    const std::size_t d = path.size();
    // Push right first so the left subtree is emitted first.
    frames.push_back({static_cast<std::size_t>(nd.right), d, Condition{nd.feature, Op::GT, nd.threshold}});
    frames.push_back({static_cast<std::size_t>(nd.left), d, Condition{nd.feature, Op::LE, nd.threshold}});
  }
  return out;
}

std::optional<MergedAntecedent> merge_antecedents(const Antecedent& a, const Antecedent& b) {
  MergedAntecedent out;
  Antecedent uni;
  uni.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out.shared));
  auto canon = canonicalize_sorted(uni);
  if (!canon) return std::nullopt;
  out.tightened = canon->size() != uni.size();
  out.antecedent = std::move(*canon);
  return out;
}

CoverageBitset antecedent_coverage(const Antecedent& a, const Dataset& ds) {
  if (a.empty()) return CoverageBitset(ds.n(), true);
  CoverageBitset cov = eval_condition(ds, a.front());
  for (std::size_t k = 1; k < a.size() && !cov.empty(); ++k) cov &= eval_condition(ds, a[k]);
  return cov;
}

EmpiricalStats empirical_stats(Rule& r, const Dataset& ds) {
  CoverageBitset cov = antecedent_coverage(r.antecedent, ds);
  EmpiricalStats s;
  const auto covered = static_cast<std::int64_t>(cov.count());
  const auto pos = static_cast<std::int64_t>(cov.intersect_count(ds.positive_mask()));
  s.class_counts = {covered - pos, pos};
  s.cov = static_cast<double>(covered) / static_cast<double>(ds.n());
  s.conf = covered > 0 ? static_cast<double>(s.class_counts[r.predicted_class()]) /
                             static_cast<double>(covered)
                       : 0.0;
  r.class_counts = s.class_counts;
  r.cov_exact = std::move(cov);
  return s;
}

Prediction predict(const RuleSet& rs, std::span<const double> x) {
  if (rs.m != 0 && x.size() != rs.m) {
    throw Error(ErrorKind::DimensionMismatch,
                "expected " + std::to_string(rs.m) + " features, got " + std::to_string(x.size()));
  }
  ClassProbs sum{0.0, 0.0};
  bool fired = false;
  for (const auto& r : rs.rules) {
    for (const auto& c : r.antecedent) {
      if (c.feature >= x.size()) {
        throw Error(ErrorKind::DimensionMismatch, "rule references feature " + std::to_string(c.feature));
      }
    }
    if (!r.covers(x)) continue;
    fired = true;
    sum[0] += r.head[0];
    sum[1] += r.head[1];
  }
  Prediction p;
  const double total = sum[0] + sum[1];
  if (!fired || !(total > 0.0)) {
    p.label = rs.default_class;
    p.probs = {rs.default_class == 0 ? 1.0 : 0.0, rs.default_class == 1 ? 1.0 : 0.0};
    return p;
  }
  p.probs = {sum[0] / total, sum[1] / total};
  p.label = static_cast<std::uint8_t>(argmax(p.probs));
  return p;
}

std::vector<std::uint8_t> predict_all(const RuleSet& rs, const Dataset& ds) {
  std::vector<std::uint8_t> out(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) out[i] = predict(rs, ds.row(i)).label;
  return out;
}

std::string to_text(const RuleSet& rs, int precision) {
  std::ostringstream os;
  char buf[128];
  for (const auto& r : rs.rules) {
    os << "IF ";
    if (r.antecedent.empty()) os << "TRUE";
    for (std::size_t k = 0; k < r.antecedent.size(); ++k) {
      const auto& c = r.antecedent[k];
      if (k) os << " AND ";
      std::snprintf(buf, sizeof buf, "x%u %s %.*f", c.feature, c.op == Op::LE ? "<=" : ">", precision,
                    c.threshold);
      os << buf;
    }
    const auto cls = r.predicted_class();
    std::snprintf(buf, sizeof buf, " THEN class=%s (p=[%.*f,%.*f]", rs.class_names[cls].c_str(), precision,
                  r.head[0], precision, r.head[1]);
    os << buf;
    if (r.class_counts && r.cov_exact && r.cov_exact->size() > 0) {
      const auto total = (*r.class_counts)[0] + (*r.class_counts)[1];
      const double cov = static_cast<double>(total) / static_cast<double>(r.cov_exact->size());
      const double conf = total > 0 ? static_cast<double>((*r.class_counts)[cls]) / static_cast<double>(total) : 0.0;
      std::snprintf(buf, sizeof buf, ", cov=%.*f, conf=%.*f", precision, cov, precision, conf);
      os << buf;
    }
    os << ")\n";
  }
  os << "ELSE class=" << rs.class_names[rs.default_class] << '\n';
  return os.str();
}

std::string to_json(const RuleSet& rs) {
  ordered_json j;
  j["class_names"] = {rs.class_names[0], rs.class_names[1]};
  j["default_class"] = rs.default_class;
  j["m"] = rs.m;
  j["rules"] = ordered_json::array();
  for (const auto& r : rs.rules) {
    ordered_json rj;
    rj["antecedent"] = ordered_json::array();
    for (const auto& c : r.antecedent) {
      rj["antecedent"].push_back(
          {{"feature", c.feature}, {"op", c.op == Op::LE ? "<=" : ">"}, {"threshold", c.threshold}});
    }
    rj["head"] = {r.head[0], r.head[1]};
    if (r.class_counts) rj["class_counts"] = {(*r.class_counts)[0], (*r.class_counts)[1]};
    if (r.evidence) rj["evidence"] = {(*r.evidence)[0], (*r.evidence)[1]};
    if (r.cov_exact) rj["covered"] = r.cov_exact->count();
    if (r.cov_est) rj["cov_est"] = *r.cov_est;
    j["rules"].push_back(std::move(rj));
  }
  return j.dump(2);
}

RuleSet ruleset_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaError, e.what());
  }
  try {
    RuleSet rs;
    rs.class_names = {j.at("class_names").at(0).get<std::string>(), j.at("class_names").at(1).get<std::string>()};
    rs.default_class = j.at("default_class").get<std::uint8_t>();
    if (rs.default_class > 1) throw Error(ErrorKind::SchemaError, "default_class must be 0 or 1");
    rs.m = j.value("m", std::size_t{0});
    for (const auto& rj : j.at("rules")) {
      Antecedent a;
      for (const auto& cj : rj.at("antecedent")) {
        const auto op = cj.at("op").get<std::string>();
        if (op != "<=" && op != ">") throw Error(ErrorKind::SchemaError, "bad op '" + op + "'");
        a.push_back({cj.at("feature").get<std::uint32_t>(), op == "<=" ? Op::LE : Op::GT,
                     cj.at("threshold").get<double>()});
      }
      auto canon = canonicalize(a);
      if (!canon) throw Error(ErrorKind::SchemaError, "contradictory rule");
      Rule r;
      r.antecedent = std::move(*canon);
      r.head = {rj.at("head").at(0).get<double>(), rj.at("head").at(1).get<double>()};
      if (rj.contains("class_counts")) {
        r.class_counts = ClassCounts{rj["class_counts"].at(0).get<std::int64_t>(),
                                     rj["class_counts"].at(1).get<std::int64_t>()};
      }
      if (rj.contains("cov_est")) r.cov_est = rj["cov_est"].get<double>();
      rs.rules.push_back(std::move(r));
    }
    return rs;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaError, e.what());
  }
}

}  // namespace treerules
