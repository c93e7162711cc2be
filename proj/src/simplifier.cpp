#include "treerules/simplifier.hpp"

#include <algorithm>
#include <numeric>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include "treerules/error.hpp"
#include "treerules/metrics.hpp"

namespace treerules {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count();
}

double max_component(const ClassProbs& p) { return std::max(p[0], p[1]); }

ClassCounts min_counts(const std::optional<ClassCounts>& a, const std::optional<ClassCounts>& b) {
  if (!a && !b) return {0, 0};
  if (!a) return *b;
  if (!b) return *a;
  return {std::min((*a)[0], (*b)[0]), std::min((*a)[1], (*b)[1])};
}

ClassCounts counts_of(const CoverageBitset& cov, const Dataset& ds) {
  const auto covered = static_cast<std::int64_t>(cov.count());
  const auto pos = static_cast<std::int64_t>(cov.intersect_count(ds.positive_mask()));
  return {covered - pos, pos};
}

}  // namespace

void validate(const SimplifyConfig& cfg) {
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in01(cfg.eps_conf)) throw Error(ErrorKind::InvalidConfig, "eps_conf must lie in [0, 1]");
  if (!in01(cfg.eps_cov)) throw Error(ErrorKind::InvalidConfig, "eps_cov must lie in [0, 1]");
  if (!(cfg.conf_level_c > 0.0 && cfg.conf_level_c < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "confidence level c must lie in (0, 1)");
  }
  if (!(cfg.eta > 0.0) || !std::isfinite(cfg.eta)) throw Error(ErrorKind::NonPositiveEta, "eta must be > 0");
  if (!(cfg.tau >= 0.0) || !std::isfinite(cfg.tau)) throw Error(ErrorKind::InvalidConfig, "tau must be >= 0");
  if (!(cfg.n0 > 0.0) || !std::isfinite(cfg.n0)) throw Error(ErrorKind::InvalidConfig, "n0 must be > 0");
  if (cfg.positive_class > 1) throw Error(ErrorKind::InvalidConfig, "positive_class must be 0 or 1");
}

std::string to_string(EvalMode mode) { return mode == EvalMode::Probabilistic ? "probabilistic" : "exact"; }

EvalMode parse_mode(const std::string& s) {
  if (s == "probabilistic" || s == "prob") return EvalMode::Probabilistic;
  if (s == "exact") return EvalMode::Exact;
  throw Error(ErrorKind::InvalidConfig, "unknown mode '" + s + "'");
}

SupportUnit parse_support_unit(const std::string& s) {
  if (s == "count") return SupportUnit::Count;
  if (s == "fraction") return SupportUnit::Fraction;
  throw Error(ErrorKind::InvalidConfig, "unknown support unit '" + s + "'");
}

SelectionMetric parse_selection_metric(const std::string& s) {
  if (s == "f1") return SelectionMetric::F1;
  if (s == "accuracy") return SelectionMetric::Accuracy;
  throw Error(ErrorKind::InvalidConfig, "unknown selection metric '" + s + "'");
}

double z_from_c(double c) {
  if (!(c > 0.0 && c < 1.0)) throw Error(ErrorKind::InvalidConfig, "c must lie in (0, 1)");
  const double z = boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - c / 2.0);
  return std::round(z * 100.0) / 100.0;
}

double e_upper(double n, double e, double z) {
  const double z2 = z * z;
  const double num = e + z2 / (2.0 * n) + z * std::sqrt(e * (1.0 - e) / n + z2 / (4.0 * n * n));
  // the bound lies in [e, 1]; at e = 1 rounding wobbles by an ulp either way
  return std::clamp(num / (1.0 + z2 / n), e, 1.0);
}

std::string SimplifyTrace::to_json_lines() const {
  std::ostringstream os;
  for (const auto& it : iterations) {
    nlohmann::ordered_json j;
    j["type"] = "iteration";
    j["tree"] = it.tree_index;
    j["candidates_generated"] = it.candidates_generated;
    j["contradictions"] = it.contradictions;
    j["rejected_early"] = it.rejected_early;
    j["candidates_kept"] = it.candidates_kept;
    j["rules_after_pruning"] = it.rules_after_pruning;
    j["rules_after_generalization"] = it.rules_after_generalization;
    j["training_metric"] = it.training_metric;
    j["replaced"] = it.replaced;
    j["ns_combine"] = it.ns_combine;
    j["ns_prune"] = it.ns_prune;
    j["ns_generalize"] = it.ns_generalize;
    j["ns_select"] = it.ns_select;
    os << j.dump() << '\n';
  }
  nlohmann::ordered_json s;
  s["type"] = "summary";
  s["nb_posterior_calls"] = nb_posterior_calls;
  s["approx_coverage_calls"] = approx_coverage_calls;
  s["coverage_scans"] = coverage_scans;
  s["evidence_merged"] = evidence_merged;
  s["evidence_recomputed"] = evidence_recomputed;
  s["evidence_mismatches"] = evidence_mismatches;
  s["ns_tables"] = ns_tables;
  s["ns_total"] = ns_total;
  s["stopped_early"] = stopped_early;
  os << s.dump() << '\n';
  return os.str();
}

SimplifyContext::SimplifyContext(const Dataset& ds, const SimplifyConfig& cfg, const Ensemble* h)
    : ds_(ds), cfg_(cfg) {
  validate(cfg_);
  z_ = z_from_c(cfg_.conf_level_c);
  if (cfg_.mode == EvalMode::Probabilistic) {
    const auto start = Clock::now();
    const auto atoms = h ? ensemble_atoms(*h) : std::vector<Condition>{};
    tables_ = fit_tables(ds_, atoms, cfg_.eta);
    trace_.ns_tables = elapsed_ns(start);
  }
}

const ProbTables& SimplifyContext::tables() const {
  if (!tables_) throw Error(ErrorKind::InvalidConfig, "probability tables are not fitted in exact mode");
  return *tables_;
}

const CoverageBitset& SimplifyContext::atom_bits(const Condition& c) {
  auto it = atom_cache_.find(c);
  if (it == atom_cache_.end()) it = atom_cache_.emplace(c, eval_condition(ds_, c)).first;
  return it->second;
}

CoverageBitset SimplifyContext::scan(const Antecedent& a) {
  ++trace_.coverage_scans;
  if (a.empty()) return CoverageBitset(ds_.n(), true);
  CoverageBitset cov = atom_bits(a.front());
  for (std::size_t k = 1; k < a.size() && !cov.empty(); ++k) cov &= atom_bits(a[k]);
  return cov;
}

ClassProbs SimplifyContext::leaf_component(const ClassCounts& counts) const {
  if (counts[0] + counts[1] == 0 && cfg_.tau == 0.0) return tables().prior();
  return leaf_posterior(tables(), counts, cfg_.tau);
}

double SimplifyContext::support_from(double count) const {
  return cfg_.support_unit == SupportUnit::Count ? count : count / static_cast<double>(ds_.n());
}

ClassProbs SimplifyContext::hybrid(const Evidence& e, const ClassCounts& counts, double support) const {
  return hybrid_posterior(nb_posterior(tables(), e), leaf_component(counts), support, cfg_.n0);
}

std::vector<Rule> SimplifyContext::tree_rules(const Tree& tree) {
  std::vector<std::size_t> leaf_nodes;
  auto rules = extract_rules(tree, &leaf_nodes);
  std::vector<std::size_t> slot(tree.nodes.size(), std::numeric_limits<std::size_t>::max());
  for (std::size_t k = 0; k < leaf_nodes.size(); ++k) {
    slot[leaf_nodes[k]] = k;
    rules[k].cov_exact = CoverageBitset(ds_.n());
  }
  // One routing pass covers every leaf at once.
  for (std::size_t i = 0; i < ds_.n(); ++i) {
    const auto s = slot[tree.leaf_index(ds_, i)];
    if (s != std::numeric_limits<std::size_t>::max()) rules[s].cov_exact->set(i);
  }
  if (tables_) {
    for (auto& r : rules) r.evidence = rule_evidence(*tables_, r.antecedent);
  }
  return rules;
}

std::vector<Rule> generate_candidates(const std::vector<Rule>& rstar, const std::vector<Rule>& rk,
                                      SimplifyContext& ctx, CandidateStats* stats) {
  const auto& cfg = ctx.config();
  const auto& ds = ctx.data();
  const bool prob = cfg.mode == EvalMode::Probabilistic;
  auto& trace = ctx.trace();
  CandidateStats local;

  std::vector<Rule> out;
  std::vector<double> conf_of;
  std::map<Antecedent, std::size_t> index_of;

  for (const auto& ri : rstar) {
    for (const auto& rj : rk) {
      ++local.generated;
      auto merged = merge_antecedents(ri.antecedent, rj.antecedent);
      if (!merged) {
        ++local.contradictions;
        continue;
      }
      Rule cand;
      double conf = 0.0;
      if (prob) {
        const auto& tables = ctx.tables();
        Evidence e;
        if (!merged->tightened && ri.evidence && rj.evidence) {
          e = merge_evidence(*ri.evidence, *rj.evidence, rule_evidence(tables, merged->shared));
          ++trace.evidence_merged;
          if (cfg.verify_evidence && !(e == rule_evidence(tables, merged->antecedent))) {
            ++trace.evidence_mismatches;
          }
        } else {
          e = rule_evidence(tables, merged->antecedent);
          ++trace.evidence_recomputed;
        }
        const auto est = approx_coverage(tables, merged->antecedent);
        if (!(est.p_hat > cfg.eps_cov)) {
          ++local.rejected;
          continue;
        }
        const ClassCounts counts = min_counts(ri.class_counts, rj.class_counts);
        // Support is the exact count when both parents carry coverage (a bitset AND,
        // no data scan), otherwise the independence estimate.
        const bool both = ri.cov_exact && rj.cov_exact;
        const double support =
            both ? ctx.support_from(static_cast<double>(ri.cov_exact->intersect_count(*rj.cov_exact)))
                 : (cfg.support_unit == SupportUnit::Count ? est.n_hat : est.p_hat);
        cand.head = ctx.hybrid(e, counts, support);
        conf = max_component(cand.head);
        if (conf < cfg.eps_conf) {
          ++local.rejected;
          continue;
        }
        cand.antecedent = std::move(merged->antecedent);
        cand.evidence = e;
        cand.class_counts = counts;
        cand.cov_est = est.p_hat;
        // materialized only for survivors
        cand.cov_exact = both ? *ri.cov_exact & *rj.cov_exact : ctx.scan(cand.antecedent);
      } else {
        cand.antecedent = std::move(merged->antecedent);
        auto cov = ctx.scan(cand.antecedent);
        const auto counts = counts_of(cov, ds);
        const auto covered = counts[0] + counts[1];
        const double cov_frac = static_cast<double>(covered) / static_cast<double>(ds.n());
        if (!(cov_frac > cfg.eps_cov) || covered == 0) {
          ++local.rejected;
          continue;
        }
        cand.head = normalize_counts(counts);
        conf = static_cast<double>(std::max(counts[0], counts[1])) / static_cast<double>(covered);
        if (conf < cfg.eps_conf) {
          ++local.rejected;
          continue;
        }
        cand.class_counts = counts;
        cand.cov_exact = std::move(cov);
      }

      const auto it = index_of.find(cand.antecedent);
      if (it == index_of.end()) {
        index_of.emplace(cand.antecedent, out.size());
        out.push_back(std::move(cand));
        conf_of.push_back(conf);
      } else if (conf > conf_of[it->second]) {
        out[it->second] = std::move(cand);
        conf_of[it->second] = conf;
      }
    }
  }

  // Canonical antecedent order.
  std::vector<Rule> sorted;
  sorted.reserve(out.size());
  for (const auto& [a, idx] : index_of) sorted.push_back(std::move(out[idx]));
  if (stats) {
    stats->generated += local.generated;
    stats->contradictions += local.contradictions;
    stats->rejected += local.rejected;
  }
  return sorted;
}

std::vector<Rule> sequential_covering_prune(std::vector<Rule> candidates, const Dataset& ds) {
  std::vector<Rule> selected;
  CoverageBitset remaining(ds.n(), true);
  std::vector<bool> used(candidates.size(), false);
  std::vector<std::size_t> alive(candidates.size());
  std::iota(alive.begin(), alive.end(), std::size_t{0});
  for (const auto& c : candidates) {
    if (!c.cov_exact) throw Error(ErrorKind::InvalidConfig, "sequential covering needs exact coverage");
  }

  while (!remaining.empty()) {
    std::optional<std::size_t> best;
    std::int64_t best_hit = 0, best_cov = 0;
    // remaining only shrinks, so a candidate that covers none of it is dead for good
    std::size_t keep = 0;
    for (std::size_t idx = 0; idx < alive.size(); ++idx) {
      const std::size_t k = alive[idx];
      if (used[k]) continue;
      const auto& c = candidates[k];
      const auto [cov_u, pos_u] = c.cov_exact->intersect_counts(remaining, ds.positive_mask());
      if (cov_u == 0) continue;
      alive[keep++] = k;
      const auto cov = static_cast<std::int64_t>(cov_u);
      const auto pos = static_cast<std::int64_t>(pos_u);
      const auto hit = c.predicted_class() == 1 ? pos : cov - pos;
      bool better = false;
      if (!best) {
        better = true;
      } else {
        // hit/cov vs best_hit/best_cov, compared exactly.
        const auto lhs = hit * best_cov;
        const auto rhs = best_hit * cov;
        if (lhs != rhs) {
          better = lhs > rhs;
        } else if (cov != best_cov) {
          better = cov > best_cov;
        } else {
          const auto& b = candidates[*best];
          if (c.antecedent.size() != b.antecedent.size()) {
            better = c.antecedent.size() < b.antecedent.size();
          } else {
            better = c.antecedent < b.antecedent;
          }
        }
      }
      if (better) {
        best = k;
        best_hit = hit;
        best_cov = cov;
      }
    }
    alive.resize(keep);
    if (!best) break;
    used[*best] = true;
    remaining.subtract(*candidates[*best].cov_exact);
    selected.push_back(std::move(candidates[*best]));
  }
  return selected;
}

namespace {

Antecedent without(const Antecedent& a, std::size_t idx) {
  Antecedent out;
  out.reserve(a.size() - 1);
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (k != idx) out.push_back(a[k]);
  }
  return out;
}

Rule generalize_probabilistic(const Rule& rule, SimplifyContext& ctx) {
  const auto& tables = ctx.tables();
  const double z = ctx.z();
  const ClassCounts counts = rule.class_counts.value_or(ClassCounts{0, 0});
  const ClassProbs leaf = ctx.leaf_component(counts);
  const double n = static_cast<double>(tables.n());

  // Atom stats looked up once; a drop-one score sums the same terms in the same
  // order as approx_coverage/rule_evidence on the shortened antecedent.
  std::vector<const AtomStats*> atoms;
  atoms.reserve(rule.antecedent.size());
  for (const auto& c : rule.antecedent) atoms.push_back(&tables.atom(c));
  std::vector<std::size_t> alive(atoms.size());
  std::iota(alive.begin(), alive.end(), std::size_t{0});

  auto score = [&](std::size_t skip) {
    ++prob_counters().approx_coverage_calls;
    double log_p = 0.0;
    Evidence e;
    for (std::size_t k = 0; k < alive.size(); ++k) {
      if (k == skip) continue;
      log_p += atoms[alive[k]]->log_marg;
      e += atoms[alive[k]]->evidence;
    }
    const double n_hat = n * std::exp(log_p);
    const auto p = hybrid_posterior(nb_posterior(tables, e), leaf, ctx.support_from(n_hat), ctx.config().n0);
    return e_upper(std::max(1.0, n_hat), 1.0 - max_component(p), z);
  };

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  double current = score(kNone);
  bool changed = false;
  while (alive.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t k = 0; k < alive.size(); ++k) {
      const double s = score(k);
      if (s <= best) {  // '<=' keeps the canonically last condition on ties
        best = s;
        best_idx = k;
      }
    }
    if (!(best <= current)) break;
    alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(best_idx));
    current = best;
    changed = true;
  }
  Rule out = rule;
  if (changed) {
    Antecedent a;
    a.reserve(alive.size());
    for (auto k : alive) a.push_back(rule.antecedent[k]);
    out.antecedent = std::move(a);
    out.cov_exact.reset();
    out.evidence = rule_evidence(tables, out.antecedent);
  }
  return out;
}

Rule generalize_exact(const Rule& rule, SimplifyContext& ctx) {
  const auto& ds = ctx.data();
  const double z = ctx.z();
  std::vector<const CoverageBitset*> atom_bits;
  atom_bits.reserve(rule.antecedent.size());
  for (const auto& c : rule.antecedent) atom_bits.push_back(&ctx.atom_bits(c));

  std::vector<std::size_t> alive(rule.antecedent.size());
  for (std::size_t k = 0; k < alive.size(); ++k) alive[k] = k;

  auto coverage_of = [&](std::size_t skip) {
    CoverageBitset cov(ds.n(), true);
    for (std::size_t k = 0; k < alive.size(); ++k) {
      if (k != skip) cov &= *atom_bits[alive[k]];
    }
    return cov;
  };
  auto score = [&](const CoverageBitset& cov) {
    const auto c = counts_of(cov, ds);
    const auto n = c[0] + c[1];
    if (n == 0) return 1.0;
    const double e = 1.0 - static_cast<double>(std::max(c[0], c[1])) / static_cast<double>(n);
    return e_upper(static_cast<double>(n), e, z);
  };

  CoverageBitset current_cov = coverage_of(std::numeric_limits<std::size_t>::max());
  double current = score(current_cov);
  while (alive.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    CoverageBitset best_cov;
    for (std::size_t k = 0; k < alive.size(); ++k) {
      auto cov = coverage_of(k);
      const double s = score(cov);
      if (s <= best) {
        best = s;
        best_idx = k;
        best_cov = std::move(cov);
      }
    }
    if (!(best <= current)) break;
    alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(best_idx));
    current = best;
    current_cov = std::move(best_cov);
  }

  Rule out = rule;
  out.antecedent.clear();
  for (auto k : alive) out.antecedent.push_back(rule.antecedent[k]);
  out.cov_exact = std::move(current_cov);
  return out;
}

}  // namespace

std::vector<Rule> generalize(const std::vector<Rule>& rules, SimplifyContext& ctx) {
  std::vector<Rule> out;
  out.reserve(rules.size());
  for (const auto& r : rules) {
    if (r.antecedent.empty()) continue;
    out.push_back(ctx.config().mode == EvalMode::Probabilistic ? generalize_probabilistic(r, ctx)
                                                              : generalize_exact(r, ctx));
  }
  return out;
}

std::vector<Rule> finalize_rules(std::vector<Rule> rules, SimplifyContext& ctx) {
  const auto& ds = ctx.data();
  const bool prob = ctx.config().mode == EvalMode::Probabilistic;
  std::vector<Rule> out;
  out.reserve(rules.size());
  std::map<Antecedent, bool> seen;
  for (auto& r : rules) {
    if (r.antecedent.empty() || !seen.emplace(r.antecedent, true).second) continue;
    if (!r.cov_exact) r.cov_exact = ctx.scan(r.antecedent);
    const auto counts = counts_of(*r.cov_exact, ds);
    const auto n = counts[0] + counts[1];
    if (n == 0) continue;
    r.class_counts = counts;
    if (prob) {
      r.evidence = rule_evidence(ctx.tables(), r.antecedent);
      r.head = ctx.hybrid(*r.evidence, counts, ctx.support_from(static_cast<double>(n)));
    } else {
      r.head = normalize_counts(counts);
    }
    r.cov_est.reset();
    out.push_back(std::move(r));
  }
  return out;
}

RuleSet default_rule(RuleSet rs, const Dataset& ds) {
  CoverageBitset uncovered(ds.n(), true);
  for (const auto& r : rs.rules) {
    if (!r.cov_exact) throw Error(ErrorKind::InvalidConfig, "default rule needs exact rule coverage");
    uncovered.subtract(*r.cov_exact);
  }
  ClassCounts c = uncovered.empty() ? ds.class_counts() : counts_of(uncovered, ds);
  rs.default_class = c[1] > c[0] ? 1 : 0;
  return rs;
}

double training_metric(const RuleSet& rs, const Dataset& ds, const SimplifyConfig& cfg) {
  const std::size_t n = ds.n();
  std::vector<double> s0(n, 0.0), s1(n, 0.0);
  std::vector<std::uint8_t> fired(n, 0);
  for (const auto& r : rs.rules) {
    const auto h0 = r.head[0], h1 = r.head[1];
    r.cov_exact->for_each_set([&](std::size_t i) {
      s0[i] += h0;
      s1[i] += h1;
      fired[i] = 1;
    });
  }
  std::vector<std::uint8_t> pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    pred[i] = fired[i] && (s0[i] + s1[i]) > 0.0 ? static_cast<std::uint8_t>(s1[i] > s0[i]) : rs.default_class;
  }
  return cfg.selection_metric == SelectionMetric::F1 ? f1_score(pred, ds.labels(), cfg.positive_class)
                                                     : accuracy(pred, ds.labels());
}

SimplifyResult simplify(const Ensemble& h, const Dataset& ds, const SimplifyConfig& cfg) {
  if (h.trees.empty()) throw Error(ErrorKind::InvalidConfig, "ensemble has no trees");
  if (h.m != ds.m()) {
    throw Error(ErrorKind::DimensionMismatch, "ensemble expects m=" + std::to_string(h.m) +
                                                  " but dataset has m=" + std::to_string(ds.m()));
  }
  ds.require_both_classes();
  const auto start = Clock::now();
  const auto counters_before = prob_counters();

  SimplifyContext ctx(ds, cfg, &h);
  auto& trace = ctx.trace();

  auto make_ruleset = [&](std::vector<Rule> rules) {
    RuleSet rs;
    rs.rules = std::move(rules);
    rs.class_names = ds.class_names();
    rs.m = ds.m();
    return default_rule(std::move(rs), ds);
  };

  // Simplify the first tree's rules on their own so R* starts pruned and generalized.
  IterationRecord first;
  first.tree_index = 1;
  auto t0 = Clock::now();
  auto initial = ctx.tree_rules(h.trees.front());
  first.candidates_generated = first.candidates_kept = initial.size();
  first.ns_combine = elapsed_ns(t0);
  t0 = Clock::now();
  auto pruned = sequential_covering_prune(std::move(initial), ds);
  first.rules_after_pruning = pruned.size();
  first.ns_prune = elapsed_ns(t0);
  t0 = Clock::now();
  auto rules = finalize_rules(generalize(pruned, ctx), ctx);
  first.rules_after_generalization = rules.size();
  first.ns_generalize = elapsed_ns(t0);
  t0 = Clock::now();
  RuleSet best = make_ruleset(std::move(rules));
  double best_metric = training_metric(best, ds, cfg);
  first.training_metric = best_metric;
  first.replaced = true;
  first.ns_select = elapsed_ns(t0);
  trace.iterations.push_back(first);

  for (std::size_t k = 1; k < h.trees.size() && best_metric < 1.0; ++k) {
    IterationRecord rec;
    rec.tree_index = k + 1;

    t0 = Clock::now();
    const auto rk = ctx.tree_rules(h.trees[k]);
    std::vector<Rule> partners;
    if (best.rules.empty()) {
      // An empty R* merges as the vacuous rule so the next tree's rules pass through.
      Rule top;
      top.head = normalize_counts(ds.class_counts());
      top.class_counts = ds.class_counts();
      top.cov_exact = CoverageBitset(ds.n(), true);
      if (ctx.has_tables()) top.evidence = Evidence{};
      partners.push_back(std::move(top));
    }
    CandidateStats stats;
    auto candidates = generate_candidates(best.rules.empty() ? partners : best.rules, rk, ctx, &stats);
    rec.candidates_generated = stats.generated;
    rec.contradictions = stats.contradictions;
    rec.rejected_early = stats.rejected;
    rec.candidates_kept = candidates.size();
    rec.ns_combine = elapsed_ns(t0);

    t0 = Clock::now();
    auto selected = sequential_covering_prune(std::move(candidates), ds);
    rec.rules_after_pruning = selected.size();
    rec.ns_prune = elapsed_ns(t0);

    t0 = Clock::now();
    auto generalized = finalize_rules(generalize(selected, ctx), ctx);
    rec.rules_after_generalization = generalized.size();
    rec.ns_generalize = elapsed_ns(t0);

    t0 = Clock::now();
    RuleSet candidate = make_ruleset(std::move(generalized));
    const double metric = training_metric(candidate, ds, cfg);
    bool take = metric > best_metric;
    if (metric == best_metric) {
      if (candidate.rules.size() != best.rules.size()) {
        take = candidate.rules.size() < best.rules.size();
      } else {
        take = candidate.total_conditions() < best.total_conditions();
      }
    }
    if (take) {
      best = std::move(candidate);
      best_metric = metric;
    }
    rec.training_metric = best_metric;
    rec.replaced = take;
    rec.ns_select = elapsed_ns(t0);
    trace.iterations.push_back(rec);
  }
  trace.stopped_early = best_metric >= 1.0 && trace.iterations.size() < h.trees.size();

  const auto& counters_after = prob_counters();
  trace.nb_posterior_calls = counters_after.nb_posterior_calls - counters_before.nb_posterior_calls;
  trace.approx_coverage_calls = counters_after.approx_coverage_calls - counters_before.approx_coverage_calls;
  trace.ns_total = elapsed_ns(start);
  return {std::move(best), std::move(trace)};
}

}  // namespace treerules
