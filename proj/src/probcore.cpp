#include "treerules/probcore.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "treerules/error.hpp"

namespace treerules {

ProbCounters& prob_counters() {
  thread_local ProbCounters counters;
  return counters;
}

const AtomStats& ProbTables::atom(const Condition& a) const {
  const auto it = atoms_.find(a);
  if (it == atoms_.end()) throw Error(ErrorKind::UnknownAtom, to_string(a));
  return it->second;
}

std::string ProbTables::to_json() const {
  nlohmann::ordered_json j;
  j["eta"] = eta_;
  j["n"] = n_;
  j["n_y"] = {n_y_[0], n_y_[1]};
  j["prior"] = {prior_[0], prior_[1]};
  j["atoms"] = nlohmann::ordered_json::array();
  std::vector<Condition> keys;
  keys.reserve(atoms_.size());
  for (const auto& [c, _] : atoms_) keys.push_back(c);
  std::sort(keys.begin(), keys.end());
  for (const auto& c : keys) {
    const auto& s = atoms_.at(c);
    j["atoms"].push_back({{"feature", c.feature},
                          {"op", c.op == Op::LE ? "<=" : ">"},
                          {"threshold", c.threshold},
                          {"n_a", s.n_a},
                          {"n_ay", {s.n_ay[0], s.n_ay[1]}},
                          {"lik", {s.lik[0], s.lik[1]}},
                          {"marg", s.marg}});
  }
  return j.dump(2);
}

ProbTables fit_tables(const Dataset& ds, std::span<const Condition> atoms, double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw Error(ErrorKind::NonPositiveEta, "eta must be positive, got " + std::to_string(eta));
  }
  ds.require_both_classes();

  ProbTables t;
  t.eta_ = eta;
  t.n_ = static_cast<std::int64_t>(ds.n());
  t.n_y_ = ds.class_counts();
  const double n = static_cast<double>(t.n_);
  for (std::size_t y = 0; y < kNumClasses; ++y) {
    t.prior_[y] = (static_cast<double>(t.n_y_[y]) + eta) / (n + static_cast<double>(kNumClasses) * eta);
    t.log_prior_[y] = std::log(t.prior_[y]);
  }

  // One scan per (feature, threshold); the LE side gives the GT side by complement.
  std::map<std::pair<std::uint32_t, std::uint64_t>, std::pair<std::int64_t, std::int64_t>> le_counts;
  for (const auto& a : atoms) {
    const auto key = std::make_pair(a.feature, std::bit_cast<std::uint64_t>(a.threshold));
    if (le_counts.contains(key)) continue;
    const auto cov = eval_condition(ds, Condition{a.feature, Op::LE, a.threshold});
    le_counts[key] = {static_cast<std::int64_t>(cov.count()),
                      static_cast<std::int64_t>(cov.intersect_count(ds.positive_mask()))};
  }

  for (const auto& a : atoms) {
    if (t.atoms_.contains(a)) continue;
    const auto [le_n, le_pos] = le_counts.at({a.feature, std::bit_cast<std::uint64_t>(a.threshold)});
    AtomStats s;
    if (a.op == Op::LE) {
      s.n_a = le_n;
      s.n_ay = {le_n - le_pos, le_pos};
    } else {
      s.n_a = t.n_ - le_n;
      s.n_ay = {t.n_y_[0] - (le_n - le_pos), t.n_y_[1] - le_pos};
    }
    for (std::size_t y = 0; y < kNumClasses; ++y) {
      // Divide for the larger side of the pair and subtract for the other; 1 - p is
      // exact for p >= 1/2, so p(a|y) + p(not a|y) == 1 holds bit for bit.
      const double denom = static_cast<double>(t.n_y_[y]) + 2.0 * eta;
      const double own = (static_cast<double>(s.n_ay[y]) + eta) / denom;
      const double other = (static_cast<double>(t.n_y_[y] - s.n_ay[y]) + eta) / denom;
      s.lik[y] = own >= other ? own : 1.0 - other;
      s.log_lik[y] = std::log(s.lik[y]);
    }
    s.evidence = Evidence::from_log(s.log_lik);
    s.marg = (static_cast<double>(s.n_a) + eta) / (n + 2.0 * eta);
    s.log_marg = std::log(s.marg);
    t.atoms_.emplace(a, s);
  }
  return t;
}

std::vector<Condition> ensemble_atoms(const Ensemble& h) {
  std::set<Condition> seen;
  for (const auto& tree : h.trees) {
    for (const auto& nd : tree.nodes) {
      if (nd.is_leaf()) continue;
      seen.insert({nd.feature, Op::LE, nd.threshold});
      seen.insert({nd.feature, Op::GT, nd.threshold});
    }
  }
  return {seen.begin(), seen.end()};
}

Evidence rule_evidence(const ProbTables& tables, const Antecedent& antecedent) {
  Evidence e;
  for (const auto& a : antecedent) e += tables.atom(a).evidence;
  return e;
}

ClassProbs nb_posterior(const ProbTables& tables, const ClassProbs& evidence) {
  ++prob_counters().nb_posterior_calls;
  const auto& lp = tables.log_prior();
  const double s0 = lp[0] + evidence[0];
  const double s1 = lp[1] + evidence[1];
  const double mx = std::max(s0, s1);
  const double e0 = std::exp(s0 - mx);
  const double e1 = std::exp(s1 - mx);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

ClassProbs nb_posterior(const ProbTables& tables, const Evidence& evidence) {
  return nb_posterior(tables, evidence.values());
}

ClassProbs leaf_posterior(const ProbTables& tables, const ClassCounts& counts, double tau) {
  if (counts[0] < 0 || counts[1] < 0) throw Error(ErrorKind::InvalidConfig, "negative class count");
  if (tau < 0.0) throw Error(ErrorKind::InvalidConfig, "tau must be >= 0");
  const double total = static_cast<double>(counts[0] + counts[1]);
  if (total == 0.0 && tau == 0.0) {
    throw Error(ErrorKind::ZeroEverything, "all-zero counts with tau = 0");
  }
  const auto& pi = tables.prior();
  return {(static_cast<double>(counts[0]) + tau * pi[0]) / (total + tau),
          (static_cast<double>(counts[1]) + tau * pi[1]) / (total + tau)};
}

double support_weight(double support, double n0) { return support / (support + n0); }

ClassProbs hybrid_posterior(const ClassProbs& p_nb, const ClassProbs& p_leaf, double support, double n0) {
  const double lambda = support_weight(support, n0);
  return {lambda * p_nb[0] + (1.0 - lambda) * p_leaf[0], lambda * p_nb[1] + (1.0 - lambda) * p_leaf[1]};
}

CoverageEstimate approx_coverage(const ProbTables& tables, const Antecedent& antecedent) {
  ++prob_counters().approx_coverage_calls;
  double log_p = 0.0;
  for (const auto& a : antecedent) log_p += tables.atom(a).log_marg;
  CoverageEstimate est;
  est.p_hat = antecedent.empty() ? 1.0 : std::exp(log_p);
  est.n_hat = static_cast<double>(tables.n()) * est.p_hat;
  return est;
}

}  // namespace treerules
