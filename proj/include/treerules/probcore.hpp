#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>

#include "treerules/condition.hpp"
#include "treerules/dataset.hpp"
#include "treerules/evidence.hpp"
#include "treerules/ruleset.hpp"

namespace treerules {

struct AtomStats {
  std::int64_t n_a = 0;        // instances satisfying the atom
  ClassCounts n_ay{0, 0};      // ... split by class
  ClassProbs lik{0.0, 0.0};    // p(a|y) = (N_ay + eta) / (N_y + 2 eta)
  ClassProbs log_lik{0.0, 0.0};
  Evidence evidence;           // log_lik in fixed point
  double marg = 0.0;           // P(a) = (N_a + eta) / (N + 2 eta)
  double log_marg = 0.0;
};

// Smoothed priors and per-atom likelihood/marginal tables, fitted once per
// training set and read-only afterwards.
class ProbTables {
 public:
  const ClassProbs& prior() const noexcept { return prior_; }
  const ClassProbs& log_prior() const noexcept { return log_prior_; }
  double eta() const noexcept { return eta_; }
  std::int64_t n() const noexcept { return n_; }
  const ClassCounts& n_y() const noexcept { return n_y_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  bool contains(const Condition& a) const { return atoms_.contains(a); }

  // Throws UnknownAtom.
  const AtomStats& atom(const Condition& a) const;

  const std::unordered_map<Condition, AtomStats, ConditionHash>& atoms() const noexcept { return atoms_; }

  std::string to_json() const;

 private:
  friend ProbTables fit_tables(const Dataset&, std::span<const Condition>, double);

  ClassProbs prior_{0.5, 0.5};
  ClassProbs log_prior_{0.0, 0.0};
  double eta_ = 1.0;
  std::int64_t n_ = 0;
  ClassCounts n_y_{0, 0};
  std::unordered_map<Condition, AtomStats, ConditionHash> atoms_;
};

// Scans the data once per distinct (feature, threshold); complementary atoms
// share that scan.
ProbTables fit_tables(const Dataset& ds, std::span<const Condition> atoms, double eta);

// Every LE/GT atom that appears in any split of the ensemble.
std::vector<Condition> ensemble_atoms(const Ensemble& h);

Evidence rule_evidence(const ProbTables& tables, const Antecedent& antecedent);

ClassProbs nb_posterior(const ProbTables& tables, const ClassProbs& evidence);
ClassProbs nb_posterior(const ProbTables& tables, const Evidence& evidence);

// Dirichlet-mean shrinkage of counts toward the prior. Throws ZeroEverything
// when counts are all zero and tau == 0.
ClassProbs leaf_posterior(const ProbTables& tables, const ClassCounts& counts, double tau);

double support_weight(double support, double n0);
ClassProbs hybrid_posterior(const ClassProbs& p_nb, const ClassProbs& p_leaf, double support, double n0);

inline Evidence merge_evidence(const Evidence& e1, const Evidence& e2, const Evidence& shared) {
  return e1 + e2 - shared;
}

struct CoverageEstimate {
  double p_hat = 1.0;
  double n_hat = 0.0;
};

CoverageEstimate approx_coverage(const ProbTables& tables, const Antecedent& antecedent);

// Per-thread call counters for nb_posterior and approx_coverage.
struct ProbCounters {
  std::uint64_t nb_posterior_calls = 0;
  std::uint64_t approx_coverage_calls = 0;
};
ProbCounters& prob_counters();

}  // namespace treerules
