#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <string>
#include <vector>

#include "treerules/dataset.hpp"
#include "treerules/ensemble.hpp"
#include "treerules/probcore.hpp"
#include "treerules/ruleset.hpp"

namespace treerules {

enum class EvalMode { Probabilistic, Exact };
enum class SupportUnit { Count, Fraction };
enum class SelectionMetric { Accuracy, F1 };

struct SimplifyConfig {
  double eps_conf = 0.5;
  double eps_cov = 0.0;
  double conf_level_c = 0.25;
  double eta = 1.0;
  double tau = 20.0;
  double n0 = 50.0;
  EvalMode mode = EvalMode::Probabilistic;
  SupportUnit support_unit = SupportUnit::Count;
  SelectionMetric selection_metric = SelectionMetric::F1;
  // Class anchoring F1 when selection_metric == F1.
  std::uint8_t positive_class = 1;
  // Recomputes evidence from scratch after every additive merge and counts
  // disagreements in the trace. Diagnostic only.
  bool verify_evidence = false;
};

void validate(const SimplifyConfig& cfg);
std::string to_string(EvalMode mode);
EvalMode parse_mode(const std::string& s);
SupportUnit parse_support_unit(const std::string& s);
SelectionMetric parse_selection_metric(const std::string& s);

// Two-sided standard-normal quantile at c/2, rounded to two decimals
// (c = 0.25 -> 1.15).
double z_from_c(double c);

// Upper bound of the normal-approximation binomial confidence interval on a
// rule's error rate given coverage n (> 0) and observed error e.
double e_upper(double n, double e, double z);

struct IterationRecord {
  std::size_t tree_index = 0;
  std::size_t candidates_generated = 0;
  std::size_t contradictions = 0;
  std::size_t rejected_early = 0;
  std::size_t candidates_kept = 0;
  std::size_t rules_after_pruning = 0;
  std::size_t rules_after_generalization = 0;
  double training_metric = 0.0;
  bool replaced = false;
  std::int64_t ns_combine = 0;
  std::int64_t ns_prune = 0;
  std::int64_t ns_generalize = 0;
  std::int64_t ns_select = 0;
};

struct SimplifyTrace {
  std::vector<IterationRecord> iterations;
  std::uint64_t nb_posterior_calls = 0;
  std::uint64_t approx_coverage_calls = 0;
  std::uint64_t coverage_scans = 0;  // antecedents evaluated against the data
  std::uint64_t evidence_merged = 0;
  std::uint64_t evidence_recomputed = 0;
  std::uint64_t evidence_mismatches = 0;
  std::int64_t ns_tables = 0;
  std::int64_t ns_total = 0;
  bool stopped_early = false;

  // One JSON object per iteration, newline-separated.
  std::string to_json_lines() const;
};

struct SimplifyResult {
  RuleSet ruleset;
  SimplifyTrace trace;
};

SimplifyResult simplify(const Ensemble& h, const Dataset& ds, const SimplifyConfig& cfg);

// The stages below are the building blocks of simplify(); exposed for testing.

// Shared state for one run: the training data, config, fitted tables
// (probabilistic mode only) and instrumentation.
class SimplifyContext {
 public:
  SimplifyContext(const Dataset& ds, const SimplifyConfig& cfg, const Ensemble* h = nullptr);

  const Dataset& data() const noexcept { return ds_; }
  const SimplifyConfig& config() const noexcept { return cfg_; }
  const ProbTables& tables() const;
  bool has_tables() const noexcept { return tables_.has_value(); }
  double z() const noexcept { return z_; }
  SimplifyTrace& trace() noexcept { return trace_; }

  // Coverage of an antecedent as the AND of cached per-atom bitsets; each atom
  // is evaluated against the data once per context.
  CoverageBitset scan(const Antecedent& a);
  const CoverageBitset& atom_bits(const Condition& c);

  // Leaf-informed component; zero counts with tau = 0 fall back to the prior
  // (the tau -> 0+ limit).
  ClassProbs leaf_component(const ClassCounts& counts) const;
  // Hybrid posterior of an antecedent with the given evidence, leaf counts and support.
  ClassProbs hybrid(const Evidence& e, const ClassCounts& counts, double support) const;
  double support_from(double count) const;

  // Prepares an extracted tree rule: exact coverage by routing, evidence in
  // probabilistic mode.
  std::vector<Rule> tree_rules(const Tree& tree);

 private:
  const Dataset& ds_;
  SimplifyConfig cfg_;
  std::optional<ProbTables> tables_;
  double z_ = 1.15;
  SimplifyTrace trace_;
  std::unordered_map<Condition, CoverageBitset, ConditionHash> atom_cache_;
};

struct CandidateStats {
  std::size_t generated = 0;
  std::size_t contradictions = 0;
  std::size_t rejected = 0;
};

std::vector<Rule> generate_candidates(const std::vector<Rule>& rstar, const std::vector<Rule>& rk,
                                      SimplifyContext& ctx, CandidateStats* stats = nullptr);

// Greedy selection on not-yet-covered instances using exact counts. Every
// candidate must carry cov_exact.
std::vector<Rule> sequential_covering_prune(std::vector<Rule> candidates, const Dataset& ds);

std::vector<Rule> generalize(const std::vector<Rule>& rules, SimplifyContext& ctx);

// Exact recount of coverage and counts and refresh of heads/evidence; drops
// duplicate antecedents and empty-coverage rules.
std::vector<Rule> finalize_rules(std::vector<Rule> rules, SimplifyContext& ctx);

// Majority class of instances no rule covers (dataset majority when every
// instance is covered). Rules must carry cov_exact.
RuleSet default_rule(RuleSet rs, const Dataset& ds);

// Training-set metric of rules + default rule; rules must carry cov_exact.
double training_metric(const RuleSet& rs, const Dataset& ds, const SimplifyConfig& cfg);

}  // namespace treerules
