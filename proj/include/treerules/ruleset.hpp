#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "treerules/bitset.hpp"
#include "treerules/condition.hpp"
#include "treerules/dataset.hpp"
#include "treerules/ensemble.hpp"
#include "treerules/evidence.hpp"

namespace treerules {

using Antecedent = std::vector<Condition>;

// Reduces a condition list to its canonical form: sorted, at most one LE (the
// smallest threshold) and one GT (the largest) per feature. Returns nullopt when
// some feature's interval is empty.
std::optional<Antecedent> canonicalize(Antecedent conditions);

std::size_t argmax(const ClassProbs& p);
ClassProbs normalize_counts(const ClassCounts& c);

struct Rule {
  Antecedent antecedent;
  ClassProbs head{0.5, 0.5};
  std::optional<ClassCounts> class_counts;
  std::optional<Evidence> evidence;
  std::optional<CoverageBitset> cov_exact;
  std::optional<double> cov_est;

  std::size_t predicted_class() const { return argmax(head); }
  bool covers(std::span<const double> x) const;
};

struct RuleSet {
  std::vector<Rule> rules;
  std::uint8_t default_class = 0;
  std::array<std::string, kNumClasses> class_names{"0", "1"};
  // Expected feature count; 0 disables the dimension check in predict().
  std::size_t m = 0;

  // Rules plus the default rule.
  std::size_t size_with_default() const { return rules.size() + 1; }
  std::size_t total_conditions() const;
};

// One rule per reachable leaf, in left-to-right leaf order. `leaf_nodes`, when
// given, receives the tree node index behind each rule.
std::vector<Rule> extract_rules(const Tree& tree, std::vector<std::size_t>* leaf_nodes = nullptr);

struct MergedAntecedent {
  Antecedent antecedent;
  // Atoms present verbatim in both inputs (A1 intersect A2 as condition sets).
  Antecedent shared;
  // True when canonicalization dropped an atom that was not a shared duplicate,
  // i.e. the canonical union differs from the plain set union.
  bool tightened = false;
};

// Conjunction of two canonical antecedents; nullopt signals a contradiction.
std::optional<MergedAntecedent> merge_antecedents(const Antecedent& a, const Antecedent& b);

struct EmpiricalStats {
  double cov = 0.0;
  double conf = 0.0;
  ClassCounts class_counts{0, 0};
};

// Exact coverage by scanning `ds`. Caches the coverage bitset and class counts on
// the rule. conf uses the rule's current head class.
EmpiricalStats empirical_stats(Rule& r, const Dataset& ds);
CoverageBitset antecedent_coverage(const Antecedent& a, const Dataset& ds);

struct Prediction {
  std::uint8_t label = 0;
  ClassProbs probs{1.0, 0.0};
};

Prediction predict(const RuleSet& rs, std::span<const double> x);
std::vector<std::uint8_t> predict_all(const RuleSet& rs, const Dataset& ds);

std::string to_text(const RuleSet& rs, int precision = 2);
std::string to_json(const RuleSet& rs);
RuleSet ruleset_from_json(const std::string& text);

}  // namespace treerules
