#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "treerules/dataset.hpp"
#include "treerules/ensemble.hpp"
#include "treerules/simplifier.hpp"

namespace treerules {

struct GridSpec {
  std::vector<std::size_t> n_trees{10, 50, 100};
  std::vector<std::size_t> depth{2, 3, 4};
  std::vector<double> eps_conf{0.5};
  std::vector<double> eps_cov{0.0, 0.01};
  std::vector<double> c{0.25};
  std::vector<double> eta{1.0};
  std::vector<double> tau{0.0, 20.0};
  std::vector<double> n0{50.0};

  // Small default used for desk runs.
  static GridSpec desk();
  // Every value of the published search space.
  static GridSpec full();
  static GridSpec from_json(const std::string& text);
  static GridSpec load(const std::filesystem::path& path);
  std::string to_json() const;

  std::vector<TrainConfig> ensemble_points() const;
  // Exact mode ignores eta, tau and n0, so those axes collapse to their first value.
  std::vector<SimplifyConfig> simplifier_points(EvalMode mode) const;
};

void validate(const GridSpec& grid);

// Which class anchors F1: "0", "1", "majority", "minority" or a class name.
std::uint8_t resolve_positive(const std::string& spec, const Dataset& ds);

struct ReportRow {
  std::string dataset;
  std::size_t fold = 0;
  std::size_t repeat = 0;
  std::string mode;
  std::string config_hash;
  double train_f1 = 0, test_f1 = 0;
  double train_accuracy = 0, test_accuracy = 0;
  std::size_t n_rules_final = 0;
  std::size_t n_rules_ensemble = 0;
  std::size_t total_conditions = 0;
  double simplify_time_s = 0;
  double ensemble_time_s = 0;
  // Extras after the fixed leading columns.
  std::size_t positive_class = 1;
  double test_f1_majority = 0, test_f1_minority = 0;
  double ensemble_test_f1 = 0;
  std::size_t n_trees = 0, depth = 0;
  double eps_conf = 0, eps_cov = 0, c = 0, eta = 0, tau = 0, n0 = 0;
  std::size_t iterations = 0;
  bool stopped_early = false;
};

struct RunReport {
  std::vector<ReportRow> rows;

  static const std::vector<std::string>& columns();
  std::string to_csv() const;
  static RunReport from_csv(const std::string& text);
  static RunReport load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct CvOptions {
  std::string dataset_name = "data";
  std::string positive = "1";
  std::size_t inner_ensemble_folds = 5;
  std::size_t inner_simplifier_folds = 3;
  bool bootstrap = true;
  // Fraction of features tried per split; unset means sqrt(m)/m.
  std::optional<double> feature_subsample;
  std::size_t min_leaf = 1;
  SupportUnit support_unit = SupportUnit::Count;
  std::size_t jobs = 1;
  // Skips the inner ensemble search and uses this configuration directly.
  std::optional<TrainConfig> fixed_ensemble;
};

RunReport run_cv(const Dataset& ds, const GridSpec& grid, const FoldPlan& plan,
                 const std::vector<EvalMode>& modes, const CvOptions& opts = {});

struct SpeedupLine {
  std::string dataset;  // "ALL" for the aggregate line
  double mean_time_probabilistic = 0;
  double mean_time_exact = 0;
  double ratio = 0;  // exact / probabilistic
};

// Throws MissingMode unless every dataset has rows for both modes.
std::vector<SpeedupLine> speedup_report(const RunReport& report);
std::string speedup_csv(const std::vector<SpeedupLine>& lines);

struct CompactnessLine {
  std::string dataset;
  std::string mode;
  std::size_t rows = 0;
  double median_rules = 0;
  double mean_rules = 0;
  double mean_rules_ensemble = 0;
  double mean_test_f1 = 0, sd_test_f1 = 0;
  double mean_test_accuracy = 0;
  std::size_t rows_not_smaller = 0;  // n_rules_final >= n_rules_ensemble
};

std::vector<CompactnessLine> compactness_report(const RunReport& report);
std::string compactness_csv(const std::vector<CompactnessLine>& lines);

}  // namespace treerules
