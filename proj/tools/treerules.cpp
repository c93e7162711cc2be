#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "treerules/bench.hpp"
#include "treerules/error.hpp"
#include "treerules/probcore.hpp"
#include "treerules/ruleset.hpp"
#include "treerules/simplifier.hpp"

using namespace treerules;
namespace fs = std::filesystem;

namespace {

struct DataArgs {
  std::string path;
  std::string label;

  Dataset load() const {
    LabelColumn lc;
    if (!label.empty()) {
      const bool numeric = label.find_first_not_of("0123456789") == std::string::npos;
      if (numeric) {
        lc.index = std::stoul(label);
      } else {
        lc.name = label;
      }
    }
    return load_csv(path, lc);
  }
};

void add_data_options(CLI::App* cmd, DataArgs& d) {
  cmd->add_option("--data", d.path, "CSV file with a header row")->required()->check(CLI::ExistingFile);
  cmd->add_option("--label", d.label, "label column name or index (default: last column)");
}

void write_out(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::MissingFile, "cannot write " + path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ForestArgs {
  std::size_t trees = 100;
  std::size_t depth = 3;
  std::uint64_t seed = 0;
  bool cart = false;
  bool no_bootstrap = false;
  std::size_t min_leaf = 1;
  double max_features = 0.0;  // 0 -> sqrt(m)/m

  Ensemble train(const Dataset& ds) const {
    TrainConfig cfg;
    cfg.n_trees = cart ? 1 : trees;
    cfg.max_depth = depth;
    cfg.seed = seed;
    cfg.min_leaf = min_leaf;
    if (cart) return train_cart(ds, cfg);
    cfg.bootstrap = !no_bootstrap;
    cfg.feature_subsample =
        max_features > 0.0 ? max_features : std::sqrt(static_cast<double>(ds.m())) / static_cast<double>(ds.m());
    return train_forest(ds, cfg);
  }
};

void add_forest_options(CLI::App* cmd, ForestArgs& f) {
  cmd->add_option("--trees", f.trees, "number of trees")->check(CLI::PositiveNumber);
  cmd->add_option("--depth", f.depth, "maximum tree depth")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_flag("--cart", f.cart, "single CART tree on the full data");
  cmd->add_flag("--no-bootstrap", f.no_bootstrap, "train every tree on the full data");
  cmd->add_option("--min-leaf", f.min_leaf, "minimum instances per leaf")->check(CLI::PositiveNumber);
  cmd->add_option("--max-features", f.max_features, "fraction of features tried per split")
      ->check(CLI::Range(0.0, 1.0));
}

SimplifyConfig config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  SimplifyConfig c;
  c.eps_conf = j.value("eps_conf", c.eps_conf);
  c.eps_cov = j.value("eps_cov", c.eps_cov);
  c.conf_level_c = j.value("c", c.conf_level_c);
  c.eta = j.value("eta", c.eta);
  c.tau = j.value("tau", c.tau);
  c.n0 = j.value("n0", c.n0);
  if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
  if (j.contains("support_unit")) c.support_unit = parse_support_unit(j.at("support_unit").get<std::string>());
  if (j.contains("selection_metric")) {
    c.selection_metric = parse_selection_metric(j.at("selection_metric").get<std::string>());
  }
  return c;
}

std::vector<EvalMode> parse_modes(const std::string& s) {
  std::vector<EvalMode> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(parse_mode(item));
  }
  if (out.empty()) throw Error(ErrorKind::InvalidConfig, "no modes given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree-ensemble rule extraction and simplification"};
  app.require_subcommand(1);

  // train
  DataArgs train_data;
  ForestArgs train_forest_args;
  std::string train_out;
  auto* train = app.add_subcommand("train", "train a forest and write it as ensemble JSON");
  add_data_options(train, train_data);
  add_forest_options(train, train_forest_args);
  train->add_option("--out", train_out, "output path (default: stdout)");

  // extract
  DataArgs ex_data;
  std::string ex_ensemble, ex_out;
  bool ex_json = false;
  auto* extract = app.add_subcommand("extract", "list every root-to-leaf rule of an ensemble");
  add_data_options(extract, ex_data);
  extract->add_option("--ensemble", ex_ensemble, "ensemble JSON")->required()->check(CLI::ExistingFile);
  extract->add_flag("--json", ex_json, "emit JSON instead of text");
  extract->add_option("--out", ex_out, "output path (default: stdout)");

  // simplify
  DataArgs s_data;
  ForestArgs s_forest;
  std::string s_ensemble, s_out, s_trace, s_tables, s_config, s_mode, s_support, s_metric, s_positive = "1";
  double s_eps_conf = 0, s_eps_cov = 0, s_c = 0, s_eta = 0, s_tau = 0, s_n0 = 0;
  bool s_json = false;
  auto* simp = app.add_subcommand("simplify", "simplify an ensemble into a compact ruleset");
  add_data_options(simp, s_data);
  simp->add_option("--ensemble", s_ensemble, "ensemble JSON (default: train a forest from the forest flags)")
      ->check(CLI::ExistingFile);
  add_forest_options(simp, s_forest);
  simp->add_option("--config", s_config, "JSON file with simplifier settings")->check(CLI::ExistingFile);
  auto* o_mode = simp->add_option("--mode", s_mode, "probabilistic | exact");
  auto* o_eps_conf = simp->add_option("--eps-conf", s_eps_conf, "minimum candidate confidence");
  auto* o_eps_cov = simp->add_option("--eps-cov", s_eps_cov, "minimum candidate coverage (fraction)");
  auto* o_c = simp->add_option("--c", s_c, "confidence level for the pessimistic error");
  auto* o_eta = simp->add_option("--eta", s_eta, "smoothing pseudo-count");
  auto* o_tau = simp->add_option("--tau", s_tau, "leaf shrinkage strength");
  auto* o_n0 = simp->add_option("--n0", s_n0, "mixing half-support");
  auto* o_support = simp->add_option("--support-unit", s_support, "count | fraction");
  auto* o_metric = simp->add_option("--selection-metric", s_metric, "f1 | accuracy");
  simp->add_option("--positive", s_positive, "class anchoring F1: 0, 1, majority, minority or a class name");
  simp->add_option("--trace", s_trace, "write the iteration trace as JSON lines");
  simp->add_option("--dump-tables", s_tables, "write the fitted probability tables as JSON");
  simp->add_flag("--json", s_json, "emit the ruleset as JSON");
  simp->add_option("--out", s_out, "output path (default: stdout)");

  // cv
  std::vector<std::string> cv_paths;
  std::string cv_label, cv_grid, cv_out = "results", cv_modes = "probabilistic,exact", cv_positive = "1";
  std::size_t cv_repeats = 3, cv_folds = 10, cv_jobs = 1;
  std::uint64_t cv_seed = 0;
  bool cv_full = false;
  auto* cv = app.add_subcommand("cv", "repeated stratified cross-validation of both modes");
  cv->add_option("--data", cv_paths, "CSV file(s); repeat the flag for several datasets")
      ->required()
      ->check(CLI::ExistingFile);
  cv->add_option("--label", cv_label, "label column name or index (default: last column)");
  cv->add_option("--repeats", cv_repeats, "repeats")->check(CLI::PositiveNumber);
  cv->add_option("--folds", cv_folds, "folds per repeat")->check(CLI::Range(2, 1000));
  cv->add_option("--seed", cv_seed, "random seed");
  cv->add_option("--grid", cv_grid, "grid JSON file")->check(CLI::ExistingFile);
  cv->add_flag("--full-grid", cv_full, "search the complete published grid");
  cv->add_option("--modes", cv_modes, "comma-separated modes");
  cv->add_option("--positive", cv_positive, "class anchoring F1: 0, 1, majority, minority or a class name");
  cv->add_option("--jobs", cv_jobs, "parallel folds (timings are cleanest with 1)")->check(CLI::PositiveNumber);
  cv->add_option("--out", cv_out, "output directory");

  // report
  std::string rep_in, rep_out;
  auto* report = app.add_subcommand("report", "speedup and compactness summaries of a report CSV");
  report->add_option("--in", rep_in, "report CSV")->required()->check(CLI::ExistingFile);
  report->add_option("--out", rep_out, "directory for summary CSVs (default: print only)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto ds = train_data.load();
      write_out(train_out, export_json(train_forest_args.train(ds)) + "\n");
    } else if (*extract) {
      const auto ds = ex_data.load();
      const auto h = import_json(ex_ensemble, ds);
      RuleSet rs;
      rs.class_names = ds.class_names();
      rs.m = ds.m();
      for (const auto& t : h.trees) {
        for (auto& r : extract_rules(t)) {
          empirical_stats(r, ds);
          rs.rules.push_back(std::move(r));
        }
      }
      rs = default_rule(std::move(rs), ds);
      write_out(ex_out, ex_json ? to_json(rs) + "\n" : to_text(rs));
    } else if (*simp) {
      const auto ds = s_data.load();
      const Ensemble h = s_ensemble.empty() ? s_forest.train(ds) : import_json(s_ensemble, ds);
      SimplifyConfig cfg = s_config.empty() ? SimplifyConfig{} : config_from_json(read_file(s_config));
      if (*o_mode) cfg.mode = parse_mode(s_mode);
      if (*o_eps_conf) cfg.eps_conf = s_eps_conf;
      if (*o_eps_cov) cfg.eps_cov = s_eps_cov;
      if (*o_c) cfg.conf_level_c = s_c;
      if (*o_eta) cfg.eta = s_eta;
      if (*o_tau) cfg.tau = s_tau;
      if (*o_n0) cfg.n0 = s_n0;
      if (*o_support) cfg.support_unit = parse_support_unit(s_support);
      if (*o_metric) cfg.selection_metric = parse_selection_metric(s_metric);
      cfg.positive_class = resolve_positive(s_positive, ds);
      const auto res = simplify(h, ds, cfg);
      write_out(s_out, s_json ? to_json(res.ruleset) + "\n" : to_text(res.ruleset));
      if (!s_trace.empty()) write_out(s_trace, res.trace.to_json_lines());
      if (!s_tables.empty()) {
        if (cfg.mode != EvalMode::Probabilistic) {
          throw Error(ErrorKind::InvalidConfig, "--dump-tables needs --mode probabilistic");
        }
        const auto atoms = ensemble_atoms(h);
        write_out(s_tables, fit_tables(ds, atoms, cfg.eta).to_json() + "\n");
      }
      std::cerr << "rules: " << res.ruleset.size_with_default() << " (ensemble " << n_rules(h) << "), "
                << "iterations: " << res.trace.iterations.size() << ", time: " << res.trace.ns_total / 1e9
                << " s\n";
    } else if (*cv) {
      GridSpec grid = cv_full ? GridSpec::full() : GridSpec::desk();
      if (!cv_grid.empty()) grid = GridSpec::load(cv_grid);
      const auto modes = parse_modes(cv_modes);
      fs::create_directories(cv_out);
      RunReport all;
      for (const auto& path : cv_paths) {
        const auto ds = DataArgs{path, cv_label}.load();
        const auto plan = stratified_folds(ds, cv_repeats, cv_folds, cv_seed);
        CvOptions opts;
        opts.dataset_name = fs::path(path).stem().string();
        opts.positive = cv_positive;
        opts.jobs = cv_jobs;
        std::cerr << opts.dataset_name << ": " << cv_repeats << "x" << cv_folds << " folds\n";
        auto rep = run_cv(ds, grid, plan, modes, opts);
        for (auto& r : rep.rows) all.rows.push_back(std::move(r));
      }
      all.save(fs::path(cv_out) / "report.csv");
      const auto comp = compactness_csv(compactness_report(all));
      write_out((fs::path(cv_out) / "compactness.csv").string(), comp);
      std::cout << comp;
      if (modes.size() > 1) {
        const auto sp = speedup_csv(speedup_report(all));
        write_out((fs::path(cv_out) / "speedup.csv").string(), sp);
        std::cout << sp;
      }
      for (const auto& r : all.rows) {
        if (r.n_trees >= 2 && r.n_rules_final >= r.n_rules_ensemble) {
          std::cerr << "warning: " << r.dataset << " fold " << r.fold << " repeat " << r.repeat << " (" << r.mode
                    << ") kept " << r.n_rules_final << " of " << r.n_rules_ensemble << " rules\n";
        }
      }
    } else if (*report) {
      const auto rep = RunReport::load(rep_in);
      const auto comp = compactness_csv(compactness_report(rep));
      const auto sp = speedup_csv(speedup_report(rep));
      std::cout << comp << "\n" << sp;
      if (!rep_out.empty()) {
        fs::create_directories(rep_out);
        write_out((fs::path(rep_out) / "compactness.csv").string(), comp);
        write_out((fs::path(rep_out) / "speedup.csv").string(), sp);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
