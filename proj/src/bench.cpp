#include "treerules/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "treerules/error.hpp"
#include "treerules/metrics.hpp"
#include "treerules/rng.hpp"
#include "treerules/ruleset.hpp"

namespace treerules {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
void read_axis(const json& j, const char* key, std::vector<T>& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_array()) throw Error(ErrorKind::SchemaError, std::string("grid axis '") + key + "' must be an array");
  out.clear();
  for (const auto& x : v) {
    if (!x.is_number()) throw Error(ErrorKind::SchemaError, std::string("grid axis '") + key + "' must hold numbers");
    if constexpr (std::is_integral_v<T>) {
      if (!x.is_number_integer() || x.get<std::int64_t>() < 0) {
        throw Error(ErrorKind::SchemaError, std::string("grid axis '") + key + "' must hold non-negative integers");
      }
    }
    out.push_back(x.get<T>());
  }
}

std::string fnv_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_key(const TrainConfig& t, const SimplifyConfig& s) {
  std::ostringstream os;
  os << "trees=" << t.n_trees << ";depth=" << t.max_depth << ";bootstrap=" << t.bootstrap
     << ";fsub=" << fmt(t.feature_subsample) << ";min_leaf=" << t.min_leaf << ";mode=" << to_string(s.mode)
     << ";eps_conf=" << fmt(s.eps_conf) << ";eps_cov=" << fmt(s.eps_cov) << ";c=" << fmt(s.conf_level_c);
  if (s.mode == EvalMode::Probabilistic) {
    os << ";eta=" << fmt(s.eta) << ";tau=" << fmt(s.tau) << ";n0=" << fmt(s.n0)
       << ";support=" << (s.support_unit == SupportUnit::Count ? "count" : "fraction");
  }
  os << ";positive=" << int(s.positive_class);
  return os.str();
}

double ensemble_f1(const Ensemble& h, const Dataset& ds, std::uint8_t positive) {
  std::vector<std::uint8_t> pred(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) pred[i] = predict_ensemble(h, ds.row(i));
  return f1_score(pred, ds.labels(), positive);
}

// Folds for an inner split; shrinks k when a class is too small to appear in every fold.
FoldPlan inner_plan(const Dataset& ds, std::size_t k, std::uint64_t seed) {
  const auto counts = ds.class_counts();
  const auto smallest = static_cast<std::size_t>(std::min(counts[0], counts[1]));
  k = std::max<std::size_t>(2, std::min(k, smallest));
  return stratified_folds(ds.labels(), 1, k, seed);
}

std::vector<std::string> parse_csv_record(const std::string& text, std::size_t& pos) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  while (pos < text.size()) {
    const char ch = text[pos];
    if (quoted) {
      if (ch == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          cur.push_back('"');
          pos += 2;
          continue;
        }
        quoted = false;
      } else {
        cur.push_back(ch);
      }
      ++pos;
      continue;
    }
    if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (ch == '\r') {
      // swallowed; CRLF and LF both end a record
    } else if (ch == '\n') {
      ++pos;
      fields.push_back(std::move(cur));
      return fields;
    } else {
      cur.push_back(ch);
    }
    ++pos;
  }
  if (quoted) throw Error(ErrorKind::SchemaError, "unterminated quoted CSV field");
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

double to_double(const std::string& s, const std::string& col) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::SchemaError, "column '" + col + "': bad number '" + s + "'");
  }
  return v;
}

std::size_t to_size(const std::string& s, const std::string& col) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::SchemaError, "column '" + col + "': bad integer '" + s + "'");
  }
  return v;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

GridSpec GridSpec::desk() { return GridSpec{}; }

GridSpec GridSpec::full() {
  GridSpec g;
  g.n_trees = {10, 25, 50, 100, 250, 500};
  g.depth = {2, 3, 4, 5, 6};
  g.eps_conf = {0.5, 0.95};
  g.eps_cov = {0.0, 0.001, 0.01};
  g.c = {0.10, 0.25, 0.40};
  g.eta = {0.3, 1.0, 3.0};
  g.tau = {0.0, 20.0};
  g.n0 = {25.0, 50.0, 100.0};
  return g;
}

GridSpec GridSpec::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaError, std::string("grid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::SchemaError, "grid JSON must be an object");
  GridSpec g = desk();
  if (j.value("preset", std::string("desk")) == "full") g = full();
  read_axis(j, "n_trees", g.n_trees);
  read_axis(j, "depth", g.depth);
  read_axis(j, "eps_conf", g.eps_conf);
  read_axis(j, "eps_cov", g.eps_cov);
  read_axis(j, "c", g.c);
  read_axis(j, "eta", g.eta);
  read_axis(j, "tau", g.tau);
  read_axis(j, "n0", g.n0);
  validate(g);
  return g;
}

GridSpec GridSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open grid file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string GridSpec::to_json() const {
  nlohmann::ordered_json j;
  j["n_trees"] = n_trees;
  j["depth"] = depth;
  j["eps_conf"] = eps_conf;
  j["eps_cov"] = eps_cov;
  j["c"] = c;
  j["eta"] = eta;
  j["tau"] = tau;
  j["n0"] = n0;
  return j.dump(2);
}

void validate(const GridSpec& g) {
  auto nonempty = [](const auto& v, const char* name) {
    if (v.empty()) throw Error(ErrorKind::InvalidConfig, std::string("grid axis '") + name + "' is empty");
  };
  nonempty(g.n_trees, "n_trees");
  nonempty(g.depth, "depth");
  nonempty(g.eps_conf, "eps_conf");
  nonempty(g.eps_cov, "eps_cov");
  nonempty(g.c, "c");
  nonempty(g.eta, "eta");
  nonempty(g.tau, "tau");
  nonempty(g.n0, "n0");
  for (auto t : g.n_trees) {
    if (t < 1) throw Error(ErrorKind::InvalidConfig, "n_trees must be >= 1");
  }
  for (auto d : g.depth) {
    if (d < 1) throw Error(ErrorKind::InvalidConfig, "depth must be >= 1");
  }
  for (const auto& s : g.simplifier_points(EvalMode::Probabilistic)) validate(s);
}

std::vector<TrainConfig> GridSpec::ensemble_points() const {
  std::vector<TrainConfig> out;
  for (auto t : n_trees) {
    for (auto d : depth) {
      TrainConfig c;
      c.n_trees = t;
      c.max_depth = d;
      out.push_back(c);
    }
  }
  return out;
}

std::vector<SimplifyConfig> GridSpec::simplifier_points(EvalMode mode) const {
  const bool prob = mode == EvalMode::Probabilistic;
  const std::vector<double> eta1{eta.front()}, tau1{tau.front()}, n01{n0.front()};
  std::vector<SimplifyConfig> out;
  for (double a : eps_conf)
    for (double b : eps_cov)
      for (double cc : c)
        for (double e : prob ? eta : eta1)
          for (double t : prob ? tau : tau1)
            for (double n : prob ? n0 : n01) {
              SimplifyConfig s;
              s.mode = mode;
              s.eps_conf = a;
              s.eps_cov = b;
              s.conf_level_c = cc;
              s.eta = e;
              s.tau = t;
              s.n0 = n;
              out.push_back(s);
            }
  return out;
}

std::uint8_t resolve_positive(const std::string& spec, const Dataset& ds) {
  const auto counts = ds.class_counts();
  const std::uint8_t majority = counts[1] > counts[0] ? 1 : 0;
  if (spec == "0") return 0;
  if (spec == "1") return 1;
  if (spec == "majority") return majority;
  if (spec == "minority") return static_cast<std::uint8_t>(1 - majority);
  const auto& names = ds.class_names();
  for (std::uint8_t k = 0; k < kNumClasses; ++k) {
    if (!names[k].empty() && names[k] == spec) return k;
  }
  throw Error(ErrorKind::InvalidConfig, "unknown positive class '" + spec + "'");
}

const std::vector<std::string>& RunReport::columns() {
  static const std::vector<std::string> cols{
      "dataset", "fold", "repeat", "mode", "config_hash", "train_f1", "test_f1", "train_accuracy",
      "test_accuracy", "n_rules_final", "n_rules_ensemble", "total_conditions", "simplify_time_s",
      "ensemble_time_s", "positive_class", "test_f1_majority", "test_f1_minority", "ensemble_test_f1",
      "n_trees", "depth", "eps_conf", "eps_cov", "c", "eta", "tau", "n0", "iterations", "stopped_early"};
  return cols;
}

std::string RunReport::to_csv() const {
  std::ostringstream os;
  const auto& cols = columns();
  for (std::size_t k = 0; k < cols.size(); ++k) os << (k ? "," : "") << cols[k];
  os << "\r\n";
  for (const auto& r : rows) {
    const std::vector<std::string> f{csv_field(r.dataset),
                                     std::to_string(r.fold),
                                     std::to_string(r.repeat),
                                     csv_field(r.mode),
                                     r.config_hash,
                                     fmt(r.train_f1),
                                     fmt(r.test_f1),
                                     fmt(r.train_accuracy),
                                     fmt(r.test_accuracy),
                                     std::to_string(r.n_rules_final),
                                     std::to_string(r.n_rules_ensemble),
                                     std::to_string(r.total_conditions),
                                     fmt(r.simplify_time_s),
                                     fmt(r.ensemble_time_s),
                                     std::to_string(r.positive_class),
                                     fmt(r.test_f1_majority),
                                     fmt(r.test_f1_minority),
                                     fmt(r.ensemble_test_f1),
                                     std::to_string(r.n_trees),
                                     std::to_string(r.depth),
                                     fmt(r.eps_conf),
                                     fmt(r.eps_cov),
                                     fmt(r.c),
                                     fmt(r.eta),
                                     fmt(r.tau),
                                     fmt(r.n0),
                                     std::to_string(r.iterations),
                                     r.stopped_early ? "1" : "0"};
    for (std::size_t k = 0; k < f.size(); ++k) os << (k ? "," : "") << f[k];
    os << "\r\n";
  }
  return os.str();
}

RunReport RunReport::from_csv(const std::string& text) {
  std::size_t pos = 0;
  const auto header = parse_csv_record(text, pos);
  std::map<std::string, std::size_t> col;
  for (std::size_t k = 0; k < header.size(); ++k) col[header[k]] = k;
  for (const auto& name : columns()) {
    if (!col.count(name)) throw Error(ErrorKind::SchemaError, "report is missing column '" + name + "'");
  }
  RunReport rep;
  while (pos < text.size()) {
    const auto f = parse_csv_record(text, pos);
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != header.size()) throw Error(ErrorKind::SchemaError, "report row has the wrong field count");
    auto get = [&](const std::string& name) -> const std::string& { return f[col.at(name)]; };
    auto d = [&](const std::string& name) { return to_double(get(name), name); };
    auto z = [&](const std::string& name) { return to_size(get(name), name); };
    ReportRow r;
    r.dataset = get("dataset");
    r.fold = z("fold");
    r.repeat = z("repeat");
    r.mode = get("mode");
    r.config_hash = get("config_hash");
    r.train_f1 = d("train_f1");
    r.test_f1 = d("test_f1");
    r.train_accuracy = d("train_accuracy");
    r.test_accuracy = d("test_accuracy");
    r.n_rules_final = z("n_rules_final");
    r.n_rules_ensemble = z("n_rules_ensemble");
    r.total_conditions = z("total_conditions");
    r.simplify_time_s = d("simplify_time_s");
    r.ensemble_time_s = d("ensemble_time_s");
    r.positive_class = z("positive_class");
    r.test_f1_majority = d("test_f1_majority");
    r.test_f1_minority = d("test_f1_minority");
    r.ensemble_test_f1 = d("ensemble_test_f1");
    r.n_trees = z("n_trees");
    r.depth = z("depth");
    r.eps_conf = d("eps_conf");
    r.eps_cov = d("eps_cov");
    r.c = d("c");
    r.eta = d("eta");
    r.tau = d("tau");
    r.n0 = d("n0");
    r.iterations = z("iterations");
    r.stopped_early = get("stopped_early") == "1";
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

RunReport RunReport::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open report " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_csv(ss.str());
}

void RunReport::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::MissingFile, "cannot write report " + path.string());
  out << to_csv();
}

RunReport run_cv(const Dataset& ds, const GridSpec& grid, const FoldPlan& plan,
                 const std::vector<EvalMode>& modes, const CvOptions& opts) {
  validate(grid);
  if (modes.empty()) throw Error(ErrorKind::InvalidConfig, "no evaluation modes requested");
  if (plan.assignments.size() != plan.repeats) throw Error(ErrorKind::InvalidConfig, "fold plan is incomplete");
  for (const auto& a : plan.assignments) {
    if (a.size() != ds.n()) throw Error(ErrorKind::DimensionMismatch, "fold plan does not match the dataset");
  }
  ds.require_both_classes();
  const std::uint8_t positive = resolve_positive(opts.positive, ds);
  const std::uint8_t majority = resolve_positive("majority", ds);
  const double fsub = opts.feature_subsample.value_or(std::sqrt(static_cast<double>(ds.m())) /
                                                      static_cast<double>(ds.m()));

  auto finish_train_cfg = [&](TrainConfig c, std::uint64_t seed) {
    c.bootstrap = opts.bootstrap;
    c.feature_subsample = fsub;
    c.min_leaf = opts.min_leaf;
    c.seed = seed;
    return c;
  };

  const std::size_t n_tasks = plan.repeats * plan.folds;
  std::vector<std::vector<ReportRow>> out(n_tasks);

  auto run_task = [&](std::size_t task) {
    const std::size_t r = task / plan.folds, f = task % plan.folds;
    const auto train_idx = plan.train_indices(r, f);
    const auto test_idx = plan.test_indices(r, f);
    const Dataset train = ds.subset(train_idx);
    const Dataset test = ds.subset(test_idx);
    const std::uint64_t task_seed = derive_seed(plan.seed, 0x1000 + task);
    const std::uint64_t forest_seed = derive_seed(task_seed, 1);

    // Ensemble configuration by inner CV on the training partition.
    TrainConfig chosen;
    if (opts.fixed_ensemble) {
      chosen = *opts.fixed_ensemble;
      chosen.seed = forest_seed;
    } else {
      const auto inner = inner_plan(train, opts.inner_ensemble_folds, derive_seed(task_seed, 2));
      std::vector<Dataset> itrain, ival;
      for (std::size_t k = 0; k < inner.folds; ++k) {
        itrain.push_back(train.subset(inner.train_indices(0, k)));
        ival.push_back(train.subset(inner.test_indices(0, k)));
      }
      double best = -1.0;
      for (const auto& point : grid.ensemble_points()) {
        const auto cfg = finish_train_cfg(point, forest_seed);
        double score = 0.0;
        for (std::size_t k = 0; k < inner.folds; ++k) {
          score += ensemble_f1(train_forest(itrain[k], cfg), ival[k], positive);
        }
        score /= static_cast<double>(inner.folds);
        if (score > best) {
          best = score;
          chosen = cfg;
        }
      }
    }

    const auto t0 = std::chrono::steady_clock::now();
    const Ensemble h = train_forest(train, chosen);
    const double ensemble_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double ens_test_f1 = ensemble_f1(h, test, positive);

    // Simplifier configuration by inner CV, per mode, on ensembles trained on the inner splits.
    const auto sinner = inner_plan(train, opts.inner_simplifier_folds, derive_seed(task_seed, 3));
    std::vector<Dataset> strain, sval;
    std::vector<Ensemble> sens;
    for (std::size_t k = 0; k < sinner.folds; ++k) {
      strain.push_back(train.subset(sinner.train_indices(0, k)));
      sval.push_back(train.subset(sinner.test_indices(0, k)));
      sens.push_back(train_forest(strain.back(), chosen));
    }

    std::vector<ReportRow> rows;
    for (const auto mode : modes) {
      SimplifyConfig best_cfg;
      double best = -1.0;
      for (auto cfg : grid.simplifier_points(mode)) {
        cfg.support_unit = opts.support_unit;
        cfg.selection_metric = SelectionMetric::F1;
        cfg.positive_class = positive;
        double score = 0.0;
        for (std::size_t k = 0; k < sinner.folds; ++k) {
          const auto res = simplify(sens[k], strain[k], cfg);
          score += f1_score(predict_all(res.ruleset, sval[k]), sval[k].labels(), positive);
        }
        score /= static_cast<double>(sinner.folds);
        if (score > best) {
          best = score;
          best_cfg = cfg;
        }
      }

      const auto s0 = std::chrono::steady_clock::now();
      const auto res = simplify(h, train, best_cfg);
      const double simplify_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();

      const auto ptrain = predict_all(res.ruleset, train);
      const auto ptest = predict_all(res.ruleset, test);
      ReportRow row;
      row.dataset = opts.dataset_name;
      row.fold = f;
      row.repeat = r;
      row.mode = to_string(mode);
      row.config_hash = fnv_hex(config_key(chosen, best_cfg));
      row.train_f1 = f1_score(ptrain, train.labels(), positive);
      row.test_f1 = f1_score(ptest, test.labels(), positive);
      row.train_accuracy = accuracy(ptrain, train.labels());
      row.test_accuracy = accuracy(ptest, test.labels());
      row.n_rules_final = res.ruleset.size_with_default();
      row.n_rules_ensemble = n_rules(h);
      row.total_conditions = res.ruleset.total_conditions();
      row.simplify_time_s = simplify_time;
      row.ensemble_time_s = ensemble_time;
      row.positive_class = positive;
      row.test_f1_majority = f1_score(ptest, test.labels(), majority);
      row.test_f1_minority = f1_score(ptest, test.labels(), static_cast<std::uint8_t>(1 - majority));
      row.ensemble_test_f1 = ens_test_f1;
      row.n_trees = chosen.n_trees;
      row.depth = chosen.max_depth;
      row.eps_conf = best_cfg.eps_conf;
      row.eps_cov = best_cfg.eps_cov;
      row.c = best_cfg.conf_level_c;
      row.eta = best_cfg.eta;
      row.tau = best_cfg.tau;
      row.n0 = best_cfg.n0;
      row.iterations = res.trace.iterations.size();
      row.stopped_early = res.trace.stopped_early;
      rows.push_back(std::move(row));
    }
    out[task] = std::move(rows);
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, n_tasks));
  if (jobs == 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t; (t = next.fetch_add(1)) < n_tasks;) {
          try {
            run_task(t);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  RunReport rep;
  for (auto& rows : out) {
    for (auto& row : rows) rep.rows.push_back(std::move(row));
  }
  return rep;
}

std::vector<SpeedupLine> speedup_report(const RunReport& report) {
  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, std::vector<double>>> times;
  for (const auto& r : report.rows) {
    if (!times.count(r.dataset)) order.push_back(r.dataset);
    times[r.dataset][r.mode].push_back(r.simplify_time_s);
  }
  if (order.empty()) throw Error(ErrorKind::MissingMode, "report has no rows");
  std::vector<SpeedupLine> out;
  std::vector<double> all_p, all_e;
  for (const auto& name : order) {
    auto& m = times[name];
    const auto p = m.find("probabilistic"), e = m.find("exact");
    if (p == m.end() || e == m.end()) {
      throw Error(ErrorKind::MissingMode, "dataset '" + name + "' lacks rows for both modes");
    }
    SpeedupLine line;
    line.dataset = name;
    line.mean_time_probabilistic = mean(p->second);
    line.mean_time_exact = mean(e->second);
    line.ratio = line.mean_time_exact / line.mean_time_probabilistic;
    out.push_back(line);
    all_p.insert(all_p.end(), p->second.begin(), p->second.end());
    all_e.insert(all_e.end(), e->second.begin(), e->second.end());
  }
  SpeedupLine agg;
  agg.dataset = "ALL";
  agg.mean_time_probabilistic = mean(all_p);
  agg.mean_time_exact = mean(all_e);
  agg.ratio = agg.mean_time_exact / agg.mean_time_probabilistic;
  out.push_back(agg);
  return out;
}

std::string speedup_csv(const std::vector<SpeedupLine>& lines) {
  std::ostringstream os;
  os << "dataset,mean_time_probabilistic_s,mean_time_exact_s,ratio_exact_over_probabilistic\r\n";
  for (const auto& l : lines) {
    os << csv_field(l.dataset) << ',' << fmt(l.mean_time_probabilistic) << ',' << fmt(l.mean_time_exact) << ','
       << fmt(l.ratio) << "\r\n";
  }
  return os.str();
}

std::vector<CompactnessLine> compactness_report(const RunReport& report) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<const ReportRow*>> groups;
  for (const auto& r : report.rows) {
    const auto key = std::make_pair(r.dataset, r.mode);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  std::vector<CompactnessLine> out;
  for (const auto& key : order) {
    const auto& g = groups[key];
    std::vector<double> rules, ens, f1, acc;
    CompactnessLine line;
    line.dataset = key.first;
    line.mode = key.second;
    line.rows = g.size();
    for (const auto* r : g) {
      rules.push_back(static_cast<double>(r->n_rules_final));
      ens.push_back(static_cast<double>(r->n_rules_ensemble));
      f1.push_back(r->test_f1);
      acc.push_back(r->test_accuracy);
      line.rows_not_smaller += r->n_rules_final >= r->n_rules_ensemble;
    }
    line.median_rules = median(rules);
    line.mean_rules = mean(rules);
    line.mean_rules_ensemble = mean(ens);
    line.mean_test_f1 = mean(f1);
    double ss = 0;
    for (double x : f1) ss += (x - line.mean_test_f1) * (x - line.mean_test_f1);
    line.sd_test_f1 = f1.size() > 1 ? std::sqrt(ss / static_cast<double>(f1.size() - 1)) : 0.0;
    line.mean_test_accuracy = mean(acc);
    out.push_back(line);
  }
  return out;
}

std::string compactness_csv(const std::vector<CompactnessLine>& lines) {
  std::ostringstream os;
  os << "dataset,mode,rows,median_rules,mean_rules,mean_rules_ensemble,mean_test_f1,sd_test_f1,"
        "mean_test_accuracy,rows_not_smaller\r\n";
  for (const auto& l : lines) {
    os << csv_field(l.dataset) << ',' << csv_field(l.mode) << ',' << l.rows << ',' << fmt(l.median_rules) << ','
       << fmt(l.mean_rules) << ',' << fmt(l.mean_rules_ensemble) << ',' << fmt(l.mean_test_f1) << ','
       << fmt(l.sd_test_f1) << ',' << fmt(l.mean_test_accuracy) << ',' << l.rows_not_smaller << "\r\n";
  }
  return os.str();
}

}  // namespace treerules
