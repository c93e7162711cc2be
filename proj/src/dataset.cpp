#include "treerules/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "treerules/error.hpp"
#include "treerules/rng.hpp"

namespace treerules {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return cells;
}

bool is_nan_token(std::string_view cell) {
  std::string lower(cell);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower.empty() || lower == "nan" || lower == "-nan" || lower == "+nan" || lower == "na";
}

double parse_feature(std::string_view cell, std::size_t line_no, std::string_view column) {
  if (is_nan_token(cell)) {
    throw Error(ErrorKind::NaNValue, "line " + std::to_string(line_no) + ", column '" +
                                         std::string(column) + "' is missing or NaN");
  }
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
    throw Error(ErrorKind::NonNumericFeature, "line " + std::to_string(line_no) + ", column '" +
                                                  std::string(column) + "': '" +
                                                  std::string(cell) + "'");
  }
  if (!std::isfinite(value)) {
    throw Error(ErrorKind::NaNValue, "line " + std::to_string(line_no) + ", column '" +
                                         std::string(column) + "' is not finite");
  }
  return value;
}

}  // namespace

Dataset::Dataset(std::vector<std::vector<double>> columns, std::vector<std::uint8_t> labels,
                 std::vector<std::string> feature_names,
                 std::array<std::string, kNumClasses> class_names)
    : columns_(std::move(columns)),
      labels_(std::move(labels)),
      feature_names_(std::move(feature_names)),
      class_names_(std::move(class_names)) {
  if (labels_.empty()) throw Error(ErrorKind::EmptyDataset, "dataset has no instances");
  if (columns_.empty()) throw Error(ErrorKind::EmptyDataset, "dataset has no features");
  if (feature_names_.empty()) {
    for (std::size_t j = 0; j < columns_.size(); ++j) feature_names_.push_back("x" + std::to_string(j));
  }
  if (feature_names_.size() != columns_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "feature name count differs from column count");
  }
  if (class_names_[0].empty() && class_names_[1].empty()) class_names_ = {"0", "1"};
  for (const auto& col : columns_) {
    if (col.size() != labels_.size()) {
      throw Error(ErrorKind::DimensionMismatch, "column length differs from label count");
    }
    for (double v : col) {
      if (!std::isfinite(v)) throw Error(ErrorKind::NaNValue, "feature value is NaN or infinite");
    }
  }
  positive_ = CoverageBitset(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] > 1) throw Error(ErrorKind::NotBinary, "label outside {0,1}");
    if (labels_[i] == 1) positive_.set(i);
  }
}

Dataset Dataset::from_rows(const std::vector<std::vector<double>>& rows,
                           std::vector<std::uint8_t> labels) {
  if (rows.empty()) throw Error(ErrorKind::EmptyDataset, "dataset has no instances");
  const std::size_t m = rows.front().size();
  std::vector<std::vector<double>> columns(m, std::vector<double>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m) throw Error(ErrorKind::DimensionMismatch, "ragged rows");
    for (std::size_t j = 0; j < m; ++j) columns[j][i] = rows[i][j];
  }
  return Dataset(std::move(columns), std::move(labels), {}, {"0", "1"});
}

std::vector<double> Dataset::row(std::size_t i) const {
  std::vector<double> out(m());
  for (std::size_t j = 0; j < m(); ++j) out[j] = columns_[j][i];
  return out;
}

ClassCounts Dataset::class_counts() const {
  const auto pos = static_cast<std::int64_t>(positive_.count());
  return {static_cast<std::int64_t>(n()) - pos, pos};
}

bool Dataset::has_both_classes() const {
  const auto c = class_counts();
  return c[0] > 0 && c[1] > 0;
}

void Dataset::require_both_classes() const {
  if (!has_both_classes()) {
    throw Error(ErrorKind::MissingClass, "both classes must be present (N=" + std::to_string(n()) + ")");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<std::vector<double>> cols(m(), std::vector<double>(indices.size()));
  std::vector<std::uint8_t> labs(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    for (std::size_t j = 0; j < m(); ++j) cols[j][k] = columns_[j][i];
    labs[k] = labels_[i];
  }
  return Dataset(std::move(cols), std::move(labs), feature_names_, class_names_);
}

Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, path.string());

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::EmptyDataset, path.string() + " has no header");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header;
  for (auto cell : split_commas(line)) header.emplace_back(cell);
  if (header.size() < 2) throw Error(ErrorKind::SchemaError, "need at least one feature and a label column");

  std::size_t label_idx = header.size() - 1;
  if (label.name) {
    const auto it = std::find(header.begin(), header.end(), *label.name);
    if (it == header.end()) throw Error(ErrorKind::SchemaError, "no column named '" + *label.name + "'");
    label_idx = static_cast<std::size_t>(it - header.begin());
  } else if (label.index) {
    if (*label.index >= header.size()) throw Error(ErrorKind::SchemaError, "label index out of range");
    label_idx = *label.index;
  }

  std::vector<std::string> feature_names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != label_idx) feature_names.push_back(header[j]);
  }

  std::vector<std::vector<double>> columns(feature_names.size());
  std::vector<std::string> raw_labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::SchemaError, "line " + std::to_string(line_no) + " has " +
                                              std::to_string(cells.size()) + " cells, expected " +
                                              std::to_string(header.size()));
    }
    std::size_t f = 0;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (j == label_idx) continue;
      columns[f].push_back(parse_feature(cells[j], line_no, header[j]));
      ++f;
    }
    raw_labels.emplace_back(cells[label_idx]);
  }
  if (raw_labels.empty()) throw Error(ErrorKind::EmptyDataset, path.string() + " has no rows");

  std::map<std::string, std::uint8_t> distinct;
  for (const auto& l : raw_labels) distinct.emplace(l, 0);
  if (distinct.size() > kNumClasses) {
    throw Error(ErrorKind::NotBinary, "label column has " + std::to_string(distinct.size()) + " distinct values");
  }
  std::array<std::string, kNumClasses> class_names{};
  std::uint8_t next = 0;
  for (auto& [name, idx] : distinct) {
    idx = next;
    class_names[next++] = name;
  }
  std::vector<std::uint8_t> labels;
  labels.reserve(raw_labels.size());
  for (const auto& l : raw_labels) labels.push_back(distinct.at(l));

  return Dataset(std::move(columns), std::move(labels), std::move(feature_names), std::move(class_names));
}

CoverageBitset eval_condition(const Dataset& ds, const Condition& cond) {
  if (cond.feature >= ds.m()) {
    throw Error(ErrorKind::FeatureOutOfRange, "feature " + std::to_string(cond.feature) +
                                                  " >= m=" + std::to_string(ds.m()));
  }
  CoverageBitset out(ds.n());
  auto& words = out.mutable_words();
  const auto col = ds.column(cond.feature);
  const double t = cond.threshold;
  const std::size_t n = col.size();
  for (std::size_t base = 0, w = 0; base < n; base += 64, ++w) {
    const std::size_t end = std::min(n, base + 64);
    std::uint64_t bits = 0;
    if (cond.op == Op::LE) {
      for (std::size_t i = base; i < end; ++i) bits |= static_cast<std::uint64_t>(col[i] <= t) << (i - base);
    } else {
      for (std::size_t i = base; i < end; ++i) bits |= static_cast<std::uint64_t>(col[i] > t) << (i - base);
    }
    words[w] = bits;
  }
  out.recount();
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t repeat, std::size_t fold) const {
  std::vector<std::size_t> out;
  const auto& a = assignments.at(repeat);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t repeat, std::size_t fold) const {
  std::vector<std::size_t> out;
  const auto& a = assignments.at(repeat);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == fold) out.push_back(i);
  }
  return out;
}

FoldPlan stratified_folds(std::span<const std::uint8_t> labels, std::size_t repeats,
                          std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorKind::InvalidConfig, "folds must be >= 2");
  if (repeats < 1) throw Error(ErrorKind::InvalidConfig, "repeats must be >= 1");
  std::array<std::vector<std::size_t>, kNumClasses> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  for (std::size_t y = 0; y < kNumClasses; ++y) {
    if (members[y].size() < folds) {
      throw Error(ErrorKind::TooFewInstances, "class " + std::to_string(y) + " has " +
                                                  std::to_string(members[y].size()) +
                                                  " members, fewer than " + std::to_string(folds) + " folds");
    }
  }

  FoldPlan plan;
  plan.repeats = repeats;
  plan.folds = folds;
  plan.seed = seed;
  plan.assignments.assign(repeats, std::vector<std::uint32_t>(labels.size(), 0));
  for (std::size_t r = 0; r < repeats; ++r) {
    std::mt19937_64 rng(derive_seed(seed, r));
    // Round-robin continues across classes so remainders spread over folds.
    std::size_t next_fold = 0;
    for (std::size_t y = 0; y < kNumClasses; ++y) {
      auto order = members[y];
      seeded_shuffle(std::span<std::size_t>(order), rng);
      for (std::size_t idx : order) {
        plan.assignments[r][idx] = static_cast<std::uint32_t>(next_fold);
        next_fold = (next_fold + 1) % folds;
      }
    }
  }
  return plan;
}

FoldPlan stratified_folds(const Dataset& ds, std::size_t repeats, std::size_t folds,
                          std::uint64_t seed) {
  return stratified_folds(std::span<const std::uint8_t>(ds.labels()), repeats, folds, seed);
}

}  // namespace treerules
