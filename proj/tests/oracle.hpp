#pragma once
// Reference implementations that work straight from raw rows, plus random
// generators for property tests. Nothing here calls into the library's
// counting or probability code.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "treerules/condition.hpp"
#include "treerules/dataset.hpp"

namespace oracle {

using treerules::Condition;
using treerules::Op;

struct RawData {
  std::vector<std::vector<double>> rows;
  std::vector<std::uint8_t> labels;
};

inline bool holds(const Condition& c, const std::vector<double>& x) {
  return c.op == Op::LE ? x[c.feature] <= c.threshold : x[c.feature] > c.threshold;
}

inline bool covers(const std::vector<Condition>& a, const std::vector<double>& x) {
  for (const auto& c : a) {
    if (!holds(c, x)) return false;
  }
  return true;
}

inline std::vector<bool> coverage(const RawData& d, const std::vector<Condition>& a) {
  std::vector<bool> out(d.rows.size());
  for (std::size_t i = 0; i < d.rows.size(); ++i) out[i] = covers(a, d.rows[i]);
  return out;
}

// Naive Bayes posterior from raw counts with plain products (no logs).
inline std::array<long double, 2> nb_posterior(const RawData& d, const std::vector<Condition>& a, double eta) {
  long double ny[2] = {0, 0};
  for (auto y : d.labels) ny[y] += 1;
  const long double n = ny[0] + ny[1];
  std::array<long double, 2> score{};
  for (int y = 0; y < 2; ++y) {
    long double p = (ny[y] + eta) / (n + 2 * eta);
    for (const auto& c : a) {
      long double nay = 0;
      for (std::size_t i = 0; i < d.rows.size(); ++i) nay += (d.labels[i] == y && holds(c, d.rows[i]));
      p *= (nay + eta) / (ny[y] + 2 * eta);
    }
    score[y] = p;
  }
  const long double z = score[0] + score[1];
  return {score[0] / z, score[1] / z};
}

// Small integer-valued features so ties and repeated thresholds are common.
inline RawData random_data(std::mt19937_64& rng, std::size_t n, std::size_t m, int levels = 6) {
  RawData d;
  std::uniform_int_distribution<int> v(0, levels - 1);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(m);
    for (auto& xj : x) xj = v(rng);
    d.rows.push_back(std::move(x));
    // label loosely tied to feature 0 so trees have something to find
    const bool y = (d.rows.back()[0] >= levels / 2) != (std::uniform_int_distribution<int>(0, 4)(rng) == 0);
    d.labels.push_back(static_cast<std::uint8_t>(y));
  }
  // both classes always present
  d.labels[0] = 0;
  d.labels[1] = 1;
  return d;
}

inline Condition random_condition(std::mt19937_64& rng, std::size_t m, int levels = 6) {
  Condition c;
  c.feature = static_cast<std::uint32_t>(std::uniform_int_distribution<std::size_t>(0, m - 1)(rng));
  c.op = std::bernoulli_distribution(0.5)(rng) ? Op::LE : Op::GT;
  c.threshold = std::uniform_int_distribution<int>(0, levels - 2)(rng) + 0.5;
  return c;
}

inline std::vector<Condition> random_antecedent(std::mt19937_64& rng, std::size_t m, std::size_t max_len,
                                                int levels = 6) {
  std::vector<Condition> a;
  const auto len = std::uniform_int_distribution<std::size_t>(0, max_len)(rng);
  for (std::size_t k = 0; k < len; ++k) a.push_back(random_condition(rng, m, levels));
  return a;
}

inline treerules::Dataset to_dataset(const RawData& d) { return treerules::Dataset::from_rows(d.rows, d.labels); }

// Scratch file under the system temp dir; removed on destruction.
struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& name, const std::string& content)
      : path(std::filesystem::temp_directory_path() /
             ("treerules_test_" + std::to_string(::getpid()) + "_" + name)) {
    std::ofstream(path, std::ios::binary) << content;
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }
};

}  // namespace oracle
