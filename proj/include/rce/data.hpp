/*
 * Copyright 2026 The robust-ce Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef RCE_DATA_HPP
#define RCE_DATA_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rce/model.hpp"
#include "rce/rng.hpp"

namespace rce {

enum class FeatureKind { Continuous, OneHot };

struct FeatureInfo {
  std::string name;
  FeatureKind kind = FeatureKind::Continuous;
  std::string group;  // one-hot group name, empty for continuous features
};

// Per-feature min/max of the unscaled data.
struct Scaler {
  std::vector<double> min;
  std::vector<double> max;
};

struct Dataset {
  std::vector<FeatureVector> x;
  std::vector<Label> y;
  std::vector<FeatureInfo> features;
  std::string label_name = "label";
  std::size_t num_classes = 2;
  std::optional<Scaler> scaler;

  std::size_t size() const { return x.size(); }
  std::size_t dim() const { return features.size(); }
  bool empty() const { return x.empty(); }

  Dataset subset(const std::vector<std::size_t>& rows) const {
    Dataset d = with_rows({}, {});
    for (std::size_t r : rows) {
      if (r >= x.size()) throw std::out_of_range("dataset row out of range");
      d.x.push_back(x[r]);
      d.y.push_back(y[r]);
    }
    return d;
  }

  // Same metadata, different rows.
  Dataset with_rows(std::vector<FeatureVector> rows, std::vector<Label> labels) const {
    Dataset d;
    d.x = std::move(rows);
    d.y = std::move(labels);
    d.features = features;
    d.label_name = label_name;
    d.num_classes = num_classes;
    d.scaler = scaler;
    return d;
  }

  // One-hot groups in feature order, as lists of column indices.
  std::vector<std::vector<std::size_t>> onehot_groups() const {
    std::map<std::string, std::vector<std::size_t>> by_name;
    std::vector<std::string> order;
    for (std::size_t j = 0; j < features.size(); ++j) {
      if (features[j].kind != FeatureKind::OneHot) continue;
      auto [it, fresh] = by_name.try_emplace(features[j].group);
      if (fresh) order.push_back(features[j].group);
      it->second.push_back(j);
    }
    std::vector<std::vector<std::size_t>> out;
    for (const auto& g : order) out.push_back(by_name[g]);
    return out;
  }

  void validate() const {
    if (x.size() != y.size()) throw std::invalid_argument("dataset: feature and label counts differ");
    if (num_classes < 2) throw std::invalid_argument("dataset: need at least two classes");
    const auto groups = onehot_groups();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].size() != features.size()) {
        throw std::invalid_argument("dataset: row " + std::to_string(i) + " has the wrong width");
      }
      for (double v : x[i]) {
        if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite value in row " + std::to_string(i));
      }
      if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= num_classes) {
        throw std::invalid_argument("dataset: label out of range in row " + std::to_string(i));
      }
      for (const auto& g : groups) {
        double s = 0.0;
        for (std::size_t j : g) s += x[i][j];
        if (std::abs(s - 1.0) > 1e-9) {
          throw std::invalid_argument("dataset: one-hot group does not sum to 1 in row " + std::to_string(i));
        }
      }
    }
  }
};

struct Schema {
  std::vector<FeatureInfo> features;
  std::string label = "label";

  static Schema from_json(const nlohmann::json& j) {
    Schema s;
    for (const auto& f : j.at("features")) {
      FeatureInfo info;
      info.name = f.at("name").get<std::string>();
      const std::string kind = f.value("kind", "continuous");
      if (kind == "continuous") {
        info.kind = FeatureKind::Continuous;
      } else if (kind == "onehot" || kind == "one-hot") {
        info.kind = FeatureKind::OneHot;
        info.group = f.at("group").get<std::string>();
      } else {
        throw std::invalid_argument("schema: unknown feature kind '" + kind + "'");
      }
      s.features.push_back(std::move(info));
    }
    s.label = j.value("label", "label");
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json fs = nlohmann::json::array();
    for (const auto& f : features) {
      nlohmann::json e{{"name", f.name}, {"kind", f.kind == FeatureKind::OneHot ? "onehot" : "continuous"}};
      if (f.kind == FeatureKind::OneHot) e["group"] = f.group;
      fs.push_back(e);
    }
    return {{"features", fs}, {"label", label}};
  }

  static Schema load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open schema " + path);
    return from_json(nlohmann::json::parse(in));
  }
};

inline Schema schema_of(const Dataset& d) { return {d.features, d.label_name}; }

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t");
    const auto e = c.find_last_not_of(" \t");
    c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
  }
  return cells;
}

inline double parse_number(const std::string& cell, const std::string& where) {
  if (cell.empty()) throw std::invalid_argument(where + ": empty cell");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument(where + ": not a number '" + cell + "'");
  }
  if (used != cell.size()) throw std::invalid_argument(where + ": not a number '" + cell + "'");
  return v;
}

}  // namespace detail

// Columns are matched to the schema by header name, so their order in the
// file does not matter. Extra columns are ignored.
inline Dataset parse_csv(std::istream& in, const Schema& schema, const std::string& source = "csv") {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(source + ": missing header row");
  const auto header = detail::split_csv_line(line);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::invalid_argument(source + ": header has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::size_t> cols;
  for (const auto& f : schema.features) cols.push_back(column(f.name));
  const std::size_t label_col = column(schema.label);

  Dataset d;
  d.features = schema.features;
  d.label_name = schema.label;
  Label max_label = 1;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv_line(line);
    const std::string where = source + ":" + std::to_string(lineno);
    if (cells.size() != header.size()) {
      throw std::invalid_argument(where + ": expected " + std::to_string(header.size()) + " cells, got " +
                                  std::to_string(cells.size()));
    }
    FeatureVector row;
    for (std::size_t c : cols) row.push_back(detail::parse_number(cells[c], where));
    const double lv = detail::parse_number(cells[label_col], where);
    if (lv < 0 || lv != std::floor(lv)) throw std::invalid_argument(where + ": label must be a class index");
    d.x.push_back(std::move(row));
    d.y.push_back(static_cast<Label>(lv));
    max_label = std::max(max_label, d.y.back());
  }
  d.num_classes = static_cast<std::size_t>(max_label) + 1;
  d.validate();
  return d;
}

inline Dataset load_csv(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path);
  return parse_csv(in, schema, path);
}

inline void write_csv(std::ostream& out, const Dataset& d) {
  for (const auto& f : d.features) out << f.name << ',';
  out << d.label_name << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (double v : d.x[i]) out << v << ',';
    out << d.y[i] << '\n';
  }
}

inline void save_csv(const std::string& path, const Dataset& d) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_csv(out, d);
}

// Min/max over the rows. One-hot columns keep the identity map.
inline Scaler fit_scale(const Dataset& d) {
  if (d.empty()) throw std::invalid_argument("fit_scale: empty dataset");
  Scaler s{FeatureVector(d.dim(), INFINITY), FeatureVector(d.dim(), -INFINITY)};
  for (const auto& row : d.x) {
    for (std::size_t j = 0; j < d.dim(); ++j) {
      s.min[j] = std::min(s.min[j], row[j]);
      s.max[j] = std::max(s.max[j], row[j]);
    }
  }
  for (std::size_t j = 0; j < d.dim(); ++j) {
    if (d.features[j].kind == FeatureKind::OneHot) {
      s.min[j] = 0.0;
      s.max[j] = 1.0;
    }
  }
  return s;
}

// (x - min) / (max - min); constant columns map to 0.
inline FeatureVector apply_scale(const Scaler& s, std::span<const double> row) {
  if (row.size() != s.min.size()) throw std::invalid_argument("apply_scale: width mismatch");
  FeatureVector out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double range = s.max[j] - s.min[j];
    out[j] = range > 0.0 ? (row[j] - s.min[j]) / range : 0.0;
  }
  return out;
}

inline FeatureVector inverse_scale(const Scaler& s, std::span<const double> row) {
  if (row.size() != s.min.size()) throw std::invalid_argument("inverse_scale: width mismatch");
  FeatureVector out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double range = s.max[j] - s.min[j];
    out[j] = range > 0.0 ? s.min[j] + row[j] * range : s.min[j];
  }
  return out;
}

inline Dataset apply_scale(const Scaler& s, const Dataset& d) {
  Dataset out = d.with_rows({}, d.y);
  for (const auto& row : d.x) out.x.push_back(apply_scale(s, row));
  out.scaler = s;
  return out;
}

inline Dataset scaled(const Dataset& d) { return apply_scale(fit_scale(d), d); }

inline Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("concat: width mismatch");
  Dataset out = a;
  out.x.insert(out.x.end(), b.x.begin(), b.x.end());
  out.y.insert(out.y.end(), b.y.begin(), b.y.end());
  out.num_classes = std::max(a.num_classes, b.num_classes);
  return out;
}

struct SplitSpec {
  double d1_fraction = 0.5;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct Split {
  Dataset d1_train, d1_test, d2_train, d2_test;
};

// One seeded permutation, cut into D1/D2 and then into train/test parts.
inline Split split(const Dataset& d, const SplitSpec& spec) {
  if (!(spec.d1_fraction > 0.0 && spec.d1_fraction <= 1.0) ||
      !(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0)) {
    throw std::invalid_argument("split fractions must be in (0, 1]");
  }
  Rng rng(spec.seed);
  const std::vector<std::size_t> perm = rng.permutation(d.size());
  const auto n1 = static_cast<std::size_t>(std::llround(spec.d1_fraction * static_cast<double>(d.size())));
  auto cut = [&](std::size_t begin, std::size_t end, Dataset& train, Dataset& test) {
    const auto ntr = begin + static_cast<std::size_t>(
                                 std::llround(spec.train_fraction * static_cast<double>(end - begin)));
    train = d.subset(std::vector<std::size_t>(perm.begin() + begin, perm.begin() + ntr));
    test = d.subset(std::vector<std::size_t>(perm.begin() + ntr, perm.begin() + end));
  };
  Split s;
  cut(0, n1, s.d1_train, s.d1_test);
  cut(n1, d.size(), s.d2_train, s.d2_test);
  return s;
}

namespace detail {

inline std::vector<FeatureInfo> numbered_features(std::size_t n) {
  std::vector<FeatureInfo> f;
  for (std::size_t j = 0; j < n; ++j) f.push_back({"x" + std::to_string(j + 1), FeatureKind::Continuous, ""});
  return f;
}

}  // namespace detail

// Two interleaving half-moons, pushed apart vertically by `separation`, with
// Gaussian noise, then min-max scaled to [0,1]^2.
inline Dataset synth_binary(std::size_t n, double separation, double noise, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("synth_binary: n must be positive");
  Rng rng(seed);
  Dataset d;
  d.features = detail::numbered_features(2);
  for (std::size_t i = 0; i < n; ++i) {
    const Label c = static_cast<Label>(i % 2);
    const double t = rng.uniform(0.0, std::numbers::pi);
    FeatureVector p = c == 0 ? FeatureVector{std::cos(t), std::sin(t) + separation / 2}
                             : FeatureVector{1.0 - std::cos(t), 0.5 - std::sin(t) - separation / 2};
    for (double& v : p) v += noise * rng.normal();
    d.x.push_back(std::move(p));
    d.y.push_back(c);
  }
  return scaled(d);
}

// Isotropic Gaussian blobs with centres on a circle of radius 1, scaled.
inline Dataset synth_multiclass(std::size_t n, std::size_t classes, std::uint64_t seed, double spread = 0.25,
                                std::size_t dim = 2) {
  if (n == 0) throw std::invalid_argument("synth_multiclass: n must be positive");
  if (classes < 2) throw std::invalid_argument("synth_multiclass: need at least two classes");
  if (dim < 2) throw std::invalid_argument("synth_multiclass: need at least two features");
  Rng rng(seed);
  Dataset d;
  d.features = detail::numbered_features(dim);
  d.num_classes = classes;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % classes;
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(classes);
    FeatureVector p(dim, 0.0);
    p[0] = std::cos(angle);
    p[1] = std::sin(angle);
    for (double& v : p) v += spread * rng.normal();
    d.x.push_back(std::move(p));
    d.y.push_back(static_cast<Label>(c));
  }
  return scaled(d);
}

}  // namespace rce

#endif  // RCE_DATA_HPP
