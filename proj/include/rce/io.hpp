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

#ifndef RCE_IO_HPP
#define RCE_IO_HPP

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rce/generators.hpp"
#include "rce/model.hpp"
#include "rce/verifier.hpp"

namespace rce {

using json = nlohmann::json;

// NaN and infinities have no JSON literal; they become null.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json norm_json(double p) { return std::isinf(p) ? json("inf") : json(p); }

inline double parse_norm(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    return std::stod(s);
  }
  return j.get<double>();
}

inline json to_json(const Model& m) {
  json layers = json::array();
  for (const Layer& l : m.layers()) {
    json rows = json::array();
    for (std::size_t r = 0; r < l.out; ++r) {
      rows.push_back(std::vector<double>(l.weights.begin() + r * l.in, l.weights.begin() + (r + 1) * l.in));
    }
    layers.push_back({{"weights", rows}, {"bias", l.has_bias() ? json(l.bias) : json(nullptr)}});
  }
  return {{"type", m.type() == ModelType::Logistic ? "logistic" : "relu_network"}, {"layers", layers}};
}

inline Model model_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  std::vector<Layer> layers;
  for (const auto& l : j.at("layers")) {
    std::vector<double> bias;
    if (l.contains("bias") && !l.at("bias").is_null()) bias = l.at("bias").get<std::vector<double>>();
    layers.push_back(Layer::from_rows(l.at("weights").get<std::vector<std::vector<double>>>(), std::move(bias)));
  }
  if (type == "logistic") return Model(ModelType::Logistic, std::move(layers));
  if (type == "relu_network") return Model::network(std::move(layers));
  throw std::invalid_argument("unknown model type '" + type + "'");
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline void save_model(const std::string& path, const Model& m) { write_text(path, to_json(m).dump(2) + "\n"); }
inline Model load_model(const std::string& path) { return model_from_json(read_json(path)); }

inline json to_json(const ShiftSet& s) { return {{"p", norm_json(s.p)}, {"delta", s.delta}}; }

inline json to_json(const CounterfactualRecord& r) {
  json j{{"method", r.method},
         {"x", r.x},
         {"target", r.target},
         {"found", r.found},
         {"x_prime", r.found ? json(r.x_prime) : json(nullptr)},
         {"distance", r.found ? number(r.distance) : json(nullptr)},
         {"robust", r.robust},
         {"shift", to_json(r.shift)},
         {"iterations", r.iterations}};
  if (!r.trace.empty()) j[r.method == "gce-r" ? "lambda_trace" : "margin_trace"] = r.trace;
  if (r.training_index) j["training_index"] = *r.training_index;
  if (r.method == "rnce") {
    j["robust_init"] = r.robust_init;
    j["optimal"] = r.optimal;
  }
  return j;
}

inline json to_json(const Interval& z) { return json::array({number(z.lo), number(z.hi)}); }

inline json to_json(const RobustnessVerdict& v) {
  json bounds = json::array();
  for (const Interval& z : v.bounds) bounds.push_back(to_json(z));
  json j{{"robust", v.robust}, {"unresolved", v.unresolved}, {"target", v.target},
         {"bounds", bounds},   {"nodes", v.nodes_explored}};
  if (v.strictly_robust) j["strictly_robust"] = *v.strictly_robust;
  return j;
}

struct CeEntry {
  FeatureVector x_prime;
  Label target = 1;
  std::optional<FeatureVector> x;
};

// One JSON object per line with "x_prime" and "target" (and optionally the
// original input "x"); records written by `explain` qualify. Records that
// were not found are skipped.
inline std::vector<CeEntry> parse_ce_lines(std::istream& in, const std::string& source = "ces") {
  std::vector<CeEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (j.value("found", true) == false || !j.contains("x_prime") || j.at("x_prime").is_null()) continue;
    CeEntry e;
    e.x_prime = j.at("x_prime").get<FeatureVector>();
    e.target = j.value("target", 1);
    if (j.contains("x") && !j.at("x").is_null()) e.x = j.at("x").get<FeatureVector>();
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<CeEntry> load_ce_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_ce_lines(in, path);
}

}  // namespace rce

#endif  // RCE_IO_HPP
