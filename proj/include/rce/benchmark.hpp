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

#ifndef RCE_BENCHMARK_HPP
#define RCE_BENCHMARK_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rce/data.hpp"
#include "rce/generators.hpp"
#include "rce/io.hpp"
#include "rce/metrics.hpp"
#include "rce/parallel.hpp"
#include "rce/train.hpp"
#include "rce/verifier.hpp"

namespace rce {

struct MethodSpec {
  Method method = Method::Nnce;
  bool robust_init = false;
  bool optimal = false;

  // "rnce-TF" style labels for RNCE, plain method names otherwise.
  std::string label() const {
    std::string s = to_string(method);
    if (method == Method::Rnce) s += std::string("-") + (robust_init ? "T" : "F") + (optimal ? "T" : "F");
    return s;
  }

  static MethodSpec parse(const std::string& s) {
    MethodSpec m;
    const auto dash = s.rfind('-');
    if (s.rfind("rnce", 0) == 0 && dash != std::string::npos && s.size() == dash + 3) {
      m.method = Method::Rnce;
      const char a = s[dash + 1], b = s[dash + 2];
      if ((a != 'T' && a != 'F') || (b != 'T' && b != 'F')) throw std::invalid_argument("bad RNCE flags in " + s);
      m.robust_init = a == 'T';
      m.optimal = b == 'T';
      return m;
    }
    m.method = parse_method(s);
    return m;
  }
};

struct BenchmarkConfig {
  Dataset dataset;  // scaled to [0,1]
  std::vector<std::size_t> hidden{8, 8};
  TrainConfig train;
  std::vector<MethodSpec> methods;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t test_points = 20;
  std::size_t validation_points = 20;
  std::size_t replicas = 5;          // per retraining mode
  double incremental_fraction = 0.1;
  std::size_t incremental_epochs = 10;
  std::vector<double> delta_grid = default_delta_grid();
  // Shift used to generate robust CEs: "val", "inc" or a number.
  std::string generation_delta = "val";
  // Extra fixed magnitudes evaluated besides delta_val and delta_inc.
  std::vector<double> extra_deltas;
  GeneratorOptions generator;
  std::size_t lof_k = kDefaultLofNeighbours;
  std::size_t workers = 1;
};

struct CeDetail {
  std::uint64_t seed = 0;
  std::string method;
  std::size_t point = 0;
  CounterfactualRecord record;
  double vr = std::nan("");   // share of the fleet that keeps the target
  double lof = std::nan("");
  std::vector<bool> robust;   // per evaluation shift
  std::string error;
};

struct SeedSummary {
  std::uint64_t seed = 0;
  double delta_val = 0.0;
  bool delta_val_reached = false;
  double delta_inc = 0.0;
  double generation_delta = 0.0;
  double accuracy = 0.0;
  std::size_t test_points = 0;
};

struct MetricRow {
  std::string method;
  MeanStd found_rate, vr, l1, lof;
  std::vector<MeanStd> v_delta;  // per evaluation shift
};

struct MetricReport {
  std::vector<std::string> shift_names;  // "val", "inc", extras
  std::vector<SeedSummary> seeds;
  std::vector<MetricRow> rows;
  std::vector<CeDetail> details;
  std::vector<std::pair<std::string, double>> timing;  // (seed/method, seconds)
};

namespace detail {

inline std::string format_delta(double d) {
  std::ostringstream s;
  s << std::setprecision(6) << d;
  return s.str();
}

struct SeedSetup {
  Split split;
  Model model;
  std::vector<Model> fleet;
  std::vector<double> shifts;  // per evaluation shift name
  double generation = 0.0;
  std::vector<std::size_t> points;  // rows of d1_test
  std::vector<Label> targets;
  SeedSummary summary;
};

// Target for an input: class 1 for binary models, the next class otherwise.
inline Label counterfactual_target(const Model& m, std::span<const double> x) {
  const Label c = classify(m, x);
  return m.is_binary() ? 1 - c : (c + 1) % static_cast<Label>(m.num_classes());
}

inline SeedSetup prepare_seed(const BenchmarkConfig& cfg, std::uint64_t seed) {
  SeedSetup s;
  s.summary.seed = seed;
  s.split = split(cfg.dataset, {0.5, 0.8, seed});
  const Architecture arch = Architecture::for_data(cfg.dataset, cfg.hidden);
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  s.model = train(s.split.d1_train, arch, tc);
  s.summary.accuracy = accuracy(s.model, s.split.d1_test);

  RetrainSpec spec;
  spec.replicas = cfg.replicas;
  spec.seed = seed;
  spec.fraction = cfg.incremental_fraction;
  spec.epochs = cfg.incremental_epochs;
  for (RetrainMode mode : {RetrainMode::Complete, RetrainMode::LeaveOneOut, RetrainMode::Incremental}) {
    spec.mode = mode;
    for (Model& m : retrain(s.model, arch, tc, s.split.d1_train, s.split.d2_train, spec)) s.fleet.push_back(std::move(m));
  }
  double inc = 0.0;
  for (std::size_t r = 0; r < cfg.replicas; ++r) {
    inc += model_distance(s.model, s.fleet[2 * cfg.replicas + r], INFINITY);
  }
  s.summary.delta_inc = inc / static_cast<double>(cfg.replicas);

  // Validation inputs come from D2, test inputs from D1's test part.
  std::vector<FeatureVector> val_x;
  std::vector<Label> val_t;
  {
    const Dataset pool = concat(s.split.d2_test, s.split.d2_train);
    Rng rng(seed ^ 0x5eedULL);
    for (std::size_t i : rng.permutation(pool.size())) {
      if (val_x.size() >= cfg.validation_points) break;
      const FeatureVector& x = pool.x[i];
      if (s.model.is_binary() && classify(s.model, x) != 0) continue;
      val_x.push_back(x);
      val_t.push_back(counterfactual_target(s.model, x));
    }
  }
  auto gen = [&](double delta, const FeatureVector& x, Label t) -> std::optional<FeatureVector> {
    GeneratorOptions o = cfg.generator;
    o.shift = ShiftSet(cfg.generator.shift.p, delta);
    o.robust_init = false;
    o.optimal = false;
    const CounterfactualRecord r = rnce(s.model, s.split.d1_train.x, x, t, o);
    if (!r.found) return std::nullopt;
    return r.x_prime;
  };
  const ValidationDeltaEstimate val = estimate_delta_validation(s.fleet, val_x, val_t, gen, cfg.delta_grid);
  s.summary.delta_val = val.delta;
  s.summary.delta_val_reached = val.reached;

  s.shifts = {s.summary.delta_val, s.summary.delta_inc};
  s.shifts.insert(s.shifts.end(), cfg.extra_deltas.begin(), cfg.extra_deltas.end());
  if (cfg.generation_delta == "val") {
    s.generation = s.summary.delta_val;
  } else if (cfg.generation_delta == "inc") {
    s.generation = s.summary.delta_inc;
  } else {
    s.generation = std::stod(cfg.generation_delta);
  }
  s.summary.generation_delta = s.generation;

  Rng rng(seed ^ 0x7e57ULL);
  for (std::size_t i : rng.permutation(s.split.d1_test.size())) {
    if (s.points.size() >= cfg.test_points) break;
    const FeatureVector& x = s.split.d1_test.x[i];
    if (s.model.is_binary() && classify(s.model, x) != 0) continue;
    s.points.push_back(i);
    s.targets.push_back(counterfactual_target(s.model, x));
  }
  s.summary.test_points = s.points.size();
  return s;
}

}  // namespace detail

// Train, retrain a fleet (complete, leave-one-out, incremental), identify
// delta_val and delta_inc, generate CEs for every method and score them.
// Cells are (seed, method) pairs; the report does not depend on the worker
// count, only the timing entries do.
inline MetricReport run_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.methods.empty()) throw std::invalid_argument("benchmark needs at least one method");
  if (cfg.seeds.empty()) throw std::invalid_argument("benchmark needs at least one seed");
  cfg.dataset.validate();
  MetricReport report;
  report.shift_names = {"val", "inc"};
  for (double d : cfg.extra_deltas) report.shift_names.push_back(detail::format_delta(d));

  std::vector<detail::SeedSetup> setups(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), cfg.workers, [&](std::size_t i) { setups[i] = detail::prepare_seed(cfg, cfg.seeds[i]); });
  std::vector<LofModel> lof;
  for (const auto& s : setups) lof.emplace_back(s.split.d1_train.x, cfg.lof_k);

  const std::size_t nm = cfg.methods.size();
  std::vector<std::vector<CeDetail>> cells(setups.size() * nm);
  std::vector<double> seconds(cells.size(), 0.0);
  parallel_for(cells.size(), cfg.workers, [&](std::size_t c) {
    const auto start = std::chrono::steady_clock::now();
    const detail::SeedSetup& s = setups[c / nm];
    const MethodSpec& ms = cfg.methods[c % nm];
    GeneratorOptions o = cfg.generator;
    o.shift = ShiftSet(cfg.generator.shift.p, s.generation);
    o.robust_init = ms.robust_init;
    o.optimal = ms.optimal;
    std::optional<RnceIndex> index;
    std::map<Label, std::size_t> index_of;
    std::vector<RnceIndex> indices;
    for (std::size_t k = 0; k < s.points.size(); ++k) {
      CeDetail d;
      d.seed = s.summary.seed;
      d.method = ms.label();
      d.point = s.points[k];
      const FeatureVector& x = s.split.d1_test.x[s.points[k]];
      const Label t = s.targets[k];
      try {
        if (ms.method == Method::Rnce) {
          auto it = index_of.find(t);
          if (it == index_of.end()) {
            indices.emplace_back(s.model, s.split.d1_train.x, o.shift, t, o.robust_init, o.verify);
            it = index_of.emplace(t, indices.size() - 1).first;
          }
          d.record = indices[it->second].query(x, o.optimal, o.line_step);
        } else {
          d.record = generate(ms.method, s.model, s.split.d1_train.x, x, t, o);
        }
        d.record.method = ms.label();
        if (d.record.found) {
          std::size_t ok = 0;
          for (const Model& m : s.fleet) ok += classify(m, d.record.x_prime) == t;
          d.vr = static_cast<double>(ok) / static_cast<double>(s.fleet.size());
          d.lof = lof[c / nm].score(d.record.x_prime);
          for (double delta : s.shifts) {
            d.robust.push_back(
                is_delta_robust(s.model, ShiftSet(cfg.generator.shift.p, delta), d.record.x_prime, t, o.verify).robust);
          }
        }
      } catch (const std::exception& e) {
        d.error = e.what();
        d.record.found = false;
      }
      cells[c].push_back(std::move(d));
    }
    seconds[c] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });

  for (const auto& s : setups) report.seeds.push_back(s.summary);
  for (std::size_t m = 0; m < nm; ++m) {
    MetricRow row;
    row.method = cfg.methods[m].label();
    std::vector<double> found, vr, l1, lofs;
    std::vector<std::vector<double>> vd(report.shift_names.size());
    for (std::size_t si = 0; si < setups.size(); ++si) {
      const auto& cell = cells[si * nm + m];
      std::vector<double> f_vr, f_l1, f_lof;
      std::vector<std::vector<double>> f_vd(report.shift_names.size());
      for (const CeDetail& d : cell) {
        if (!d.record.found) continue;
        f_vr.push_back(d.vr);
        f_l1.push_back(d.record.distance);
        f_lof.push_back(d.lof);
        for (std::size_t k = 0; k < d.robust.size(); ++k) f_vd[k].push_back(d.robust[k] ? 1.0 : 0.0);
      }
      found.push_back(cell.empty() ? std::nan("") : static_cast<double>(f_vr.size()) / static_cast<double>(cell.size()));
      vr.push_back(mean_std(f_vr).mean);
      l1.push_back(mean_std(f_l1).mean);
      lofs.push_back(mean_std(f_lof).mean);
      for (std::size_t k = 0; k < vd.size(); ++k) vd[k].push_back(mean_std(f_vd[k]).mean);
      report.timing.emplace_back("seed " + std::to_string(setups[si].summary.seed) + " " + row.method,
                                 seconds[si * nm + m]);
    }
    row.found_rate = mean_std(found);
    row.vr = mean_std(vr);
    row.l1 = mean_std(l1);
    row.lof = mean_std(lofs);
    for (auto& v : vd) row.v_delta.push_back(mean_std(v));
    report.rows.push_back(std::move(row));
  }
  for (auto& cell : cells) {
    for (auto& d : cell) report.details.push_back(std::move(d));
  }
  return report;
}

inline std::string report_csv(const MetricReport& r) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "method,found_rate,found_rate_std,vr,vr_std";
  for (const auto& n : r.shift_names) out << ",v_delta_" << n << ",v_delta_" << n << "_std";
  out << ",l1,l1_std,lof,lof_std\n";
  auto put = [&](const MeanStd& m) {
    out << ',';
    if (!std::isnan(m.mean)) out << m.mean;
    out << ',';
    if (!std::isnan(m.std)) out << m.std;
  };
  for (const MetricRow& row : r.rows) {
    out << row.method;
    put(row.found_rate);
    put(row.vr);
    for (const auto& v : row.v_delta) put(v);
    put(row.l1);
    put(row.lof);
    out << '\n';
  }
  return out.str();
}

inline json report_json(const MetricReport& r) {
  auto ms = [](const MeanStd& m) { return json{{"mean", number(m.mean)}, {"std", number(m.std)}, {"n", m.n}}; };
  json seeds = json::array();
  for (const auto& s : r.seeds) {
    seeds.push_back({{"seed", s.seed},
                     {"delta_val", s.delta_val},
                     {"delta_val_reached", s.delta_val_reached},
                     {"delta_inc", s.delta_inc},
                     {"generation_delta", s.generation_delta},
                     {"test_accuracy", s.accuracy},
                     {"test_points", s.test_points}});
  }
  json rows = json::array();
  for (const auto& row : r.rows) {
    json vd = json::object();
    for (std::size_t k = 0; k < r.shift_names.size(); ++k) vd[r.shift_names[k]] = ms(row.v_delta[k]);
    rows.push_back({{"method", row.method},
                    {"found_rate", ms(row.found_rate)},
                    {"vr", ms(row.vr)},
                    {"v_delta", vd},
                    {"l1", ms(row.l1)},
                    {"lof", ms(row.lof)}});
  }
  json details = json::array();
  for (const auto& d : r.details) {
    json j = to_json(d.record);
    j["seed"] = d.seed;
    j["point"] = d.point;
    j["vr"] = number(d.vr);
    j["lof"] = number(d.lof);
    j["robust_under"] = d.robust;
    if (!d.error.empty()) j["error"] = d.error;
    details.push_back(std::move(j));
  }
  return {{"shifts", r.shift_names}, {"seeds", seeds}, {"methods", rows}, {"details", details}};
}

inline std::string timing_csv(const MetricReport& r) {
  std::ostringstream out;
  out << "cell,seconds\n" << std::setprecision(6);
  for (const auto& [cell, s] : r.timing) out << cell << ',' << s << '\n';
  return out.str();
}

}  // namespace rce

#endif  // RCE_BENCHMARK_HPP
