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

// One test per acceptance criterion. A listener prints "AC-NN PASS|FAIL"
// for each; the exit status is nonzero if any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "../fixtures.hpp"
#include "gtest/gtest.h"
#include "rce/benchmark.hpp"
#include "rce/encoding.hpp"
#include "rce/generators.hpp"
#include "rce/metrics.hpp"
#include "rce/milp.hpp"
#include "rce/train.hpp"
#include "rce/verifier.hpp"

namespace rce {
namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- AC-01

TEST(Acceptance, AC01_PDistance) {
  const std::vector<double> a{-1, 1}, b{0.8, 1};
  EXPECT_EQ(p_distance(a, b, INFINITY), 1.8);
}

// ---------------------------------------------------------------- AC-02

TEST(Acceptance, AC02_LogisticVerdicts) {
  const Model m = testing::toy_logistic();
  const ShiftSet s = ShiftSet::linf(0.1);
  const FeatureVector x{0.7, 0.5};
  EXPECT_EQ(classify(m, x), 0);
  EXPECT_TRUE(is_sound(m, s, x));
  EXPECT_FALSE(is_delta_robust(m, s, FeatureVector{0.7, 0.7}, 1).robust);
  const RobustnessVerdict v = is_strictly_delta_robust(m, s, x, FeatureVector{0.7, 0.86}, 1);
  EXPECT_TRUE(v.robust);
  EXPECT_TRUE(v.strictly_robust.value_or(false));
  const Interval prob = sigmoid_interval(interval_forward(abstract(m, s), x)[0]);
  EXPECT_NEAR(prob.lo, 0.42, 0.01);
  EXPECT_NEAR(prob.hi, 0.48, 0.01);
}

// ---------------------------------------------------------------- AC-03

TEST(Acceptance, AC03_ThreeClassMilpBounds) {
  const Model m = testing::toy_three_class_net();
  const ShiftSet s = ShiftSet::linf(0.05);
  EXPECT_EQ(classify(m, FeatureVector{2, 2}), 1);
  EXPECT_TRUE(is_sound(m, s, FeatureVector{2, 2}));
  VerifyOptions opt;
  opt.exact_bounds = true;
  opt.interval_shortcut = false;
  const RobustnessVerdict v = is_delta_robust(m, s, FeatureVector{3, 1}, 0, opt);
  EXPECT_TRUE(v.robust);
  const double expect[3][2] = {{1.40, 2.60}, {0.20, 0.82}, {-2.60, -1.40}};
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(output_bound(m, FeatureVector{3, 1}, 0.05, c, Sense::Minimize).value, expect[c][0], 1e-6);
    EXPECT_NEAR(output_bound(m, FeatureVector{3, 1}, 0.05, c, Sense::Maximize).value, expect[c][1], 1e-6);
  }
  EXPECT_NEAR(v.bounds[0].lo, 1.40, 1e-6);
  EXPECT_NEAR(v.bounds[1].hi, 0.82, 1e-6);
  EXPECT_NEAR(v.bounds[2].hi, -1.40, 1e-6);
}

// ---------------------------------------------------------------- AC-04

// For one fixed activation pattern the abstraction's output range is an LP
// in the hidden values: an active node lies between its lower and upper
// affine expressions, an inactive node is zero and its lower expression
// must not be positive. The oracle takes the best feasible pattern.
double pattern_oracle(const Model& m, const FeatureVector& x, double delta, std::size_t cls, Sense dir) {
  const auto& layers = m.layers();
  std::size_t k = 0;
  for (std::size_t li = 0; li + 1 < layers.size(); ++li) k += layers[li].out;
  double abs_x = 0.0;
  for (double v : x) abs_x += std::abs(v);
  const double sgn = dir == Sense::Minimize ? 1.0 : -1.0;
  double best = kInf;
  for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
    LinearProgram lp;
    lp.sense = dir;
    std::vector<std::size_t> prev;
    std::size_t bit = 0;
    for (std::size_t li = 0; li < layers.size(); ++li) {
      const Layer& l = layers[li];
      const double db = l.has_bias() ? delta : 0.0;
      const bool last = li + 1 == layers.size();
      std::vector<std::size_t> cur;
      for (std::size_t j = 0; j < l.out; ++j) {
        // value - sum (w +/- delta) prev  compared with  b +/- delta (+ first-layer constant)
        std::vector<Term> up, lo;
        double cu = l.b(j) + db, cl = l.b(j) - db;
        if (li == 0) {
          double wx = 0.0;
          for (std::size_t c = 0; c < l.in; ++c) wx += l.w(j, c) * x[c];
          cu += wx + delta * abs_x;
          cl += wx - delta * abs_x;
        } else {
          for (std::size_t c = 0; c < l.in; ++c) {
            up.push_back({prev[c], -(l.w(j, c) + delta)});
            lo.push_back({prev[c], -(l.w(j, c) - delta)});
          }
        }
        const bool active = last || ((mask >> bit++) & 1) != 0;
        const std::size_t v = lp.add_variable(last ? -kInf : 0.0, active ? kInf : 0.0, 0.0);
        if (active) {
          up.push_back({v, 1.0});
          lp.add_constraint(up, Relation::LessEqual, cu);
          lo.push_back({v, 1.0});
          lp.add_constraint(lo, Relation::GreaterEqual, cl);
        } else {
          // 0 >= lower expression
          for (Term& t : lo) t.coef = -t.coef;
          lp.add_constraint(lo, Relation::LessEqual, -cl);
        }
        cur.push_back(v);
      }
      if (last) lp.objective[cur[cls]] = 1.0;
      prev = std::move(cur);
    }
    const SolveResult r = simplex_solve(lp);
    if (r.status == SolveStatus::Optimal) best = std::min(best, sgn * r.objective);
  }
  return sgn * best;
}

TEST(Acceptance, AC04_MilpMatchesEnumeration) {
  Rng rng(2024);
  for (int i = 0; i < 50; ++i) {
    const std::size_t h1 = 1 + rng.index(4), h2 = rng.index(5);
    std::vector<std::size_t> hidden{h1};
    if (h2 > 0) hidden.push_back(h2);
    const std::size_t in = 1 + rng.index(3);
    const Model m = testing::random_network(rng, in, hidden, 1 + rng.index(3), rng.uniform() < 0.8);
    const FeatureVector x = testing::random_point(rng, in, -1.0, 1.0);
    const double delta = rng.uniform(0.0, 0.25);
    const std::size_t cls = rng.index(m.num_outputs());
    for (Sense dir : {Sense::Minimize, Sense::Maximize}) {
      const MilpResult r = branch_and_bound(encode_output_bound(m, x, delta, cls, dir).milp);
      ASSERT_TRUE(r.optimal()) << "case " << i;
      EXPECT_NEAR(r.objective, pattern_oracle(m, x, delta, cls, dir), 1e-7) << "case " << i;
    }
  }
}

// ---------------------------------------------------------------- AC-05

TEST(Acceptance, AC05_SamplingSoundness) {
  Rng rng(99);
  std::size_t certified = 0;
  for (int i = 0; i < 20; ++i) {
    const std::size_t out = i % 2 == 0 ? 1 : 3;
    const Model m = testing::random_network(rng, 3, {5, 4}, out);
    const FeatureVector xp = testing::random_point(rng, 3);
    const double delta = rng.uniform(0.005, 0.1);
    const Label target = classify(m, xp);
    VerifyOptions opt;
    opt.exact_bounds = true;
    const RobustnessVerdict v = is_delta_robust(m, ShiftSet::linf(delta), xp, target, opt);
    certified += v.robust;
    for (int s = 0; s < 10000; ++s) {
      const Model shifted = testing::random_shift(m, delta, rng);
      const auto logits = shifted.forward(xp);
      for (std::size_t c = 0; c < logits.size(); ++c) {
        ASSERT_GE(logits[c], v.bounds[c].lo - 1e-9) << "case " << i;
        ASSERT_LE(logits[c], v.bounds[c].hi + 1e-9) << "case " << i;
      }
      if (v.robust) {
        ASSERT_EQ(classify(shifted, xp), target) << "case " << i;
      }
    }
  }
  EXPECT_GT(certified, 0u);
}

// ---------------------------------------------------------------- AC-06

BenchmarkConfig desk_config(bool binary) {
  BenchmarkConfig c;
  c.dataset = binary ? synth_binary(500, 0.2, 0.1, 1) : synth_multiclass(500, 3, 1);
  c.validation_points = 100;
  return c;
}

void check_rnce_guarantees(bool binary) {
  const BenchmarkConfig c = desk_config(binary);
  const std::uint64_t seed = 0;
  const detail::SeedSetup s = detail::prepare_seed(c, seed);
  ASSERT_EQ(s.fleet.size(), 15u);

  std::vector<FeatureVector> val_x;
  std::vector<Label> val_t;
  const Dataset pool = concat(s.split.d2_test, s.split.d2_train);
  Rng rng(seed ^ 0x5eedULL);
  for (std::size_t i : rng.permutation(pool.size())) {
    if (val_x.size() >= c.validation_points) break;
    if (binary && classify(s.model, pool.x[i]) != 0) continue;
    val_x.push_back(pool.x[i]);
    val_t.push_back(detail::counterfactual_target(s.model, pool.x[i]));
  }

  for (bool robust_init : {false, true}) {
    for (bool optimal : {false, true}) {
      auto gen = [&](double delta, const FeatureVector& x, Label t) -> std::optional<FeatureVector> {
        GeneratorOptions o;
        o.shift = ShiftSet::linf(delta);
        o.robust_init = robust_init;
        o.optimal = optimal;
        const CounterfactualRecord r = rnce(s.model, s.split.d1_train.x, x, t, o);
        if (!r.found) return std::nullopt;
        return r.x_prime;
      };
      const ValidationDeltaEstimate e = estimate_delta_validation(s.fleet, val_x, val_t, gen, c.delta_grid);
      const std::string tag = std::string(binary ? "binary" : "3-class") + " rnce-" + (robust_init ? "T" : "F") +
                              (optimal ? "T" : "F") + " delta_val=" + std::to_string(e.delta);
      EXPECT_TRUE(e.reached) << tag;
      std::vector<FeatureVector> ces;
      std::vector<Label> targets;
      for (std::size_t k = 0; k < s.points.size(); ++k) {
        const auto ce = gen(e.delta, s.split.d1_test.x[s.points[k]], s.targets[k]);
        ASSERT_TRUE(ce.has_value()) << tag;
        ces.push_back(*ce);
        targets.push_back(s.targets[k]);
      }
      EXPECT_EQ(delta_validity(s.model, ShiftSet::linf(e.delta), ces, targets), 1.0) << tag;
      EXPECT_EQ(validity_after_retraining(ces, targets, s.fleet), 1.0) << tag;
    }
  }
}

TEST(Acceptance, AC06_RnceGuarantees) {
  check_rnce_guarantees(true);
  check_rnce_guarantees(false);
}

// ---------------------------------------------------------------- AC-07

struct SeedPatterns {
  bool a = false, b = false, c = false;
};

double mean_l1(const std::vector<CeDetail>& d, std::uint64_t seed, const std::string& method) {
  double s = 0.0;
  std::size_t n = 0;
  for (const CeDetail& e : d) {
    if (e.seed == seed && e.method == method && e.record.found) {
      s += e.record.distance;
      ++n;
    }
  }
  return n ? s / static_cast<double>(n) : std::nan("");
}

double v_delta(const std::vector<CeDetail>& d, std::uint64_t seed, const std::string& method, std::size_t shift) {
  std::size_t ok = 0, n = 0;
  for (const CeDetail& e : d) {
    if (e.seed != seed || e.method != method) continue;
    ++n;
    ok += e.record.found && e.robust.at(shift);
  }
  return n ? static_cast<double>(ok) / static_cast<double>(n) : std::nan("");
}

TEST(Acceptance, AC07_DeskScalePatterns) {
  BenchmarkConfig c = desk_config(true);
  c.validation_points = 20;
  c.generation_delta = "inc";
  c.generator.margin_step = 0.5;
  for (const char* m : {"nnce", "mce", "mce-r", "rnce-FF"}) c.methods.push_back(MethodSpec::parse(m));
  c.workers = 4;
  const MetricReport r = run_benchmark(c);
  const std::size_t inc = 1;

  const std::vector<double> grid{0.01, 0.03, 0.06};
  std::map<std::uint64_t, SeedPatterns> pat;
  for (std::uint64_t seed : c.seeds) {
    SeedPatterns& p = pat[seed];
    const double robust_mce = v_delta(r.details, seed, "mce-r", inc);
    const double robust_rnce = v_delta(r.details, seed, "rnce-FF", inc);
    p.a = robust_mce == 1.0 && robust_rnce == 1.0 && v_delta(r.details, seed, "mce", inc) < 1.0 &&
          v_delta(r.details, seed, "nnce", inc) < 1.0;
    p.b = mean_l1(r.details, seed, "mce") <= mean_l1(r.details, seed, "mce-r") + 1e-12;

    // Cost of robustness over a delta grid, on points found robust at every delta.
    const detail::SeedSetup s = detail::prepare_seed(c, seed);
    bool monotone = true;
    for (Method method : {Method::MceR, Method::Rnce}) {
      std::vector<std::vector<std::optional<double>>> cost(grid.size());
      for (std::size_t g = 0; g < grid.size(); ++g) {
        GeneratorOptions o = c.generator;
        o.shift = ShiftSet::linf(grid[g]);
        for (std::size_t k = 0; k < s.points.size(); ++k) {
          const CounterfactualRecord rec =
              generate(method, s.model, s.split.d1_train.x, s.split.d1_test.x[s.points[k]], s.targets[k], o);
          cost[g].push_back(rec.found && rec.robust ? std::optional<double>(rec.distance) : std::nullopt);
        }
      }
      std::vector<double> means(grid.size(), 0.0);
      std::size_t common = 0;
      for (std::size_t k = 0; k < s.points.size(); ++k) {
        bool all = true;
        for (std::size_t g = 0; g < grid.size(); ++g) all = all && cost[g][k].has_value();
        if (!all) continue;
        ++common;
        for (std::size_t g = 0; g < grid.size(); ++g) means[g] += *cost[g][k];
      }
      monotone = monotone && common > 0;
      for (std::size_t g = 1; g < grid.size(); ++g) monotone = monotone && means[g] >= means[g - 1] - 1e-12;
      std::cout << "  seed " << seed << " " << to_string(method) << " l1 over delta grid:";
      for (double v : means) std::cout << " " << (common ? v / static_cast<double>(common) : 0.0);
      std::cout << " (" << common << " points)\n";
    }
    p.c = monotone;
    std::cout << "  seed " << seed << " (a) " << p.a << " (b) " << p.b << " (c) " << p.c << "\n";
  }
  std::size_t a = 0, b = 0, cc = 0;
  for (const auto& [seed, p] : pat) {
    a += p.a;
    b += p.b;
    cc += p.c;
  }
  EXPECT_GE(a, 4u);
  EXPECT_GE(b, 4u);
  EXPECT_GE(cc, 4u);
}

// ---------------------------------------------------------------- AC-08

TEST(Acceptance, AC08_RnceAtZeroIsNnce) {
  const Dataset d = synth_binary(300, 0.2, 0.1, 8);
  TrainConfig tc;
  tc.epochs = 60;
  const Model m = train(d, Architecture::for_data(d, {6}), tc);
  Rng rng(8);
  GeneratorOptions o;
  o.shift = ShiftSet::linf(0.0);
  for (int q = 0; q < 100; ++q) {
    const FeatureVector x = testing::random_point(rng, 2);
    const Label t = 1 - classify(m, x);
    const CounterfactualRecord a = rnce(m, d.x, x, t, o);
    const CounterfactualRecord b = nnce(m, d.x, x, t, o);
    ASSERT_EQ(a.found, b.found);
    ASSERT_EQ(a.x_prime.size(), b.x_prime.size());
    EXPECT_EQ(std::memcmp(a.x_prime.data(), b.x_prime.data(), a.x_prime.size() * sizeof(double)), 0) << "query " << q;
  }
}

// ---------------------------------------------------------------- AC-09

TEST(Acceptance, AC09_GradientCheck) {
  Rng rng(909);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t out = trial % 2 == 0 ? 1 : 3;
    const Model m = testing::random_network(rng, 3, {4, 3}, out);
    const FeatureVector x = testing::random_point(rng, 3, -1, 1);
    const Label y = static_cast<Label>(rng.index(out == 1 ? 2 : out));
    FeatureVector dl;
    const ForwardTrace t = trace_forward(m, x);
    cross_entropy(t.logits(), y, &dl);
    const ParameterVector analytic = backprop(m, t, dl).flat();
    const ParameterVector theta = flatten(m);
    const double h = 1e-6;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      ParameterVector p = theta, q = theta;
      p[k] += h;
      q[k] -= h;
      const double numeric =
          (cross_entropy(unflatten(m, p).forward(x), y) - cross_entropy(unflatten(m, q).forward(x), y)) / (2 * h);
      const double scale = std::max({std::abs(numeric), std::abs(analytic[k]), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic[k]) / scale);
    }
  }
  std::cout << "  max relative error " << worst << "\n";
  EXPECT_LT(worst, 1e-4);
}

// ---------------------------------------------------------------- AC-10

double euclid(const FeatureVector& a, const FeatureVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Direct evaluation: sort all distances for every point involved.
double lof_direct(const FeatureVector& p, const std::vector<FeatureVector>& ref, std::size_t k) {
  auto knn = [&](const FeatureVector& q, std::size_t self) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      if (i != self) d.push_back({euclid(q, ref[i]), i});
    }
    std::sort(d.begin(), d.end());
    d.resize(k);
    return d;
  };
  auto lrd = [&](const FeatureVector& q, std::size_t self) {
    double s = 0.0;
    for (auto [d, o] : knn(q, self)) s += std::max(knn(ref[o], o).back().first, d);
    return 1.0 / (s / static_cast<double>(k) + 1e-10);
  };
  double s = 0.0;
  for (auto [d, o] : knn(p, ref.size())) s += lrd(ref[o], o);
  return s / (static_cast<double>(k) * lrd(p, ref.size()));
}

TEST(Acceptance, AC10_LofOracle) {
  std::vector<std::pair<std::vector<FeatureVector>, std::size_t>> configs;
  {
    std::vector<FeatureVector> grid;
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) grid.push_back({0.1 * i, 0.1 * j});
    }
    configs.push_back({grid, 4});
  }
  {
    std::vector<FeatureVector> ring;
    for (int i = 0; i < 12; ++i) ring.push_back({std::cos(i * 0.5236), std::sin(i * 0.5236)});
    configs.push_back({ring, 3});
  }
  {
    std::vector<FeatureVector> two{{0, 0}, {0.1, 0}, {0, 0.1}, {0.1, 0.1}, {0.05, 0.05},
                                   {1, 1}, {1.2, 1}, {1, 1.2}, {1.2, 1.2}, {1.1, 1.1}};
    configs.push_back({two, 3});
  }
  {
    std::vector<FeatureVector> line;
    for (int i = 0; i < 8; ++i) line.push_back({static_cast<double>(i * i) / 10.0});
    configs.push_back({line, 2});
  }
  Rng rng(1010);
  while (configs.size() < 10) {
    const std::size_t n = 10 + rng.index(21);
    const std::size_t dim = 1 + rng.index(3);
    std::vector<FeatureVector> ref;
    for (std::size_t i = 0; i < n; ++i) ref.push_back(testing::random_point(rng, dim));
    configs.push_back({ref, 2 + rng.index(6)});
  }
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    const auto& [ref, k] = configs[ci];
    const LofModel lof(ref, k);
    double worst_inlier = 0.0;
    for (const FeatureVector& p : ref) {
      EXPECT_NEAR(lof.score(p), lof_direct(p, ref, k), 1e-9) << "config " << ci;
      worst_inlier = std::max(worst_inlier, lof.score(p));
    }
    const FeatureVector probe = testing::random_point(rng, ref[0].size(), -0.5, 1.5);
    EXPECT_NEAR(lof.score(probe), lof_direct(probe, ref, k), 1e-9) << "config " << ci;
    const FeatureVector outlier(ref[0].size(), 25.0);
    EXPECT_GT(lof.score(outlier), worst_inlier) << "config " << ci;
  }
}

// ---------------------------------------------------------------- AC-11

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RCE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Acceptance, AC11_WorkerCountDoesNotChangeReports) {
  const fs::path dir = fs::temp_directory_path() / "rce_acceptance_ac11";
  fs::remove_all(dir);
  const std::string args = "benchmark --seed 0 --synth binary --n 300 --seeds 3 --test-points 10 --margin-step 0.5 "
                           "--methods nnce,mce,mce-r,rnce-FF,rnce-TT --extra-deltas 0.02";
  ASSERT_EQ(run_cli(args + " --workers 1 --out-dir " + (dir / "w1").string()), 0);
  ASSERT_EQ(run_cli(args + " --workers 8 --out-dir " + (dir / "w8").string()), 0);
  for (const char* f : {"report.csv", "report.json", "manifest.json"}) {
    const std::string a = slurp(dir / "w1" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(dir / "w8" / f)) << f;
  }
  fs::remove_all(dir);
}

class CriterionPrinter : public ::testing::EmptyTestEventListener {
 public:
  void OnTestEnd(const ::testing::TestInfo& info) override {
    const std::string name = info.name();  // ACnn_Description
    const bool ok = info.result()->Passed();
    std::cout << "AC-" << name.substr(2, 2) << " " << (ok ? "PASS" : "FAIL") << "  " << name.substr(5) << " ("
              << info.result()->elapsed_time() << " ms)" << std::endl;
  }
};

}  // namespace
}  // namespace rce

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  ::testing::UnitTest::GetInstance()->listeners().Append(new rce::CriterionPrinter);
  return RUN_ALL_TESTS();
}
