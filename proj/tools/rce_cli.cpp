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

// Command-line front end: synth, train, verify, explain, estimate-delta,
// benchmark. Machine-readable results go to stdout or the output directory,
// diagnostics to stderr.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rce/benchmark.hpp"
#include "rce/data.hpp"
#include "rce/generators.hpp"
#include "rce/io.hpp"
#include "rce/parallel.hpp"
#include "rce/train.hpp"
#include "rce/verifier.hpp"

namespace fs = std::filesystem;
using namespace rce;

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 1 verification found a non-robust CE, 2 failure.
constexpr int kNotRobust = 1;
constexpr int kFailure = 2;

double parse_p(const std::string& s) {
  if (s == "inf") return INFINITY;
  return std::stod(s);
}

bool parse_flag(const std::string& s) { return s == "t" || s == "true" || s == "T"; }

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoul(item));
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

Architecture architecture_of(const Model& m) {
  Architecture a;
  a.inputs = m.input_dim();
  for (std::size_t i = 0; i + 1 < m.layers().size(); ++i) a.hidden.push_back(m.layers()[i].out);
  a.outputs = m.num_outputs();
  a.bias = m.layers().front().has_bias();
  return a;
}

void write_manifest(const std::string& dir, const std::string& command, const json& config,
                    const std::vector<std::string>& outputs) {
  json m{{"tool", "rce"}, {"version", kVersion}, {"command", command}, {"config", config}, {"outputs", outputs}};
  write_text((fs::path(dir) / "manifest.json").string(), m.dump(2) + "\n");
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) return;
  fs::create_directories(dir);
}

void require_file(const std::string& path, const char* what) {
  if (!fs::exists(path)) throw std::runtime_error(std::string(what) + " not found: " + path);
}

Dataset load_dataset(const std::string& data, const std::string& schema) {
  require_file(data, "dataset");
  require_file(schema, "schema");
  return load_csv(data, Schema::load(schema));
}

// Points from a CSV whose header names the model inputs (schema feature names
// when a schema is given, otherwise the first n columns).
std::vector<FeatureVector> load_points(const std::string& path, const std::optional<Schema>& schema, std::size_t n) {
  require_file(path, "inputs");
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
  const auto header = rce::detail::split_csv_line(line);
  std::vector<std::size_t> cols;
  if (schema) {
    for (const auto& f : schema->features) {
      const auto it = std::find(header.begin(), header.end(), f.name);
      if (it == header.end()) throw std::invalid_argument(path + ": missing column " + f.name);
      cols.push_back(static_cast<std::size_t>(it - header.begin()));
    }
  } else {
    if (header.size() < n) throw std::invalid_argument(path + ": fewer columns than model inputs");
    for (std::size_t j = 0; j < n; ++j) cols.push_back(j);
  }
  std::vector<FeatureVector> pts;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = rce::detail::split_csv_line(line);
    if (cells.size() != header.size()) throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": ragged row");
    FeatureVector p;
    for (std::size_t c : cols) p.push_back(rce::detail::parse_number(cells[c], path + ":" + std::to_string(lineno)));
    pts.push_back(std::move(p));
  }
  return pts;
}

Label default_target(const Model& m, std::span<const double> x) {
  const Label c = classify(m, x);
  return m.is_binary() ? 1 - c : (c + 1) % static_cast<Label>(m.num_classes());
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string kind = "binary";
  std::size_t n = 500;
  std::size_t classes = 3;
  double separation = 0.2;
  double noise = 0.1;
  std::uint64_t seed = 0;
  std::string out_dir;
};

int cmd_synth(const SynthArgs& a) {
  const Dataset d = a.kind == "binary" ? synth_binary(a.n, a.separation, a.noise, a.seed)
                                       : synth_multiclass(a.n, a.classes, a.seed);
  ensure_dir(a.out_dir);
  save_csv((fs::path(a.out_dir) / "data.csv").string(), d);
  write_text((fs::path(a.out_dir) / "schema.json").string(), schema_of(d).to_json().dump(2) + "\n");
  write_manifest(a.out_dir, "synth",
                 {{"kind", a.kind}, {"n", a.n}, {"classes", a.classes}, {"separation", a.separation},
                  {"noise", a.noise}, {"seed", a.seed}},
                 {"data.csv", "schema.json"});
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data, schema, out_dir;
  std::string hidden = "8,8";
  TrainConfig cfg;
};

int cmd_train(const TrainArgs& a) {
  const Dataset d = load_dataset(a.data, a.schema);
  const Architecture arch = Architecture::for_data(d, parse_sizes(a.hidden));
  const Model m = train(d, arch, a.cfg);
  ensure_dir(a.out_dir);
  save_model((fs::path(a.out_dir) / "model.json").string(), m);
  const json summary{{"accuracy", accuracy(m, d)}, {"loss", mean_loss(m, d)}, {"parameters", m.parameter_count()}};
  write_manifest(a.out_dir, "train",
                 {{"data", a.data}, {"schema", a.schema}, {"hidden", a.hidden},
                  {"learning_rate", a.cfg.learning_rate}, {"epochs", a.cfg.epochs},
                  {"batch_size", a.cfg.batch_size}, {"weight_decay", a.cfg.weight_decay}, {"seed", a.cfg.seed}},
                 {"model.json"});
  std::cout << summary.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  std::string model, ces, out_dir;
  std::vector<std::string> points;
  Label target = 1;
  double delta = 0.0;
  std::string p = "inf";
  std::size_t node_limit = 1'000'000;
};

int cmd_verify(const VerifyArgs& a) {
  require_file(a.model, "model");
  const Model m = load_model(a.model);
  std::vector<CeEntry> entries;
  if (!a.ces.empty()) entries = load_ce_lines(a.ces);
  for (const auto& s : a.points) entries.push_back({parse_doubles(s), a.target, std::nullopt});
  if (entries.empty()) throw std::invalid_argument("nothing to verify: give --ces or --point");
  const ShiftSet shift(parse_p(a.p), a.delta);
  VerifyOptions opt;
  opt.node_limit = a.node_limit;
  bool all = true;
  std::ostringstream lines;
  for (const CeEntry& e : entries) {
    const RobustnessVerdict v = e.x ? is_strictly_delta_robust(m, shift, *e.x, e.x_prime, e.target, opt)
                                    : is_delta_robust(m, shift, e.x_prime, e.target, opt);
    all = all && v.robust;
    json j = to_json(v);
    j["x_prime"] = e.x_prime;
    j["shift"] = to_json(shift);
    lines << j.dump() << "\n";
  }
  std::cout << lines.str();
  if (!a.out_dir.empty()) {
    ensure_dir(a.out_dir);
    write_text((fs::path(a.out_dir) / "verdicts.jsonl").string(), lines.str());
    write_manifest(a.out_dir, "verify",
                   {{"model", a.model}, {"ces", a.ces}, {"delta", a.delta}, {"p", a.p}, {"node_limit", a.node_limit}},
                   {"verdicts.jsonl"});
  }
  return all ? 0 : kNotRobust;
}

// ---------------------------------------------------------------- explain

struct ExplainArgs {
  std::string model, data, schema, inputs, out_dir;
  std::vector<std::string> points;
  std::string method = "rnce";
  std::string robust_init = "f", optimal = "f";
  double delta = 0.0;
  std::string p = "inf";
  double margin = 0.0;
  double margin_step = 0.1;
  std::size_t max_iters = 10;
  double lambda = 0.1;
  std::optional<Label> target;
  std::size_t node_limit = 200'000;
  std::size_t workers = 1;
};

int cmd_explain(const ExplainArgs& a) {
  require_file(a.model, "model");
  const Model m = load_model(a.model);
  const Method method = parse_method(a.method);
  std::vector<FeatureVector> data;
  std::optional<Schema> schema;
  if (!a.schema.empty()) {
    require_file(a.schema, "schema");
    schema = Schema::load(a.schema);
  }
  if (needs_training_data(method)) {
    if (a.data.empty() || !schema) throw std::invalid_argument(a.method + " needs --data and --schema");
    data = load_dataset(a.data, a.schema).x;
  }
  std::vector<FeatureVector> inputs;
  if (!a.inputs.empty()) inputs = load_points(a.inputs, schema, m.input_dim());
  for (const auto& s : a.points) inputs.push_back(parse_doubles(s));
  if (inputs.empty()) throw std::invalid_argument("no inputs: give --inputs or --point");

  GeneratorOptions o;
  o.shift = ShiftSet(parse_p(a.p), a.delta);
  o.robust_init = parse_flag(a.robust_init);
  o.optimal = parse_flag(a.optimal);
  o.margin = a.margin;
  o.margin_step = a.margin_step;
  o.max_iters = a.max_iters;
  o.lambda = a.lambda;
  o.node_limit = a.node_limit;
  o.verify.node_limit = a.node_limit;

  std::vector<std::string> lines(inputs.size());
  std::optional<RnceIndex> index;
  if (method == Method::Rnce && a.target) index.emplace(m, data, o.shift, *a.target, o.robust_init, o.verify);
  parallel_for(inputs.size(), a.workers, [&](std::size_t i) {
    const Label t = a.target ? *a.target : default_target(m, inputs[i]);
    const CounterfactualRecord r = index ? index->query(inputs[i], o.optimal, o.line_step)
                                         : generate(method, m, data, inputs[i], t, o);
    json j = to_json(r);
    j["margin"] = a.margin;
    lines[i] = j.dump();
  });
  std::ostringstream all;
  for (const auto& l : lines) all << l << "\n";
  if (!a.out_dir.empty()) {
    ensure_dir(a.out_dir);
    write_text((fs::path(a.out_dir) / "explanations.jsonl").string(), all.str());
    write_manifest(a.out_dir, "explain",
                   {{"model", a.model}, {"data", a.data}, {"inputs", a.inputs}, {"method", a.method},
                    {"robust_init", o.robust_init}, {"optimal", o.optimal}, {"delta", a.delta}, {"p", a.p},
                    {"margin", a.margin}, {"margin_step", a.margin_step}, {"max_iters", a.max_iters}},
                   {"explanations.jsonl"});
  }
  std::cout << all.str();
  return 0;
}

// ---------------------------------------------------------------- estimate-delta

struct EstimateArgs {
  std::string strategy = "incremental";
  std::string model, data, schema, out_dir;
  std::vector<std::string> retrained;
  std::string fractions = "0.1";
  std::string grid;
  std::size_t replicas = 5;
  std::size_t epochs = 10;
  std::size_t validation_points = 20;
  std::string p = "inf";
  TrainConfig cfg;
};

int cmd_estimate_delta(const EstimateArgs& a) {
  require_file(a.model, "model");
  const Model m = load_model(a.model);
  const Dataset d = load_dataset(a.data, a.schema);
  json report{{"strategy", a.strategy}};
  if (a.strategy == "incremental") {
    const std::vector<double> fr = parse_doubles(a.fractions);
    const auto est = estimate_delta_incremental(m, d, fr, a.replicas, a.cfg, a.epochs);
    json per = json::array();
    for (const auto& e : est) per.push_back({{"fraction", e.fraction}, {"delta", e.delta}, {"per_replica", e.per_replica}});
    report["fractions"] = fr;
    report["per_point"] = per;
    double at10 = est.front().delta;
    for (const auto& e : est) {
      if (std::abs(e.fraction - 0.1) < 1e-12) at10 = e.delta;
    }
    report["delta_inc"] = at10;
  } else {
    std::vector<Model> fleet;
    for (const auto& path : a.retrained) {
      require_file(path, "retrained model");
      fleet.push_back(load_model(path));
    }
    if (fleet.empty()) {
      // Default fleet: incremental fine-tunes on the data.
      RetrainSpec spec;
      spec.replicas = a.replicas;
      spec.epochs = a.epochs;
      spec.seed = a.cfg.seed;
      fleet = retrain(m, architecture_of(m), a.cfg, d, d, spec);
    }
    std::vector<FeatureVector> xs;
    std::vector<Label> ts;
    Rng rng(a.cfg.seed);
    for (std::size_t i : rng.permutation(d.size())) {
      if (xs.size() >= a.validation_points) break;
      if (m.is_binary() && classify(m, d.x[i]) != 0) continue;
      xs.push_back(d.x[i]);
      ts.push_back(default_target(m, d.x[i]));
    }
    const double p = parse_p(a.p);
    auto gen = [&](double delta, const FeatureVector& x, Label t) -> std::optional<FeatureVector> {
      GeneratorOptions o;
      o.shift = ShiftSet(p, delta);
      const CounterfactualRecord r = rnce(m, d.x, x, t, o);
      if (!r.found) return std::nullopt;
      return r.x_prime;
    };
    const std::vector<double> grid = a.grid.empty() ? default_delta_grid() : parse_doubles(a.grid);
    const auto e = estimate_delta_validation(fleet, xs, ts, gen, grid);
    json per = json::array();
    for (std::size_t k = 0; k < e.validity.size(); ++k) per.push_back({{"delta", e.grid[k]}, {"validity", number(e.validity[k])}});
    report["grid"] = e.grid;
    report["per_point"] = per;
    report["delta_val"] = e.delta;
    report["reached"] = e.reached;
    for (const auto& w : e.warnings) std::cerr << "warning: " << w << "\n";
    if (!e.reached) std::cerr << "warning: no grid value reached full validity\n";
  }
  std::cout << report.dump() << "\n";
  if (!a.out_dir.empty()) {
    ensure_dir(a.out_dir);
    write_text((fs::path(a.out_dir) / "delta.json").string(), report.dump(2) + "\n");
    write_manifest(a.out_dir, "estimate-delta",
                   {{"strategy", a.strategy}, {"model", a.model}, {"data", a.data}, {"replicas", a.replicas},
                    {"epochs", a.epochs}, {"seed", a.cfg.seed}},
                   {"delta.json"});
  }
  return 0;
}

// ---------------------------------------------------------------- benchmark

struct BenchmarkArgs {
  std::string data, schema, synth = "binary", out_dir;
  std::size_t n = 500;
  std::string methods = "nnce,mce,mce-r,rnce-FF,rnce-TF,rnce-FT,rnce-TT";
  std::size_t seeds = 5;
  std::uint64_t seed = 0;
  std::string hidden = "8,8";
  std::string generation = "val";
  std::string extra_deltas;
  std::size_t test_points = 20;
  std::size_t replicas = 5;
  double margin_step = 0.1;
  std::size_t max_iters = 10;
  std::size_t node_limit = 200'000;
  std::size_t workers = 1;
  std::string p = "inf";
  TrainConfig cfg;
};

int cmd_benchmark(const BenchmarkArgs& a) {
  BenchmarkConfig c;
  if (!a.data.empty()) {
    c.dataset = scaled(load_dataset(a.data, a.schema));
  } else if (a.synth == "binary") {
    c.dataset = synth_binary(a.n, 0.2, 0.1, a.seed);
  } else {
    c.dataset = synth_multiclass(a.n, 3, a.seed);
  }
  c.hidden = parse_sizes(a.hidden);
  c.train = a.cfg;
  std::stringstream ms(a.methods);
  std::string item;
  while (std::getline(ms, item, ',')) c.methods.push_back(MethodSpec::parse(item));
  c.seeds.clear();
  for (std::size_t i = 0; i < a.seeds; ++i) c.seeds.push_back(a.seed + i);
  c.test_points = a.test_points;
  c.replicas = a.replicas;
  c.generation_delta = a.generation;
  c.extra_deltas = parse_doubles(a.extra_deltas);
  c.generator.shift = ShiftSet(parse_p(a.p), 0.0);
  c.generator.margin_step = a.margin_step;
  c.generator.max_iters = a.max_iters;
  c.generator.node_limit = a.node_limit;
  c.generator.verify.node_limit = a.node_limit;
  c.workers = a.workers;
  const MetricReport r = run_benchmark(c);
  ensure_dir(a.out_dir);
  const fs::path dir(a.out_dir);
  write_text((dir / "report.csv").string(), report_csv(r));
  write_text((dir / "report.json").string(), report_json(r).dump(2) + "\n");
  write_text((dir / "timing.csv").string(), timing_csv(r));
  // The worker count only affects timing.csv, so it stays out of the manifest.
  write_manifest(a.out_dir, "benchmark",
                 {{"data", a.data.empty() ? "synth:" + a.synth : a.data}, {"n", a.n}, {"methods", a.methods},
                  {"seeds", a.seeds}, {"seed", a.seed}, {"hidden", a.hidden}, {"generation_delta", a.generation},
                  {"extra_deltas", a.extra_deltas}, {"test_points", a.test_points}, {"replicas", a.replicas},
                  {"margin_step", a.margin_step}, {"max_iters", a.max_iters}, {"p", a.p},
                  {"epochs", a.cfg.epochs}, {"learning_rate", a.cfg.learning_rate}},
                 {"report.csv", "report.json", "timing.csv"});
  std::cout << report_csv(r);
  return 0;
}

void add_train_config(CLI::App* app, TrainConfig& cfg, bool with_seed = true) {
  app->add_option("--lr", cfg.learning_rate, "SGD learning rate")->check(CLI::PositiveNumber);
  app->add_option("--epochs", cfg.epochs, "training epochs");
  app->add_option("--batch-size", cfg.batch_size, "minibatch size")->check(CLI::PositiveNumber);
  app->add_option("--weight-decay", cfg.weight_decay, "L2 weight decay")->check(CLI::NonNegativeNumber);
  if (with_seed) app->add_option("--seed", cfg.seed, "random seed")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust counterfactual explanations under model shifts"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  const std::vector<std::string> norms{"1", "2", "inf"};
  const std::vector<std::string> flags{"t", "f", "true", "false"};
  const std::vector<std::string> methods{"mce", "mce-r", "gce", "gce-r", "nnce", "rnce"};

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset and schema");
  synth->add_option("--kind", sy.kind)->check(CLI::IsMember({"binary", "multi"}));
  synth->add_option("--n", sy.n)->check(CLI::PositiveNumber);
  synth->add_option("--classes", sy.classes);
  synth->add_option("--separation", sy.separation);
  synth->add_option("--noise", sy.noise);
  synth->add_option("--seed", sy.seed)->required();
  synth->add_option("--out-dir", sy.out_dir)->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--data", tr.data)->required();
  train_cmd->add_option("--schema", tr.schema)->required();
  train_cmd->add_option("--hidden", tr.hidden, "hidden layer sizes, empty for logistic regression");
  train_cmd->add_option("--out-dir", tr.out_dir)->required();
  add_train_config(train_cmd, tr.cfg);

  VerifyArgs ve;
  auto* verify = app.add_subcommand("verify", "test CEs for robustness; exit 0 iff all are robust");
  verify->add_option("--model", ve.model)->required();
  verify->add_option("--ces", ve.ces, "JSON-lines file with x_prime and target");
  verify->add_option("--point", ve.points, "inline CE, comma separated");
  verify->add_option("--target", ve.target, "target class for --point");
  verify->add_option("--delta", ve.delta)->check(CLI::NonNegativeNumber);
  verify->add_option("--p", ve.p)->check(CLI::IsMember(norms));
  verify->add_option("--node-limit", ve.node_limit);
  verify->add_option("--out-dir", ve.out_dir);

  ExplainArgs ex;
  auto* explain = app.add_subcommand("explain", "generate counterfactual explanations");
  explain->add_option("--model", ex.model)->required();
  explain->add_option("--data", ex.data, "training data for nnce/rnce");
  explain->add_option("--schema", ex.schema);
  explain->add_option("--inputs", ex.inputs, "CSV of inputs to explain");
  explain->add_option("--point", ex.points, "inline input, comma separated");
  explain->add_option("--method", ex.method)->check(CLI::IsMember(methods));
  explain->add_option("--robust-init", ex.robust_init)->check(CLI::IsMember(flags));
  explain->add_option("--optimal", ex.optimal)->check(CLI::IsMember(flags));
  explain->add_option("--delta", ex.delta)->check(CLI::NonNegativeNumber);
  explain->add_option("--p", ex.p)->check(CLI::IsMember(norms));
  explain->add_option("--margin", ex.margin)->check(CLI::NonNegativeNumber);
  explain->add_option("--margin-step", ex.margin_step)->check(CLI::NonNegativeNumber);
  explain->add_option("--max-iters", ex.max_iters)->check(CLI::PositiveNumber);
  explain->add_option("--lambda", ex.lambda)->check(CLI::NonNegativeNumber);
  explain->add_option("--target", ex.target);
  explain->add_option("--node-limit", ex.node_limit);
  explain->add_option("--workers", ex.workers)->check(CLI::PositiveNumber);
  explain->add_option("--out-dir", ex.out_dir);

  EstimateArgs es;
  auto* estimate = app.add_subcommand("estimate-delta", "identify the shift magnitude");
  estimate->add_option("--strategy", es.strategy)->check(CLI::IsMember({"incremental", "validation"}));
  estimate->add_option("--model", es.model)->required();
  estimate->add_option("--data", es.data)->required();
  estimate->add_option("--schema", es.schema)->required();
  estimate->add_option("--retrained", es.retrained, "retrained model files (validation strategy)");
  estimate->add_option("--fractions", es.fractions);
  estimate->add_option("--grid", es.grid);
  estimate->add_option("--replicas", es.replicas)->check(CLI::PositiveNumber);
  estimate->add_option("--fine-tune-epochs", es.epochs);
  estimate->add_option("--validation-points", es.validation_points);
  estimate->add_option("--p", es.p)->check(CLI::IsMember(norms));
  estimate->add_option("--out-dir", es.out_dir);
  add_train_config(estimate, es.cfg);

  BenchmarkArgs be;
  auto* bench = app.add_subcommand("benchmark", "run the full evaluation protocol");
  bench->add_option("--data", be.data);
  bench->add_option("--schema", be.schema);
  bench->add_option("--synth", be.synth)->check(CLI::IsMember({"binary", "multi"}));
  bench->add_option("--n", be.n);
  bench->add_option("--methods", be.methods);
  bench->add_option("--seeds", be.seeds)->check(CLI::PositiveNumber);
  bench->add_option("--hidden", be.hidden);
  bench->add_option("--delta", be.generation, "generation shift: val, inc or a number");
  bench->add_option("--extra-deltas", be.extra_deltas);
  bench->add_option("--test-points", be.test_points);
  bench->add_option("--replicas", be.replicas)->check(CLI::PositiveNumber);
  bench->add_option("--margin-step", be.margin_step);
  bench->add_option("--max-iters", be.max_iters)->check(CLI::PositiveNumber);
  bench->add_option("--node-limit", be.node_limit);
  bench->add_option("--workers", be.workers)->check(CLI::PositiveNumber);
  bench->add_option("--p", be.p)->check(CLI::IsMember(norms));
  bench->add_option("--out-dir", be.out_dir)->required();
  add_train_config(bench, be.cfg, false);
  bench->add_option("--seed", be.seed, "first seed of the sweep")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kFailure;
  }
  try {
    if (*synth) return cmd_synth(sy);
    if (*train_cmd) return cmd_train(tr);
    if (*verify) return cmd_verify(ve);
    if (*explain) return cmd_explain(ex);
    if (*estimate) return cmd_estimate_delta(es);
    if (*bench) return cmd_benchmark(be);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
