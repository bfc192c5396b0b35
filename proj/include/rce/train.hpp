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

#ifndef RCE_TRAIN_HPP
#define RCE_TRAIN_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rce/data.hpp"
#include "rce/model.hpp"
#include "rce/rng.hpp"

namespace rce {

// Inputs and pre-activations of every layer for one forward pass.
struct ForwardTrace {
  std::vector<FeatureVector> inputs;  // inputs[l] feeds layer l
  std::vector<FeatureVector> pre;     // pre[l] = W_l inputs[l] + b_l
  const FeatureVector& logits() const { return pre.back(); }
};

inline ForwardTrace trace_forward(const Model& m, std::span<const double> x) {
  if (x.size() != m.input_dim()) throw std::invalid_argument("trace_forward: dimension mismatch");
  ForwardTrace t;
  FeatureVector cur(x.begin(), x.end());
  const auto& layers = m.layers();
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const Layer& l = layers[li];
    FeatureVector z(l.out);
    for (std::size_t r = 0; r < l.out; ++r) {
      double s = l.b(r);
      for (std::size_t c = 0; c < l.in; ++c) s += l.w(r, c) * cur[c];
      z[r] = s;
    }
    t.inputs.push_back(cur);
    if (li + 1 < layers.size()) {
      cur = z;
      for (double& v : cur) v = std::max(0.0, v);
    }
    t.pre.push_back(std::move(z));
  }
  return t;
}

// Parameter gradients shaped like the model's layers, plus the input gradient.
struct Gradients {
  std::vector<Layer> layers;
  FeatureVector input;

  ParameterVector flat() const {
    ParameterVector g;
    for (const Layer& l : layers) {
      for (std::size_t c = 0; c < l.in; ++c) {
        for (std::size_t r = 0; r < l.out; ++r) g.push_back(l.w(r, c));
      }
      g.insert(g.end(), l.bias.begin(), l.bias.end());
    }
    return g;
  }
};

// Backpropagates d(loss)/d(logits). ReLU'(0) is taken as 0.
inline Gradients backprop(const Model& m, const ForwardTrace& t, std::span<const double> dlogits) {
  const auto& layers = m.layers();
  Gradients g;
  g.layers.reserve(layers.size());
  for (const Layer& l : layers) g.layers.push_back(Layer::zeros(l.out, l.in, l.has_bias()));
  FeatureVector delta(dlogits.begin(), dlogits.end());
  for (std::size_t li = layers.size(); li-- > 0;) {
    const Layer& l = layers[li];
    Layer& gl = g.layers[li];
    const FeatureVector& in = t.inputs[li];
    FeatureVector back(l.in, 0.0);
    for (std::size_t r = 0; r < l.out; ++r) {
      if (delta[r] == 0.0) continue;
      for (std::size_t c = 0; c < l.in; ++c) {
        gl.w(r, c) += delta[r] * in[c];
        back[c] += l.w(r, c) * delta[r];
      }
      if (l.has_bias()) gl.bias[r] += delta[r];
    }
    if (li > 0) {
      const FeatureVector& z = t.pre[li - 1];
      for (std::size_t c = 0; c < back.size(); ++c) back[c] = z[c] > 0.0 ? back[c] : 0.0;
    }
    delta = std::move(back);
  }
  g.input = std::move(delta);
  return g;
}

// Cross-entropy on sigmoid (one logit) or softmax (several) and its
// gradient with respect to the logits.
inline double cross_entropy(std::span<const double> logits, Label y, FeatureVector* dlogits = nullptr) {
  if (logits.size() == 1) {
    const double z = logits[0];
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    if (dlogits) {
      const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      *dlogits = {p - static_cast<double>(y)};
    }
    return softplus - static_cast<double>(y) * z;
  }
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  if (dlogits) {
    dlogits->resize(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) {
      (*dlogits)[c] = std::exp(logits[c] - lse) - (static_cast<Label>(c) == y ? 1.0 : 0.0);
    }
  }
  return lse - logits[static_cast<std::size_t>(y)];
}

struct Architecture {
  std::size_t inputs = 2;
  std::vector<std::size_t> hidden;  // empty: logistic regression
  std::size_t outputs = 1;          // 1: binary, otherwise one logit per class
  bool bias = true;

  static Architecture for_data(const Dataset& d, std::vector<std::size_t> hidden) {
    return {d.dim(), std::move(hidden), d.num_classes == 2 ? std::size_t{1} : d.num_classes, true};
  }
};

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double weight_decay = 0.0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
    if (weight_decay < 0.0) throw std::invalid_argument("weight decay must be >= 0");
  }
};

// Uniform He-style initialization: U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.
inline Model initialize(const Architecture& a, Rng& rng) {
  if (a.inputs == 0 || a.outputs == 0) throw std::invalid_argument("architecture needs inputs and outputs");
  if (a.hidden.empty() && a.outputs != 1) {
    throw std::invalid_argument("logistic regression has a single output");
  }
  std::vector<Layer> layers;
  std::size_t prev = a.inputs;
  std::vector<std::size_t> dims = a.hidden;
  dims.push_back(a.outputs);
  for (std::size_t d : dims) {
    Layer l = Layer::zeros(d, prev, a.bias);
    const double r = std::sqrt(6.0 / static_cast<double>(prev));
    for (double& w : l.weights) w = rng.uniform(-r, r);
    layers.push_back(std::move(l));
    prev = d;
  }
  return a.hidden.empty() ? Model(ModelType::Logistic, std::move(layers)) : Model::network(std::move(layers));
}

inline double mean_loss(const Model& m, const Dataset& d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) s += cross_entropy(m.forward(d.x[i]), d.y[i]);
  return d.empty() ? 0.0 : s / static_cast<double>(d.size());
}

inline double accuracy(const Model& m, const Dataset& d) {
  if (d.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.size(); ++i) ok += classify(m, d.x[i]) == d.y[i];
  return static_cast<double>(ok) / static_cast<double>(d.size());
}

// Minibatch SGD continuing from `start`. The batch order is reshuffled every
// epoch from cfg.seed.
inline Model sgd(const Model& start, const Dataset& d, std::size_t epochs, const TrainConfig& cfg) {
  cfg.validate();
  if (d.empty() || epochs == 0) return start;
  if (d.x.front().size() != start.input_dim()) {
    throw std::invalid_argument("training data width does not match the model");
  }
  std::vector<Layer> layers = start.layers();
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  FeatureVector dlogits;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(order.size(), b0 + cfg.batch_size);
      const Model cur(start.type(), layers);
      std::vector<Layer> acc;
      for (const Layer& l : layers) acc.push_back(Layer::zeros(l.out, l.in, l.has_bias()));
      for (std::size_t k = b0; k < b1; ++k) {
        const std::size_t i = order[k];
        const ForwardTrace t = trace_forward(cur, d.x[i]);
        epoch_loss += cross_entropy(t.logits(), d.y[i], &dlogits);
        const Gradients g = backprop(cur, t, dlogits);
        for (std::size_t li = 0; li < acc.size(); ++li) {
          for (std::size_t j = 0; j < acc[li].weights.size(); ++j) acc[li].weights[j] += g.layers[li].weights[j];
          for (std::size_t j = 0; j < acc[li].bias.size(); ++j) acc[li].bias[j] += g.layers[li].bias[j];
        }
      }
      const double scale = cfg.learning_rate / static_cast<double>(b1 - b0);
      for (std::size_t li = 0; li < layers.size(); ++li) {
        for (std::size_t j = 0; j < layers[li].weights.size(); ++j) {
          layers[li].weights[j] -= scale * acc[li].weights[j] + cfg.learning_rate * cfg.weight_decay * layers[li].weights[j];
        }
        for (std::size_t j = 0; j < layers[li].bias.size(); ++j) layers[li].bias[j] -= scale * acc[li].bias[j];
      }
      for (const Layer& l : layers) {
        for (double w : l.weights) {
          if (!std::isfinite(w)) throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
        }
        for (double b : l.bias) {
          if (!std::isfinite(b)) throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
        }
      }
    }
    if (!std::isfinite(epoch_loss)) {
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
    }
  }
  return Model(start.type(), std::move(layers));
}

inline Model train(const Dataset& d, const Architecture& a, const TrainConfig& cfg) {
  Rng rng(cfg.seed);
  const Model init = initialize(a, rng);
  TrainConfig c = cfg;
  c.seed = cfg.seed + 1;
  return sgd(init, d, cfg.epochs, c);
}

// Warm-started continuation; the original model is left untouched.
inline Model fine_tune(const Model& m, const Dataset& subset, std::size_t epochs, const TrainConfig& cfg) {
  return sgd(m, subset, epochs, cfg);
}

enum class RetrainMode { Incremental, Complete, LeaveOneOut };

inline const char* to_string(RetrainMode m) {
  switch (m) {
    case RetrainMode::Incremental: return "incremental";
    case RetrainMode::Complete: return "complete";
    case RetrainMode::LeaveOneOut: return "leave_one_out";
  }
  return "?";
}

struct RetrainSpec {
  RetrainMode mode = RetrainMode::Incremental;
  double fraction = 0.1;        // share of D2 used by incremental fine-tuning
  std::size_t epochs = 10;      // incremental fine-tuning passes over the subset
  double drop_fraction = 0.01;  // share of D1 removed for leave-one-out
  std::size_t replicas = 5;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("retrain fraction must be in [0, 1]");
    if (replicas == 0) throw std::invalid_argument("replica count must be >= 1");
  }
};

inline std::uint64_t replica_seed(std::uint64_t base, std::size_t replica) {
  return base * 1'000'003ULL + 7919ULL * (replica + 1);
}

// Seeded random subset holding round(fraction * n) rows.
inline Dataset random_fraction(const Dataset& d, double fraction, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> perm = rng.permutation(d.size());
  perm.resize(static_cast<std::size_t>(std::llround(fraction * static_cast<double>(d.size()))));
  return d.subset(perm);
}

// One retrained model: incremental fine-tunes m on part of d2; complete
// retrains on d1 + d2; leave-one-out retrains on d1 minus a random 1%.
inline Model retrain_one(const Model& m, const Architecture& a, const TrainConfig& cfg, const Dataset& d1,
                         const Dataset& d2, const RetrainSpec& spec, std::size_t replica) {
  spec.validate();
  TrainConfig c = cfg;
  c.seed = replica_seed(spec.seed, replica);
  switch (spec.mode) {
    case RetrainMode::Incremental:
      return fine_tune(m, random_fraction(d2, spec.fraction, c.seed), spec.epochs, c);
    case RetrainMode::Complete:
      return train(concat(d1, d2), a, c);
    case RetrainMode::LeaveOneOut:
      return train(random_fraction(d1, 1.0 - spec.drop_fraction, c.seed), a, c);
  }
  throw std::logic_error("unknown retrain mode");
}

inline std::vector<Model> retrain(const Model& m, const Architecture& a, const TrainConfig& cfg, const Dataset& d1,
                                  const Dataset& d2, const RetrainSpec& spec) {
  std::vector<Model> out;
  for (std::size_t r = 0; r < spec.replicas; ++r) out.push_back(retrain_one(m, a, cfg, d1, d2, spec, r));
  return out;
}

struct IncrementalDeltaEstimate {
  double fraction = 0.0;
  double delta = 0.0;                // mean infinity-distance over replicas
  std::vector<double> per_replica;
};

// Mean infinity-distance between m and models fine-tuned on growing shares of d2.
inline std::vector<IncrementalDeltaEstimate> estimate_delta_incremental(const Model& m, const Dataset& d2,
                                                                        const std::vector<double>& fractions,
                                                                        std::size_t replicas,
                                                                        const TrainConfig& cfg,
                                                                        std::size_t epochs = 10) {
  std::vector<IncrementalDeltaEstimate> out;
  for (double f : fractions) {
    RetrainSpec spec;
    spec.mode = RetrainMode::Incremental;
    spec.fraction = f;
    spec.epochs = epochs;
    spec.replicas = replicas;
    spec.seed = cfg.seed;
    spec.validate();
    IncrementalDeltaEstimate e{f, 0.0, {}};
    for (std::size_t r = 0; r < replicas; ++r) {
      const Model tuned = retrain_one(m, Architecture{}, cfg, d2, d2, spec, r);
      e.per_replica.push_back(model_distance(m, tuned, INFINITY));
    }
    e.delta = std::accumulate(e.per_replica.begin(), e.per_replica.end(), 0.0) / static_cast<double>(replicas);
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<double> default_delta_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 60; ++k) g.push_back(0.005 * k);
  return g;
}

struct ValidationDeltaEstimate {
  double delta = 0.0;
  bool reached = false;
  std::vector<double> grid;
  std::vector<double> validity;  // per grid value, NaN when skipped
  std::vector<std::string> warnings;
};

// Smallest grid value whose robust CEs for the validation inputs are valid
// under every retrained model. `generate(delta, x, target)` returns the CE or
// nullopt; any failure skips that grid value. Stops at the first value that
// reaches full validity; if none does the grid maximum is returned with
// reached = false.
template <typename Generator>
ValidationDeltaEstimate estimate_delta_validation(const std::vector<Model>& retrained,
                                                  const std::vector<FeatureVector>& inputs,
                                                  const std::vector<Label>& targets, Generator&& generate,
                                                  const std::vector<double>& grid = default_delta_grid()) {
  if (retrained.empty()) throw std::invalid_argument("estimate_delta_validation: no retrained models");
  if (grid.empty()) throw std::invalid_argument("estimate_delta_validation: empty grid");
  if (inputs.size() != targets.size()) throw std::invalid_argument("inputs and targets differ in length");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) throw std::invalid_argument("delta grid must be ascending");
  }
  ValidationDeltaEstimate e;
  e.grid = grid;
  for (double delta : grid) {
    std::size_t valid = 0, total = 0;
    bool failed = false;
    for (std::size_t i = 0; i < inputs.size() && !failed; ++i) {
      const std::optional<FeatureVector> ce = generate(delta, inputs[i], targets[i]);
      if (!ce) {
        failed = true;
        break;
      }
      for (const Model& m : retrained) {
        valid += classify(m, *ce) == targets[i];
        ++total;
      }
    }
    if (failed) {
      e.validity.push_back(std::nan(""));
      e.warnings.push_back("no CE at delta " + std::to_string(delta) + "; skipped");
      continue;
    }
    const double v = total == 0 ? 1.0 : static_cast<double>(valid) / static_cast<double>(total);
    e.validity.push_back(v);
    if (v == 1.0) {
      e.delta = delta;
      e.reached = true;
      return e;
    }
  }
  e.delta = grid.back();
  return e;
}

}  // namespace rce

#endif  // RCE_TRAIN_HPP
