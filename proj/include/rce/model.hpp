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

#ifndef RCE_MODEL_HPP
#define RCE_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rce {

using FeatureVector = std::vector<double>;
using ParameterVector = std::vector<double>;

// Class indices are zero based throughout. Binary models use labels {0, 1};
// an l-class model uses {0, ..., l-1}.
using Label = int;

enum class ModelType { Logistic, ReluNetwork };

inline const char* to_string(ModelType t) {
  return t == ModelType::Logistic ? "logistic" : "relu_network";
}

// Dense affine layer, weights stored row-major with shape out x in. An empty
// bias vector means the layer has no bias parameters at all (they do not
// appear in the flattened parameter vector and are never shifted).
struct Layer {
  std::size_t out = 0;
  std::size_t in = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  Layer() = default;
  Layer(std::size_t out_dim, std::size_t in_dim, std::vector<double> w,
        std::vector<double> b = {})
      : out(out_dim), in(in_dim), weights(std::move(w)), bias(std::move(b)) {}

  // Zero-initialized layer; with_bias controls whether bias parameters exist.
  static Layer zeros(std::size_t out_dim, std::size_t in_dim, bool with_bias = true) {
    return Layer(out_dim, in_dim, std::vector<double>(out_dim * in_dim, 0.0),
                 with_bias ? std::vector<double>(out_dim, 0.0) : std::vector<double>{});
  }

  static Layer from_rows(const std::vector<std::vector<double>>& rows,
                         std::vector<double> b = {}) {
    if (rows.empty()) throw std::invalid_argument("layer needs at least one row");
    Layer l;
    l.out = rows.size();
    l.in = rows.front().size();
    for (const auto& r : rows) {
      if (r.size() != l.in) throw std::invalid_argument("ragged weight matrix");
      l.weights.insert(l.weights.end(), r.begin(), r.end());
    }
    l.bias = std::move(b);
    return l;
  }

  bool has_bias() const { return !bias.empty(); }
  double w(std::size_t row, std::size_t col) const { return weights[row * in + col]; }
  double& w(std::size_t row, std::size_t col) { return weights[row * in + col]; }
  double b(std::size_t row) const { return bias.empty() ? 0.0 : bias[row]; }
  std::size_t parameter_count() const { return weights.size() + bias.size(); }
};

// A logistic-regression or fully connected ReLU classifier. The last layer
// produces raw logits: one logit means a binary model with sigmoid semantics,
// l >= 2 logits mean softmax over l classes. Hidden layers apply ReLU.
// Instances are immutable once constructed.
class Model {
 public:
  Model() = default;

  Model(ModelType type, std::vector<Layer> layers) : type_(type), layers_(std::move(layers)) {
    validate();
  }

  // Binary logistic model sigma(w.x + b). Passing no bias gives sigma(w.x).
  static Model logistic(std::vector<double> weights, std::optional<double> bias = 0.0) {
    const std::size_t n = weights.size();
    std::vector<double> b;
    if (bias) b.push_back(*bias);
    return Model(ModelType::Logistic, {Layer(1, n, std::move(weights), std::move(b))});
  }

  static Model network(std::vector<Layer> layers) {
    return Model(ModelType::ReluNetwork, std::move(layers));
  }

  ModelType type() const { return type_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::size_t input_dim() const { return layers_.front().in; }
  std::size_t num_outputs() const { return layers_.back().out; }
  std::size_t num_classes() const { return num_outputs() == 1 ? 2 : num_outputs(); }
  bool is_binary() const { return num_outputs() == 1; }
  std::size_t hidden_layer_count() const { return layers_.size() - 1; }

  std::size_t parameter_count() const {
    std::size_t d = 0;
    for (const auto& l : layers_) d += l.parameter_count();
    return d;
  }

  std::size_t hidden_node_count() const {
    std::size_t k = 0;
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i) k += layers_[i].out;
    return k;
  }

  // Raw pre-squash logits.
  std::vector<double> forward(std::span<const double> x) const {
    if (x.size() != input_dim()) {
      throw std::invalid_argument("input has dimension " + std::to_string(x.size()) +
                                  ", model expects " + std::to_string(input_dim()));
    }
    std::vector<double> cur(x.begin(), x.end());
    std::vector<double> next;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const Layer& l = layers_[li];
      next.assign(l.out, 0.0);
      for (std::size_t r = 0; r < l.out; ++r) {
        double s = l.b(r);
        for (std::size_t c = 0; c < l.in; ++c) s += l.w(r, c) * cur[c];
        next[r] = (li + 1 < layers_.size()) ? std::max(0.0, s) : s;
      }
      cur.swap(next);
    }
    return cur;
  }

  double logit(std::span<const double> x) const {
    if (!is_binary()) throw std::invalid_argument("logit() needs a single-output model");
    return forward(x)[0];
  }

 private:
  void validate() const {
    if (layers_.empty()) throw std::invalid_argument("model needs at least one layer");
    if (type_ == ModelType::Logistic && layers_.size() != 1) {
      throw std::invalid_argument("logistic model must have exactly one layer");
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const Layer& l = layers_[i];
      if (l.out == 0 || l.in == 0) throw std::invalid_argument("empty layer");
      if (l.weights.size() != l.out * l.in) {
        throw std::invalid_argument("layer " + std::to_string(i) + " weight count mismatch");
      }
      if (!l.bias.empty() && l.bias.size() != l.out) {
        throw std::invalid_argument("layer " + std::to_string(i) + " bias length mismatch");
      }
      if (i > 0 && l.in != layers_[i - 1].out) {
        throw std::invalid_argument("layer " + std::to_string(i) +
                                    " input size does not chain with previous layer");
      }
      auto finite = [](double v) { return std::isfinite(v); };
      if (!std::all_of(l.weights.begin(), l.weights.end(), finite) ||
          !std::all_of(l.bias.begin(), l.bias.end(), finite)) {
        throw std::invalid_argument("non-finite parameter in layer " + std::to_string(i));
      }
    }
  }

  ModelType type_ = ModelType::Logistic;
  std::vector<Layer> layers_;
};

// Class 1 iff logit >= 0, i.e. sigmoid >= 0.5.
inline Label classify_binary(const Model& m, std::span<const double> x) {
  if (!m.is_binary()) throw std::invalid_argument("classify_binary needs a single-logit model");
  return m.forward(x)[0] >= 0.0 ? 1 : 0;
}

// Argmax over logits; ties go to the lowest class index.
inline Label argmax_logit(std::span<const double> logits) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < logits.size(); ++c) {
    if (logits[c] > logits[best]) best = c;
  }
  return static_cast<Label>(best);
}

inline Label classify_multi(const Model& m, std::span<const double> x) {
  if (m.num_outputs() < 2) throw std::invalid_argument("classify_multi needs >= 2 logits");
  return argmax_logit(m.forward(x));
}

inline Label classify(const Model& m, std::span<const double> x) {
  return m.is_binary() ? classify_binary(m, x) : classify_multi(m, x);
}

// Norm order; +infinity selects the max norm, 0 counts differing entries.
inline double p_distance(std::span<const double> a, std::span<const double> b, double p) {
  if (a.size() != b.size()) throw std::invalid_argument("p_distance: length mismatch");
  if (!(p >= 0.0)) throw std::invalid_argument("p_distance: p must be in [0, inf]");
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
  }
  if (p == 0.0) {
    double cnt = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) cnt += (a[i] != b[i]) ? 1.0 : 0.0;
    return cnt;
  }
  if (p == 1.0) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
  }
  if (p == 2.0) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::pow(std::abs(a[i] - b[i]), p);
  return std::pow(s, 1.0 / p);
}

// [vec(W1) vec(B1) ... vec(Wk+1) vec(Bk+1)], where vec() stacks columns.
inline ParameterVector flatten(const Model& m) {
  ParameterVector theta;
  theta.reserve(m.parameter_count());
  for (const Layer& l : m.layers()) {
    for (std::size_t c = 0; c < l.in; ++c) {
      for (std::size_t r = 0; r < l.out; ++r) theta.push_back(l.w(r, c));
    }
    theta.insert(theta.end(), l.bias.begin(), l.bias.end());
  }
  return theta;
}

inline Model unflatten(const Model& tmpl, std::span<const double> theta) {
  if (theta.size() != tmpl.parameter_count()) {
    throw std::invalid_argument("unflatten: expected " + std::to_string(tmpl.parameter_count()) +
                                " parameters, got " + std::to_string(theta.size()));
  }
  std::vector<Layer> layers = tmpl.layers();
  std::size_t k = 0;
  for (Layer& l : layers) {
    for (std::size_t c = 0; c < l.in; ++c) {
      for (std::size_t r = 0; r < l.out; ++r) l.w(r, c) = theta[k++];
    }
    for (double& b : l.bias) b = theta[k++];
  }
  return Model(tmpl.type(), std::move(layers));
}

inline double model_distance(const Model& a, const Model& b, double p) {
  return p_distance(flatten(a), flatten(b), p);
}

}  // namespace rce

#endif  // RCE_MODEL_HPP
