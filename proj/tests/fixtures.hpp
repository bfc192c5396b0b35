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

// Shared fixtures: the worked toy models and random generators.

#ifndef RCE_TESTS_FIXTURES_HPP
#define RCE_TESTS_FIXTURES_HPP

#include <vector>

#include "rce/model.hpp"
#include "rce/rng.hpp"

namespace rce::testing {

// sigma(-x1 + x2), no intercept parameter.
inline Model toy_logistic() { return Model::logistic({-1.0, 1.0}, std::nullopt); }

// Two inputs, two ReLU units copying them, output h1 - h2. Zero biases are
// structurally absent unless with_bias is set.
inline Model toy_binary_net(bool with_bias = false) {
  std::vector<double> b1, b2;
  if (with_bias) {
    b1 = {0.0, 0.0};
    b2 = {0.0};
  }
  return Model::network({Layer::from_rows({{1, 0}, {0, 1}}, b1), Layer::from_rows({{1, -1}}, b2)});
}

// Three-class variant: logits h1 - h2, 0.5 h2, h2 - h1.
inline Model toy_three_class_net() {
  return Model::network(
      {Layer::from_rows({{1, 0}, {0, 1}}), Layer::from_rows({{1, -1}, {0, 0.5}, {-1, 1}})});
}

inline Model random_network(Rng& rng, std::size_t in, const std::vector<std::size_t>& hidden,
                            std::size_t out, bool with_bias = true, double scale = 1.0) {
  std::vector<Layer> layers;
  std::size_t prev = in;
  std::vector<std::size_t> dims = hidden;
  dims.push_back(out);
  for (std::size_t d : dims) {
    Layer l = Layer::zeros(d, prev, with_bias);
    for (double& w : l.weights) w = rng.uniform(-scale, scale);
    for (double& b : l.bias) b = rng.uniform(-0.5 * scale, 0.5 * scale);
    layers.push_back(std::move(l));
    prev = d;
  }
  return Model::network(std::move(layers));
}

inline FeatureVector random_point(Rng& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
  FeatureVector x(n);
  for (double& v : x) v = rng.uniform(lo, hi);
  return x;
}

// A concrete model drawn from the infinity-ball of radius delta; corners
// are drawn with probability corner_prob per coordinate.
inline Model random_shift(const Model& m, double delta, Rng& rng, double corner_prob = 0.5) {
  ParameterVector theta = flatten(m);
  for (double& t : theta) {
    if (rng.uniform() < corner_prob) {
      t += rng.uniform() < 0.5 ? -delta : delta;
    } else {
      t += rng.uniform(-delta, delta);
    }
  }
  return unflatten(m, theta);
}

}  // namespace rce::testing

#endif  // RCE_TESTS_FIXTURES_HPP
