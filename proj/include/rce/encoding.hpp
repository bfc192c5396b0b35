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

#ifndef RCE_ENCODING_HPP
#define RCE_ENCODING_HPP

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rce/interval.hpp"
#include "rce/milp.hpp"
#include "rce/model.hpp"

namespace rce {

// Safety factor applied to the interval-propagated node ranges.
inline constexpr double kBigMInflation = 1.5;

// Per hidden node: enclosure of the pre-activation value and the big-M
// constant derived from it.
struct BigMBounds {
  std::vector<std::vector<Interval>> pre_activation;
  std::vector<std::vector<double>> big_m;

  static BigMBounds from_propagation(const std::vector<std::vector<Interval>>& pre) {
    BigMBounds b;
    for (std::size_t li = 0; li + 1 < pre.size(); ++li) {
      b.pre_activation.push_back(pre[li]);
      std::vector<double> m;
      for (const Interval& z : pre[li]) {
        m.push_back(kBigMInflation * std::max(std::abs(z.lo), std::abs(z.hi)));
      }
      b.big_m.push_back(std::move(m));
    }
    return b;
  }
};

struct OutputBoundEncoding {
  MilpProblem milp;
  BigMBounds bigm;
  std::vector<std::size_t> outputs;  // variable index of each output node
  std::vector<std::vector<std::size_t>> hidden;
  std::vector<std::vector<std::size_t>> activation;  // binary xi: 1 = inactive
};

namespace detail {

// Adds the activation binary for a hidden node and fixes it when the
// interval bounds already decide the ReLU phase.
inline std::size_t add_activation(MilpProblem& milp, const Interval& z, const std::string& name) {
  const std::size_t xi = milp.add_binary(name);
  if (z.lo >= 0.0) {
    milp.lp.upper[xi] = 0.0;
  } else if (z.hi <= 0.0) {
    milp.lp.lower[xi] = 1.0;
  }
  return xi;
}

inline std::string node_name(const char* prefix, std::size_t layer, std::size_t j) {
  return std::string(prefix) + "_" + std::to_string(layer) + "_" + std::to_string(j);
}

}  // namespace detail

// Range of output node `cls` over the interval abstraction at a fixed input,
// with the big-M ReLU rows
//   v >= 0,  v <= M (1 - xi),
//   v <= sum (W + delta) v_prev + (B + delta) + M xi,
//   v >= sum (W - delta) v_prev + (B - delta),
// and output rows  sum (W - delta) v + (B - delta) <= out <= sum (W + delta) v + (B + delta).
// Hidden values are nonnegative; the fixed input may carry any sign, so the
// first layer uses W x +/- delta |x|, which is the same row for x >= 0.
inline OutputBoundEncoding encode_output_bound(const Model& model, std::span<const double> x,
                                               double delta, std::size_t cls, Sense direction) {
  if (x.size() != model.input_dim()) {
    throw std::invalid_argument("input has dimension " + std::to_string(x.size()) +
                                ", model expects " + std::to_string(model.input_dim()));
  }
  if (!(delta >= 0.0)) throw std::invalid_argument("delta must be >= 0");
  if (cls >= model.num_outputs()) throw std::invalid_argument("output index out of range");

  const IntervalModel im(model, delta);
  OutputBoundEncoding enc;
  enc.bigm = BigMBounds::from_propagation(im.propagate(point_box(x)));
  MilpProblem& milp = enc.milp;
  LinearProgram& lp = milp.lp;
  const auto& layers = model.layers();

  double abs_x = 0.0;
  for (double v : x) abs_x += std::abs(v);

  std::vector<std::size_t> prev;  // empty: previous layer is the fixed input
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const Layer& l = layers[li];
    const bool output_layer = li + 1 == layers.size();
    const double bias_shift = l.has_bias() ? delta : 0.0;
    std::vector<std::size_t> cur;
    std::vector<std::size_t> xis;
    for (std::size_t j = 0; j < l.out; ++j) {
      // Upper / lower affine expressions: coefficients on prev vars and constants.
      std::vector<Term> up_terms, lo_terms;
      double up_const = l.b(j) + bias_shift;
      double lo_const = l.b(j) - bias_shift;
      if (prev.empty()) {
        double wx = 0.0;
        for (std::size_t c = 0; c < l.in; ++c) wx += l.w(j, c) * x[c];
        up_const += wx + delta * abs_x;
        lo_const += wx - delta * abs_x;
      } else {
        for (std::size_t c = 0; c < l.in; ++c) {
          up_terms.push_back({prev[c], -(l.w(j, c) + delta)});
          lo_terms.push_back({prev[c], -(l.w(j, c) - delta)});
        }
      }

      if (output_layer) {
        const std::size_t o = lp.add_variable(-kInf, kInf, 0.0, detail::node_name("out", li, j));
        up_terms.push_back({o, 1.0});
        lo_terms.push_back({o, 1.0});
        lp.add_constraint(std::move(up_terms), Relation::LessEqual, up_const,
                          detail::node_name("out_ub", li, j));
        lp.add_constraint(std::move(lo_terms), Relation::GreaterEqual, lo_const,
                          detail::node_name("out_lb", li, j));
        cur.push_back(o);
        continue;
      }

      const Interval& z = enc.bigm.pre_activation[li][j];
      const double m = enc.bigm.big_m[li][j];
      const std::size_t v = lp.add_variable(0.0, kInf, 0.0, detail::node_name("v", li, j));
      const std::size_t xi = detail::add_activation(milp, z, detail::node_name("xi", li, j));
      lp.add_constraint({{v, 1.0}, {xi, m}}, Relation::LessEqual, m,
                        detail::node_name("off", li, j));
      up_terms.push_back({v, 1.0});
      up_terms.push_back({xi, -m});
      lp.add_constraint(std::move(up_terms), Relation::LessEqual, up_const,
                        detail::node_name("ub", li, j));
      lo_terms.push_back({v, 1.0});
      lp.add_constraint(std::move(lo_terms), Relation::GreaterEqual, lo_const,
                        detail::node_name("lb", li, j));
      cur.push_back(v);
      xis.push_back(xi);
    }
    if (output_layer) {
      enc.outputs = cur;
    } else {
      enc.hidden.push_back(cur);
      enc.activation.push_back(xis);
    }
    prev = std::move(cur);
  }
  lp.objective[enc.outputs[cls]] = 1.0;
  lp.sense = direction;
  return enc;
}

struct FeatureBox {
  std::vector<double> lo;
  std::vector<double> hi;

  static FeatureBox unit(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)}; }
  static FeatureBox uniform(std::size_t n, double lo, double hi) {
    return {std::vector<double>(n, lo), std::vector<double>(n, hi)};
  }
};

struct NearestCeEncoding {
  MilpProblem milp;
  BigMBounds bigm;
  std::vector<std::size_t> features;
  std::vector<std::size_t> outputs;
};

// Slack added to strict validity conditions (target 0 in the binary case,
// ties the argmax rule would lose in the multi-class case) and to the
// margin itself so that LP round-off cannot land on the wrong side.
inline constexpr double kValiditySlack = 1e-8;

// min (1/n) sum |x'_i - x_i| over the feature box subject to the model
// assigning `target` with the requested logit margin. Exact ReLU big-M rows.
inline NearestCeEncoding encode_nearest_ce(const Model& model, std::span<const double> x, Label target,
                                           double margin, const FeatureBox& box,
                                           double slack = kValiditySlack) {
  const std::size_t n = model.input_dim();
  if (x.size() != n) throw std::invalid_argument("input dimension mismatch");
  if (box.lo.size() != n || box.hi.size() != n) throw std::invalid_argument("feature box dimension mismatch");
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw std::invalid_argument("margin must be finite and >= 0");
  if (target < 0 || static_cast<std::size_t>(target) >= model.num_classes()) {
    throw std::invalid_argument("target class out of range");
  }

  NearestCeEncoding enc;
  LinearProgram& lp = enc.milp.lp;
  std::vector<Interval> in_box;
  for (std::size_t i = 0; i < n; ++i) {
    enc.features.push_back(lp.add_variable(box.lo[i], box.hi[i], 0.0, "x_" + std::to_string(i)));
    in_box.push_back({box.lo[i], box.hi[i]});
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t t = lp.add_variable(0.0, kInf, 1.0 / static_cast<double>(n), "t_" + std::to_string(i));
    lp.add_constraint({{t, 1.0}, {enc.features[i], -1.0}}, Relation::GreaterEqual, -x[i]);
    lp.add_constraint({{t, 1.0}, {enc.features[i], 1.0}}, Relation::GreaterEqual, x[i]);
  }

  const IntervalModel im(model, 0.0);
  enc.bigm = BigMBounds::from_propagation(im.propagate(in_box));
  const auto& layers = model.layers();
  std::vector<std::size_t> prev = enc.features;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const Layer& l = layers[li];
    const bool output_layer = li + 1 == layers.size();
    std::vector<std::size_t> cur;
    for (std::size_t j = 0; j < l.out; ++j) {
      std::vector<Term> z;
      for (std::size_t c = 0; c < l.in; ++c) {
        if (l.w(j, c) != 0.0) z.push_back({prev[c], -l.w(j, c)});
      }
      if (output_layer) {
        const std::size_t o = lp.add_variable(-kInf, kInf, 0.0, detail::node_name("out", li, j));
        z.push_back({o, 1.0});
        lp.add_constraint(std::move(z), Relation::Equal, l.b(j), detail::node_name("logit", li, j));
        cur.push_back(o);
        continue;
      }
      const Interval& zb = enc.bigm.pre_activation[li][j];
      const double m = enc.bigm.big_m[li][j];
      const std::size_t v = lp.add_variable(0.0, kInf, 0.0, detail::node_name("v", li, j));
      const std::size_t xi = detail::add_activation(enc.milp, zb, detail::node_name("xi", li, j));
      lp.add_constraint({{v, 1.0}, {xi, m}}, Relation::LessEqual, m, detail::node_name("off", li, j));
      auto up = z;
      up.push_back({v, 1.0});
      up.push_back({xi, -m});
      lp.add_constraint(std::move(up), Relation::LessEqual, l.b(j), detail::node_name("ub", li, j));
      z.push_back({v, 1.0});
      lp.add_constraint(std::move(z), Relation::GreaterEqual, l.b(j), detail::node_name("lb", li, j));
      cur.push_back(v);
    }
    prev = std::move(cur);
  }
  enc.outputs = prev;

  if (model.is_binary()) {
    if (target == 1) {
      lp.add_constraint({{enc.outputs[0], 1.0}}, Relation::GreaterEqual, margin + slack, "valid");
    } else {
      lp.add_constraint({{enc.outputs[0], 1.0}}, Relation::LessEqual, -margin - slack, "valid");
    }
  } else {
    for (std::size_t c = 0; c < enc.outputs.size(); ++c) {
      if (static_cast<Label>(c) == target) continue;
      lp.add_constraint({{enc.outputs[target], 1.0}, {enc.outputs[c], -1.0}}, Relation::GreaterEqual,
                        margin + slack, "valid_" + std::to_string(c));
    }
  }
  lp.sense = Sense::Minimize;
  return enc;
}

}  // namespace rce

#endif  // RCE_ENCODING_HPP
