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

#ifndef RCE_INTERVAL_HPP
#define RCE_INTERVAL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rce/model.hpp"

namespace rce {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  constexpr Interval() = default;
  constexpr Interval(double l, double h) : lo(l), hi(h) {}
  static constexpr Interval point(double v) { return {v, v}; }

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
  bool contains(const Interval& o, double tol = 0.0) const {
    return o.lo >= lo - tol && o.hi <= hi + tol;
  }
  friend bool operator==(const Interval&, const Interval&) = default;
};

inline Interval operator+(const Interval& a, const Interval& b) { return {a.lo + b.lo, a.hi + b.hi}; }

inline Interval operator*(const Interval& a, const Interval& b) {
  const double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
  return {std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4})};
}

inline Interval relu(const Interval& a) { return {std::max(0.0, a.lo), std::max(0.0, a.hi)}; }

// The plausible-shift set: all parameter vectors within p-distance delta.
struct ShiftSet {
  double p = std::numeric_limits<double>::infinity();
  double delta = 0.0;

  ShiftSet() = default;
  ShiftSet(double norm_order, double magnitude) : p(norm_order), delta(magnitude) {
    if (!(magnitude >= 0.0) || !std::isfinite(magnitude)) {
      throw std::invalid_argument("shift magnitude must be finite and >= 0");
    }
    if (!(norm_order >= 0.0)) throw std::invalid_argument("norm order must be in [0, inf]");
  }
  static ShiftSet linf(double magnitude) {
    return ShiftSet(std::numeric_limits<double>::infinity(), magnitude);
  }
};

inline std::string norm_name(double p) {
  if (std::isinf(p)) return "inf";
  if (p == std::floor(p)) return std::to_string(static_cast<long long>(p));
  return std::to_string(p);
}

// Same architecture as the source model, every parameter (weights and
// biases that exist) replaced by [theta_i - delta, theta_i + delta]. Any
// p-norm ball of radius delta lies inside this box, so the norm order does
// not change the abstraction.
class IntervalModel {
 public:
  IntervalModel(Model center, double delta) : center_(std::move(center)), delta_(delta) {
    if (!(delta >= 0.0)) throw std::invalid_argument("delta must be >= 0");
  }

  const Model& center() const { return center_; }
  double delta() const { return delta_; }
  std::size_t input_dim() const { return center_.input_dim(); }
  std::size_t num_outputs() const { return center_.num_outputs(); }

  Interval weight(std::size_t layer, std::size_t row, std::size_t col) const {
    const double w = center_.layers()[layer].w(row, col);
    return {w - delta_, w + delta_};
  }
  std::optional<Interval> bias(std::size_t layer, std::size_t row) const {
    const Layer& l = center_.layers()[layer];
    if (!l.has_bias()) return std::nullopt;
    return Interval{l.bias[row] - delta_, l.bias[row] + delta_};
  }

  // Parameter intervals in flatten() order.
  std::vector<Interval> parameters() const {
    std::vector<Interval> out;
    for (double t : flatten(center_)) out.push_back({t - delta_, t + delta_});
    return out;
  }

  // Per-layer pre-activation enclosures for an input box. Entry i holds the
  // pre-activation of layer i (the last entry is the logit enclosure).
  std::vector<std::vector<Interval>> propagate(std::span<const Interval> input) const {
    if (input.size() != input_dim()) {
      throw std::invalid_argument("input has dimension " + std::to_string(input.size()) +
                                  ", model expects " + std::to_string(input_dim()));
    }
    const auto& layers = center_.layers();
    std::vector<std::vector<Interval>> pre;
    pre.reserve(layers.size());
    std::vector<Interval> cur(input.begin(), input.end());
    for (std::size_t li = 0; li < layers.size(); ++li) {
      const Layer& l = layers[li];
      std::vector<Interval> z(l.out);
      for (std::size_t r = 0; r < l.out; ++r) {
        Interval s = bias(li, r).value_or(Interval::point(0.0));
        for (std::size_t c = 0; c < l.in; ++c) s = s + weight(li, r, c) * cur[c];
        z[r] = s;
      }
      pre.push_back(z);
      if (li + 1 < layers.size()) {
        cur.resize(l.out);
        for (std::size_t r = 0; r < l.out; ++r) cur[r] = relu(z[r]);
      }
    }
    return pre;
  }

 private:
  Model center_;
  double delta_;
};

inline IntervalModel abstract(const Model& model, const ShiftSet& shift) {
  return IntervalModel(model, shift.delta);
}

inline std::vector<Interval> point_box(std::span<const double> x) {
  std::vector<Interval> box;
  box.reserve(x.size());
  for (double v : x) box.push_back(Interval::point(v));
  return box;
}

// Pre-squash logit enclosures for a concrete input.
inline std::vector<Interval> interval_forward(const IntervalModel& im, std::span<const double> x) {
  const auto box = point_box(x);
  return im.propagate(box).back();
}

struct IntervalVerdict {
  std::optional<Label> label;  // empty means undefined
  std::vector<Interval> logits;

  bool defined() const { return label.has_value(); }
  bool is(Label c) const { return label.has_value() && *label == c; }
};

inline IntervalVerdict interval_verdict_binary(std::vector<Interval> logits) {
  IntervalVerdict v{std::nullopt, std::move(logits)};
  const Interval& z = v.logits.front();
  if (z.lo >= 0.0) {
    v.label = 1;
  } else if (z.hi < 0.0) {
    v.label = 0;
  }
  return v;
}

// Class c wins iff its lower bound reaches every other class's upper bound.
inline IntervalVerdict interval_verdict_multi(std::vector<Interval> logits) {
  IntervalVerdict v{std::nullopt, std::move(logits)};
  for (std::size_t c = 0; c < v.logits.size() && !v.label; ++c) {
    bool dominates = true;
    for (std::size_t o = 0; o < v.logits.size(); ++o) {
      if (o != c && v.logits[c].lo < v.logits[o].hi) {
        dominates = false;
        break;
      }
    }
    if (dominates) v.label = static_cast<Label>(c);
  }
  return v;
}

inline IntervalVerdict interval_classify_binary(const IntervalModel& im, std::span<const double> x) {
  if (im.num_outputs() != 1) throw std::invalid_argument("binary verdict needs one logit");
  return interval_verdict_binary(interval_forward(im, x));
}

inline IntervalVerdict interval_classify_multi(const IntervalModel& im, std::span<const double> x) {
  if (im.num_outputs() < 2) throw std::invalid_argument("multi-class verdict needs >= 2 logits");
  return interval_verdict_multi(interval_forward(im, x));
}

inline IntervalVerdict interval_classify(const IntervalModel& im, std::span<const double> x) {
  return im.num_outputs() == 1 ? interval_classify_binary(im, x) : interval_classify_multi(im, x);
}

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline Interval sigmoid_interval(const Interval& z) { return {sigmoid(z.lo), sigmoid(z.hi)}; }

// Enclosure of softmax over a box of logits. Reporting only.
inline std::vector<Interval> softmax_interval(std::span<const Interval> logits) {
  if (logits.size() < 2) throw std::invalid_argument("softmax_interval needs >= 2 classes");
  double shift = -std::numeric_limits<double>::infinity();
  for (const auto& z : logits) shift = std::max(shift, z.hi);
  std::vector<Interval> out(logits.size());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    double rest_hi = 0.0, rest_lo = 0.0;
    for (std::size_t o = 0; o < logits.size(); ++o) {
      if (o == c) continue;
      rest_hi += std::exp(logits[o].hi - shift);
      rest_lo += std::exp(logits[o].lo - shift);
    }
    const double el = std::exp(logits[c].lo - shift);
    const double eh = std::exp(logits[c].hi - shift);
    out[c] = {el / (el + rest_hi), eh / (eh + rest_lo)};
  }
  return out;
}

}  // namespace rce

#endif  // RCE_INTERVAL_HPP
