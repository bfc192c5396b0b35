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

#ifndef RCE_VERIFIER_HPP
#define RCE_VERIFIER_HPP

#include <chrono>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rce/encoding.hpp"
#include "rce/interval.hpp"
#include "rce/milp.hpp"
#include "rce/model.hpp"

namespace rce {

struct VerifyOptions {
  std::size_t node_limit = 1'000'000;
  // Solve every output range to optimality instead of stopping once the
  // verdict is decided. Needed only when the bounds themselves are reported.
  bool exact_bounds = false;
  // Skip the MILP whenever plain interval propagation already proves the
  // verdict (the MILP range is never wider).
  bool interval_shortcut = true;
};

struct RobustnessVerdict {
  bool robust = false;
  std::optional<bool> strictly_robust;
  // Solver gave up at the node limit; robust is false but nothing was proven.
  bool unresolved = false;
  Label target = 1;
  // Sound logit enclosures, one per output node. Sides that were solved by
  // the MILP carry its bound, the rest come from interval propagation.
  std::vector<Interval> bounds;
  std::size_t nodes_explored = 0;
  double wall_ms = 0.0;
};

struct OutputBound {
  double value = 0.0;
  bool unresolved = false;
  std::size_t nodes = 0;
};

// Lower (Minimize) or upper (Maximize) bound of output `cls` over the
// interval abstraction at x. Single-layer models are solved in closed form,
// since each parameter appears once and interval propagation is exact there.
// With a threshold the search may stop as soon as the side of the threshold
// is known; the returned value is then a sound bound, not the optimum.
inline OutputBound output_bound(const Model& model, std::span<const double> x, double delta,
                                std::size_t cls, Sense direction,
                                std::optional<double> threshold = std::nullopt,
                                std::size_t node_limit = 1'000'000) {
  if (model.layers().size() == 1) {
    const Interval z = interval_forward(IntervalModel(model, delta), x)[cls];
    return {direction == Sense::Minimize ? z.lo : z.hi, false, 0};
  }
  const OutputBoundEncoding enc = encode_output_bound(model, x, delta, cls, direction);
  BranchAndBoundOptions opt;
  opt.node_limit = node_limit;
  opt.decision_threshold = threshold;
  const MilpResult r = branch_and_bound(enc.milp, opt);
  if (r.status == SolveStatus::NodeLimit) return {r.bound, true, r.nodes};
  if (r.status != SolveStatus::Optimal) {
    throw std::runtime_error(std::string("output bound problem ended ") + to_string(r.status));
  }
  return {threshold ? r.bound : r.objective, false, r.nodes};
}

namespace detail {

inline bool dominates(const std::vector<Interval>& b, Label target, bool binary) {
  if (binary) return target == 1 ? b[0].lo >= 0.0 : b[0].hi < 0.0;
  for (std::size_t c = 0; c < b.size(); ++c) {
    if (static_cast<Label>(c) != target && b[target].lo < b[c].hi) return false;
  }
  return true;
}

}  // namespace detail

// Does every model in the interval abstraction assign `target` to x_prime?
// Binary: target 1 needs the logit lower bound >= 0, target 0 needs the
// upper bound < 0. Multi-class: the target lower bound must reach the upper
// bound of every other class, one MILP per output node.
inline RobustnessVerdict is_delta_robust(const Model& model, const ShiftSet& shift,
                                         std::span<const double> x_prime, Label target,
                                         const VerifyOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  const bool binary = model.is_binary();
  if (target < 0 || static_cast<std::size_t>(target) >= model.num_classes()) {
    throw std::invalid_argument("target class out of range");
  }
  RobustnessVerdict v;
  v.target = target;
  v.bounds = interval_forward(IntervalModel(model, shift.delta), x_prime);
  const bool single_layer = model.layers().size() == 1;

  auto finish = [&]() {
    v.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return v;
  };

  if (single_layer || (opt.interval_shortcut && !opt.exact_bounds && detail::dominates(v.bounds, target, binary))) {
    v.robust = detail::dominates(v.bounds, target, binary);
    return finish();
  }

  auto solve = [&](std::size_t cls, Sense dir, std::optional<double> thr) {
    const OutputBound b = output_bound(model, x_prime, shift.delta, cls, dir,
                                       opt.exact_bounds ? std::nullopt : thr, opt.node_limit);
    v.nodes_explored += b.nodes;
    v.unresolved = v.unresolved || b.unresolved;
    if (dir == Sense::Minimize) {
      v.bounds[cls].lo = std::max(v.bounds[cls].lo, b.value);
    } else {
      v.bounds[cls].hi = std::min(v.bounds[cls].hi, b.value);
    }
  };

  if (binary) {
    if (target == 1) {
      solve(0, Sense::Minimize, 0.0);
    } else {
      solve(0, Sense::Maximize, 0.0);
    }
    if (opt.exact_bounds) solve(0, target == 1 ? Sense::Maximize : Sense::Minimize, std::nullopt);
  } else {
    solve(static_cast<std::size_t>(target), Sense::Minimize, std::nullopt);
    const double target_lo = v.bounds[target].lo;
    for (std::size_t c = 0; c < model.num_outputs(); ++c) {
      if (static_cast<Label>(c) == target) continue;
      if (!opt.exact_bounds && v.bounds[c].hi <= target_lo) continue;
      solve(c, Sense::Maximize, target_lo);
      if (!opt.exact_bounds && v.bounds[c].hi > target_lo && !v.unresolved) break;
    }
    if (opt.exact_bounds) solve(static_cast<std::size_t>(target), Sense::Maximize, std::nullopt);
  }
  v.robust = !v.unresolved && detail::dominates(v.bounds, target, binary);
  return finish();
}

inline RobustnessVerdict is_delta_robust_binary(const Model& model, const ShiftSet& shift,
                                                std::span<const double> x_prime,
                                                const VerifyOptions& opt = {}) {
  if (!model.is_binary()) throw std::invalid_argument("binary robustness test needs one logit");
  return is_delta_robust(model, shift, x_prime, 1, opt);
}

inline RobustnessVerdict is_delta_robust_multi(const Model& model, const ShiftSet& shift,
                                               std::span<const double> x_prime, Label target,
                                               const VerifyOptions& opt = {}) {
  if (model.num_outputs() < 2) throw std::invalid_argument("multi-class robustness test needs >= 2 logits");
  return is_delta_robust(model, shift, x_prime, target, opt);
}

// The abstraction still assigns x its point-model class.
inline bool is_sound(const Model& model, const ShiftSet& shift, std::span<const double> x,
                     const VerifyOptions& opt = {}) {
  return is_delta_robust(model, shift, x, classify(model, x), opt).robust;
}

// Robustness plus soundness of the shift set for the original input.
inline RobustnessVerdict is_strictly_delta_robust(const Model& model, const ShiftSet& shift,
                                                  std::span<const double> x,
                                                  std::span<const double> x_prime, Label target,
                                                  const VerifyOptions& opt = {}) {
  RobustnessVerdict v = is_delta_robust(model, shift, x_prime, target, opt);
  v.strictly_robust = v.robust && is_sound(model, shift, x, opt);
  return v;
}

// Fraction of CEs in the batch that pass the robustness test for their target.
inline double delta_validity(const Model& model, const ShiftSet& shift,
                             const std::vector<FeatureVector>& ces, const std::vector<Label>& targets,
                             const VerifyOptions& opt = {}) {
  if (ces.empty()) throw std::invalid_argument("delta_validity needs a nonempty batch");
  if (ces.size() != targets.size()) throw std::invalid_argument("one target per CE required");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < ces.size(); ++i) {
    if (is_delta_robust(model, shift, ces[i], targets[i], opt).robust) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(ces.size());
}

}  // namespace rce

#endif  // RCE_VERIFIER_HPP
