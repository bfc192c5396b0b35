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

#ifndef RCE_GENERATORS_HPP
#define RCE_GENERATORS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rce/encoding.hpp"
#include "rce/interval.hpp"
#include "rce/kdtree.hpp"
#include "rce/milp.hpp"
#include "rce/model.hpp"
#include "rce/train.hpp"
#include "rce/verifier.hpp"

namespace rce {

struct CounterfactualRecord {
  FeatureVector x;
  FeatureVector x_prime;  // empty when not found
  std::string method;
  Label target = 1;
  double distance = 0.0;  // normalized L1 to x
  bool found = false;
  bool robust = false;    // verifier verdict under `shift`
  ShiftSet shift;
  std::size_t iterations = 0;
  // MCE-R: margin per iteration. GCE-R: lambda per iteration.
  std::vector<double> trace;
  std::optional<std::size_t> training_index;
  bool robust_init = false;
  bool optimal = false;
};

struct GeneratorOptions {
  // Shift set used for the robust flag and by the robust methods.
  ShiftSet shift;
  // Search box for MCE/GCE; defaults to [0,1]^n widened to contain x.
  std::optional<FeatureBox> box;
  double margin = 0.0;
  std::size_t node_limit = 200'000;
  // GCE
  double lambda = 0.1;
  double step = 0.02;
  std::size_t gce_iters = 1000;
  // Iterative robustification
  std::size_t max_iters = 10;
  double margin_step = 0.1;
  // RNCE
  bool robust_init = false;
  bool optimal = false;
  double line_step = 0.05;
  VerifyOptions verify;
};

inline FeatureBox default_box(std::span<const double> x) {
  FeatureBox b = FeatureBox::unit(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    b.lo[i] = std::min(b.lo[i], x[i]);
    b.hi[i] = std::max(b.hi[i], x[i]);
  }
  return b;
}

// Signed margin of `target`: the logit (target 1) or minus the logit
// (target 0) for binary models, o_t - max_{c != t} o_c otherwise.
inline double target_score(std::span<const double> logits, Label target) {
  if (logits.size() == 1) return target == 1 ? logits[0] : -logits[0];
  double best = -INFINITY;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    if (static_cast<Label>(c) != target) best = std::max(best, logits[c]);
  }
  return logits[static_cast<std::size_t>(target)] - best;
}

namespace detail {

inline CounterfactualRecord start_record(std::span<const double> x, Label target, const char* method,
                                         const GeneratorOptions& opt) {
  CounterfactualRecord r;
  r.x.assign(x.begin(), x.end());
  r.method = method;
  r.target = target;
  r.shift = opt.shift;
  return r;
}

inline void set_result(CounterfactualRecord& r, const Model& model, FeatureVector xp, const GeneratorOptions& opt) {
  r.found = true;
  r.distance = l1_normalized(r.x, xp);
  r.x_prime = std::move(xp);
  r.robust = is_delta_robust(model, opt.shift, r.x_prime, r.target, opt.verify).robust;
}

inline void check_target(const Model& model, Label target) {
  if (target < 0 || static_cast<std::size_t>(target) >= model.num_classes()) {
    throw std::invalid_argument("target class out of range");
  }
}

}  // namespace detail

// Minimum normalized-L1 CE reaching the requested logit margin, solved
// exactly by branch and bound over the big-M encoding.
inline CounterfactualRecord mce(const Model& model, std::span<const double> x, Label target, double margin,
                                const GeneratorOptions& opt = {}) {
  detail::check_target(model, target);
  if (margin < 0.0) throw std::invalid_argument("mce: margin must be >= 0");
  CounterfactualRecord r = detail::start_record(x, target, "mce", opt);
  r.iterations = 1;
  const FeatureVector logits = model.forward(x);
  if (classify(model, x) == target && target_score(logits, target) >= margin + kValiditySlack) {
    detail::set_result(r, model, r.x, opt);
    return r;
  }
  const NearestCeEncoding enc = encode_nearest_ce(model, x, target, margin, opt.box ? *opt.box : default_box(x));
  BranchAndBoundOptions bb;
  bb.node_limit = opt.node_limit;
  const MilpResult res = branch_and_bound(enc.milp, bb);
  if (res.x.empty()) return r;
  FeatureVector xp;
  for (std::size_t v : enc.features) xp.push_back(res.x[v]);
  if (classify(model, xp) != target) return r;
  detail::set_result(r, model, std::move(xp), opt);
  return r;
}

// Proximal subgradient descent on hinge(margin - score) + lambda * d(x, x'),
// projected onto the search box. The L1 term is handled by soft-thresholding
// around x, so a large lambda keeps x' pinned to x. Returns the valid
// iterate with the lowest objective.
inline CounterfactualRecord gce(const Model& model, std::span<const double> x, Label target, double lambda,
                                double step, std::size_t max_iters, const GeneratorOptions& opt = {}) {
  detail::check_target(model, target);
  if (!(lambda >= 0.0) || !(step > 0.0)) throw std::invalid_argument("gce: need lambda >= 0 and step > 0");
  CounterfactualRecord r = detail::start_record(x, target, "gce", opt);
  if (classify(model, x) == target) {
    detail::set_result(r, model, r.x, opt);
    return r;
  }
  const FeatureBox box = opt.box ? *opt.box : default_box(x);
  const std::size_t n = x.size();
  const double shrink = step * lambda / static_cast<double>(n);
  FeatureVector cur(x.begin(), x.end());
  std::optional<FeatureVector> best;
  double best_obj = INFINITY;
  for (std::size_t it = 0; it < max_iters; ++it) {
    const ForwardTrace t = trace_forward(model, cur);
    const FeatureVector& z = t.logits();
    const double s = target_score(z, target);
    FeatureVector dz(z.size(), 0.0);
    if (opt.margin - s > 0.0) {
      // d(-score)/dz
      if (z.size() == 1) {
        dz[0] = target == 1 ? -1.0 : 1.0;
      } else {
        std::size_t rival = 0;
        double rv = -INFINITY;
        for (std::size_t c = 0; c < z.size(); ++c) {
          if (static_cast<Label>(c) != target && z[c] > rv) {
            rv = z[c];
            rival = c;
          }
        }
        dz[static_cast<std::size_t>(target)] = -1.0;
        dz[rival] = 1.0;
      }
    }
    const FeatureVector g = backprop(model, t, dz).input;
    for (std::size_t i = 0; i < n; ++i) {
      double u = cur[i] - step * g[i] - x[i];
      u = u > shrink ? u - shrink : (u < -shrink ? u + shrink : 0.0);
      cur[i] = std::clamp(x[i] + u, box.lo[i], box.hi[i]);
    }
    r.iterations = it + 1;
    if (classify(model, cur) != target) continue;
    const double obj = std::max(0.0, opt.margin - target_score(model.forward(cur), target)) +
                       lambda * l1_normalized(x, cur);
    if (obj < best_obj) {
      best_obj = obj;
      best = cur;
    }
  }
  if (best) detail::set_result(r, model, std::move(*best), opt);
  return r;
}

// Nearest training point (normalized L1) that the model assigns to target;
// equal distances go to the lowest index.
inline CounterfactualRecord nnce(const Model& model, const std::vector<FeatureVector>& data,
                                 std::span<const double> x, Label target, const GeneratorOptions& opt = {}) {
  detail::check_target(model, target);
  if (data.empty()) throw std::invalid_argument("nnce: empty dataset");
  CounterfactualRecord r = detail::start_record(x, target, "nnce", opt);
  std::optional<std::size_t> best;
  double best_d = INFINITY;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (classify(model, data[i]) != target) continue;
    const double d = l1_normalized(x, data[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  r.iterations = 1;
  if (best) {
    detail::set_result(r, model, data[*best], opt);
    r.training_index = best;
  }
  return r;
}

// Runs base(k) for k = 0, 1, ... until the returned CE is robust under
// `shift`, at most t times. After t non-robust CEs the last one is returned
// with robust = false. A base failure ends the loop: later iterations only
// ask for costlier CEs.
template <typename Base>
CounterfactualRecord iterative_robustify(Base&& base, const Model& model, const ShiftSet& shift, std::size_t t,
                                         const VerifyOptions& verify = {}) {
  if (t == 0) throw std::invalid_argument("iterative_robustify: need at least one iteration");
  std::optional<CounterfactualRecord> last;
  for (std::size_t k = 0; k < t; ++k) {
    CounterfactualRecord r = base(k);
    r.shift = shift;
    r.iterations = k + 1;
    if (!r.found) {
      if (!last) last = std::move(r);
      break;
    }
    r.robust = is_delta_robust(model, shift, r.x_prime, r.target, verify).robust;
    last = std::move(r);
    if (last->robust) break;
  }
  return *last;
}

// MCE-R: margin grows by margin_step per iteration, starting at opt.margin.
inline CounterfactualRecord mce_r(const Model& model, std::span<const double> x, Label target,
                                  const GeneratorOptions& opt = {}) {
  std::vector<double> trace;
  CounterfactualRecord r = iterative_robustify(
      [&](std::size_t k) {
        const double m = opt.margin + opt.margin_step * static_cast<double>(k);
        trace.push_back(m);
        return mce(model, x, target, m, opt);
      },
      model, opt.shift, opt.max_iters, opt.verify);
  if (r.iterations < trace.size()) trace.resize(r.iterations);
  r.method = "mce-r";
  r.trace = std::move(trace);
  return r;
}

// GCE-R: lambda halves per iteration and the hinge margin grows by
// margin_step, so later iterates are pushed deeper past the boundary.
inline CounterfactualRecord gce_r(const Model& model, std::span<const double> x, Label target,
                                  const GeneratorOptions& opt = {}) {
  std::vector<double> trace;
  CounterfactualRecord r = iterative_robustify(
      [&](std::size_t k) {
        GeneratorOptions o = opt;
        o.margin = opt.margin + opt.margin_step * static_cast<double>(k);
        const double lambda = opt.lambda / std::pow(2.0, static_cast<double>(k));
        trace.push_back(lambda);
        return gce(model, x, target, lambda, opt.step, opt.gce_iters, o);
      },
      model, opt.shift, opt.max_iters, opt.verify);
  if (r.iterations < trace.size()) trace.resize(r.iterations);
  r.method = "gce-r";
  r.trace = std::move(trace);
  return r;
}

// Indices of training points usable as CEs for `target`. With robust_init
// only points that pass the robustness test under `shift` are kept,
// otherwise the point classification decides.
inline std::vector<std::size_t> get_candidates(const Model& model, const std::vector<FeatureVector>& data,
                                               const ShiftSet& shift, Label target, bool robust_init,
                                               const VerifyOptions& verify = {}) {
  detail::check_target(model, target);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const bool keep = robust_init ? is_delta_robust(model, shift, data[i], target, verify).robust
                                  : classify(model, data[i]) == target;
    if (keep) out.push_back(i);
  }
  return out;
}

struct RobustSearchResult {
  bool found = false;
  FeatureVector x_prime;
  std::optional<std::size_t> tree_index;
  std::size_t robustness_checks = 0;
};

// Walks the tree's neighbours of x in order and takes the first one that
// `robust` accepts (every candidate is accepted when check_candidates is
// false). With `optimal`, a line search then tries a = 1 - k*s for
// k = 1, 2, ... while a > 0, interpolating a*x_nn + (1-a)*x between that
// neighbour and x, and keeps the last interpolant found robust.
template <typename Predicate>
RobustSearchResult get_robust_ce(const KdTree& tree, std::span<const double> x, Predicate&& robust,
                                 bool check_candidates, bool optimal, double step = 0.05) {
  if (!(step > 0.0 && step <= 1.0)) throw std::invalid_argument("line-search step must be in (0, 1]");
  RobustSearchResult res;
  auto it = tree.query(x);
  while (auto nb = it.next()) {
    const FeatureVector& p = tree.point(nb->index);
    if (check_candidates) {
      ++res.robustness_checks;
      if (!robust(std::span<const double>(p))) continue;
    }
    res.found = true;
    res.x_prime = p;
    res.tree_index = nb->index;
    break;
  }
  if (!res.found || !optimal) return res;
  const FeatureVector anchor = res.x_prime;
  FeatureVector line(x.size());
  for (std::size_t k = 1;; ++k) {
    const double a = 1.0 - static_cast<double>(k) * step;
    if (a <= 1e-12) break;
    for (std::size_t i = 0; i < x.size(); ++i) line[i] = a * anchor[i] + (1.0 - a) * x[i];
    ++res.robustness_checks;
    if (robust(std::span<const double>(line))) res.x_prime = line;
  }
  return res;
}

// Candidate set and tree for one (model, data, shift, target, robust_init)
// combination, reusable across queries.
class RnceIndex {
 public:
  RnceIndex(const Model& model, const std::vector<FeatureVector>& data, const ShiftSet& shift, Label target,
            bool robust_init, const VerifyOptions& verify = {})
      : model_(&model),
        shift_(shift),
        target_(target),
        robust_init_(robust_init),
        verify_(verify),
        candidates_(get_candidates(model, data, shift, target, robust_init, verify)),
        tree_(gather(data, candidates_)) {}

  const std::vector<std::size_t>& candidates() const { return candidates_; }
  const KdTree& tree() const { return tree_; }

  CounterfactualRecord query(std::span<const double> x, bool optimal, double step = 0.05) const {
    GeneratorOptions o;
    o.shift = shift_;
    CounterfactualRecord r = detail::start_record(x, target_, "rnce", o);
    r.robust_init = robust_init_;
    r.optimal = optimal;
    r.iterations = 1;
    auto pred = [&](std::span<const double> p) {
      return is_delta_robust(*model_, shift_, p, target_, verify_).robust;
    };
    const RobustSearchResult s = get_robust_ce(tree_, x, pred, !robust_init_, optimal, step);
    if (!s.found) return r;
    r.training_index = candidates_[*s.tree_index];
    r.found = true;
    r.distance = l1_normalized(r.x, s.x_prime);
    r.x_prime = s.x_prime;
    // Every returned point passed the verifier (or was a robust candidate).
    r.robust = true;
    return r;
  }

 private:
  static std::vector<FeatureVector> gather(const std::vector<FeatureVector>& data,
                                           const std::vector<std::size_t>& idx) {
    std::vector<FeatureVector> pts;
    pts.reserve(idx.size());
    for (std::size_t i : idx) pts.push_back(data[i]);
    return pts;
  }

  const Model* model_;
  ShiftSet shift_;
  Label target_;
  bool robust_init_;
  VerifyOptions verify_;
  std::vector<std::size_t> candidates_;
  KdTree tree_;
};

inline CounterfactualRecord rnce(const Model& model, const std::vector<FeatureVector>& data, std::span<const double> x,
                                 Label target, const GeneratorOptions& opt = {}) {
  if (data.empty()) throw std::invalid_argument("rnce: empty dataset");
  const RnceIndex index(model, data, opt.shift, target, opt.robust_init, opt.verify);
  return index.query(x, opt.optimal, opt.line_step);
}

enum class Method { Mce, MceR, Gce, GceR, Nnce, Rnce };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Mce: return "mce";
    case Method::MceR: return "mce-r";
    case Method::Gce: return "gce";
    case Method::GceR: return "gce-r";
    case Method::Nnce: return "nnce";
    case Method::Rnce: return "rnce";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::Mce, Method::MceR, Method::Gce, Method::GceR, Method::Nnce, Method::Rnce}) {
    if (s == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown method '" + s + "'");
}

inline bool needs_training_data(Method m) { return m == Method::Nnce || m == Method::Rnce; }

inline CounterfactualRecord generate(Method m, const Model& model, const std::vector<FeatureVector>& data,
                                     std::span<const double> x, Label target, const GeneratorOptions& opt) {
  switch (m) {
    case Method::Mce: return mce(model, x, target, opt.margin, opt);
    case Method::MceR: return mce_r(model, x, target, opt);
    case Method::Gce: return gce(model, x, target, opt.lambda, opt.step, opt.gce_iters, opt);
    case Method::GceR: return gce_r(model, x, target, opt);
    case Method::Nnce: return nnce(model, data, x, target, opt);
    case Method::Rnce: return rnce(model, data, x, target, opt);
  }
  throw std::logic_error("unknown method");
}

}  // namespace rce

#endif  // RCE_GENERATORS_HPP
