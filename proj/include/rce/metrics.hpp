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

#ifndef RCE_METRICS_HPP
#define RCE_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "rce/kdtree.hpp"
#include "rce/model.hpp"

namespace rce {

inline constexpr std::size_t kDefaultLofNeighbours = 20;

// Local outlier factor of `point` against a fixed reference set, Euclidean
// distance, exactly k neighbours (ties by index). A reference point's own
// neighbourhood excludes itself; the query point is never part of the
// reference, even if it coincides with a member. A small constant keeps the
// reachability density finite when reach-distances vanish.
class LofModel {
 public:
  LofModel(std::vector<FeatureVector> reference, std::size_t k = kDefaultLofNeighbours)
      : tree_(std::move(reference), Metric::L2), k_(k) {
    if (k_ == 0) throw std::invalid_argument("lof: k must be >= 1");
    if (tree_.size() <= k_) throw std::invalid_argument("lof: reference set must hold more than k points");
    kdist_.resize(tree_.size());
    lrd_.resize(tree_.size());
    std::vector<std::vector<Neighbour>> nbrs(tree_.size());
    for (std::size_t i = 0; i < tree_.size(); ++i) {
      nbrs[i] = neighbours(tree_.point(i), i);
      kdist_[i] = nbrs[i].back().distance;
    }
    for (std::size_t i = 0; i < tree_.size(); ++i) lrd_[i] = density(nbrs[i]);
  }

  std::size_t k() const { return k_; }

  double score(std::span<const double> p) const {
    const std::vector<Neighbour> nb = neighbours(p, tree_.size());
    const double lrd_p = density(nb);
    double s = 0.0;
    for (const Neighbour& n : nb) s += lrd_[n.index];
    return s / (static_cast<double>(nb.size()) * lrd_p);
  }

 private:
  static constexpr double kEps = 1e-10;

  std::vector<Neighbour> neighbours(std::span<const double> p, std::size_t skip) const {
    std::vector<Neighbour> out;
    auto it = tree_.query(p);
    while (out.size() < k_) {
      const auto n = it.next();
      if (!n) break;
      if (n->index != skip) out.push_back(*n);
    }
    return out;
  }

  double density(const std::vector<Neighbour>& nb) const {
    double reach = 0.0;
    for (const Neighbour& n : nb) reach += std::max(kdist_[n.index], n.distance);
    return 1.0 / (reach / static_cast<double>(nb.size()) + kEps);
  }

  KdTree tree_;
  std::size_t k_;
  std::vector<double> kdist_;
  std::vector<double> lrd_;
};

inline double lof_score(std::span<const double> point, const std::vector<FeatureVector>& reference,
                        std::size_t k = kDefaultLofNeighbours) {
  return LofModel(reference, k).score(point);
}

// Share of (CE, model) pairs where the model assigns the CE's target.
inline double validity_after_retraining(const std::vector<FeatureVector>& ces, const std::vector<Label>& targets,
                                        const std::vector<Model>& models) {
  if (ces.empty() || models.empty()) throw std::invalid_argument("validity_after_retraining: empty input");
  if (ces.size() != targets.size()) throw std::invalid_argument("validity_after_retraining: length mismatch");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < ces.size(); ++i) {
    for (const Model& m : models) ok += classify(m, ces[i]) == targets[i];
  }
  return static_cast<double>(ok) / static_cast<double>(ces.size() * models.size());
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t n = 0;
};

// NaN entries (no data for that seed) are skipped.
inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd r;
  double s = 0.0;
  for (double x : v) {
    if (std::isnan(x)) continue;
    s += x;
    ++r.n;
  }
  if (r.n == 0) return {std::nan(""), std::nan(""), 0};
  r.mean = s / static_cast<double>(r.n);
  double ss = 0.0;
  for (double x : v) {
    if (!std::isnan(x)) ss += (x - r.mean) * (x - r.mean);
  }
  r.std = std::sqrt(ss / static_cast<double>(r.n));
  return r;
}

}  // namespace rce

#endif  // RCE_METRICS_HPP
