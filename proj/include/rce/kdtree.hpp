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

#ifndef RCE_KDTREE_HPP
#define RCE_KDTREE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

#include "rce/model.hpp"

namespace rce {

enum class Metric { L1, L2, Linf };

// L1 is divided by the feature count so that it reads as the normalized
// distance used for counterfactual cost.
inline double metric_distance(std::span<const double> a, std::span<const double> b, Metric m) {
  if (a.size() != b.size()) throw std::invalid_argument("metric_distance: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    switch (m) {
      case Metric::L1: acc += d; break;
      case Metric::L2: acc += d * d; break;
      case Metric::Linf: acc = std::max(acc, d); break;
    }
  }
  if (m == Metric::L1) return a.empty() ? 0.0 : acc / static_cast<double>(a.size());
  if (m == Metric::L2) return std::sqrt(acc);
  return acc;
}

// (1/n) sum |a_i - b_i|
inline double l1_normalized(std::span<const double> a, std::span<const double> b) {
  return metric_distance(a, b, Metric::L1);
}

struct Neighbour {
  std::size_t index = 0;
  double distance = 0.0;
};

// Static k-d tree over a point set. Queries are incremental: a NeighbourQuery
// hands out points in non-decreasing distance, each exactly once, equal
// distances in increasing index order. The tree is read-only after
// construction, so concurrent queries are safe.
class KdTree {
 public:
  static constexpr std::size_t kLeafSize = 8;

  explicit KdTree(std::vector<FeatureVector> points, Metric metric = Metric::L1)
      : points_(std::move(points)), metric_(metric) {
    if (!points_.empty()) {
      dim_ = points_.front().size();
      for (const auto& p : points_) {
        if (p.size() != dim_) throw std::invalid_argument("KdTree: ragged point set");
      }
    }
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!points_.empty()) build(0, points_.size());
  }

  std::size_t size() const { return points_.size(); }
  std::size_t dim() const { return dim_; }
  Metric metric() const { return metric_; }
  const FeatureVector& point(std::size_t i) const { return points_[i]; }

  class NeighbourQuery {
   public:
    NeighbourQuery(const KdTree& tree, std::span<const double> q) : tree_(&tree), q_(q.begin(), q.end()) {
      if (!tree.points_.empty()) {
        if (q.size() != tree.dim_) throw std::invalid_argument("KdTree query: dimension mismatch");
        heap_.push({tree.box_distance(0, q_), false, 0});
      }
    }

    std::optional<Neighbour> next() {
      while (!heap_.empty()) {
        const Entry e = heap_.top();
        heap_.pop();
        if (e.is_point) return Neighbour{e.id, e.key};
        const Node& n = tree_->nodes_[e.id];
        if (n.left < 0) {
          for (std::size_t k = n.begin; k < n.end; ++k) {
            const std::size_t idx = tree_->order_[k];
            heap_.push({metric_distance(q_, tree_->points_[idx], tree_->metric_), true, idx});
          }
        } else {
          for (int c : {n.left, n.right}) {
            heap_.push({tree_->box_distance(static_cast<std::size_t>(c), q_), false, static_cast<std::size_t>(c)});
          }
        }
      }
      return std::nullopt;
    }

   private:
    struct Entry {
      double key;
      bool is_point;
      std::size_t id;
    };
    // Min-heap on (key, nodes before points, id). Expanding every node whose
    // box bound ties a point's distance first is what makes equal-distance
    // points come out in index order.
    struct Later {
      bool operator()(const Entry& a, const Entry& b) const {
        if (a.key != b.key) return a.key > b.key;
        if (a.is_point != b.is_point) return a.is_point;
        return a.id > b.id;
      }
    };
    const KdTree* tree_;
    FeatureVector q_;
    std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  };

  NeighbourQuery query(std::span<const double> q) const { return NeighbourQuery(*this, q); }

  std::vector<Neighbour> nearest(std::span<const double> q, std::size_t k) const {
    std::vector<Neighbour> out;
    NeighbourQuery it = query(q);
    while (out.size() < k) {
      auto n = it.next();
      if (!n) break;
      out.push_back(*n);
    }
    return out;
  }

 private:
  struct Node {
    std::size_t begin, end;
    int left = -1, right = -1;
    FeatureVector lo, hi;
  };

  int build(std::size_t begin, std::size_t end) {
    Node n{begin, end, -1, -1, FeatureVector(dim_, INFINITY), FeatureVector(dim_, -INFINITY)};
    for (std::size_t k = begin; k < end; ++k) {
      const FeatureVector& p = points_[order_[k]];
      for (std::size_t d = 0; d < dim_; ++d) {
        n.lo[d] = std::min(n.lo[d], p[d]);
        n.hi[d] = std::max(n.hi[d], p[d]);
      }
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(n);
    if (end - begin <= kLeafSize) return id;
    std::size_t axis = 0;
    for (std::size_t d = 1; d < dim_; ++d) {
      if (n.hi[d] - n.lo[d] > n.hi[axis] - n.lo[axis]) axis = d;
    }
    if (n.hi[axis] == n.lo[axis]) return id;  // all points coincide
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                       if (points_[a][axis] != points_[b][axis]) return points_[a][axis] < points_[b][axis];
                       return a < b;
                     });
    const int l = build(begin, mid);
    const int r = build(mid, end);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  // Distance from q to the node's bounding box; never exceeds the distance to
  // any point inside it.
  double box_distance(std::size_t node, std::span<const double> q) const {
    const Node& n = nodes_[node];
    FeatureVector nearest(dim_);
    for (std::size_t d = 0; d < dim_; ++d) nearest[d] = std::clamp(q[d], n.lo[d], n.hi[d]);
    return metric_distance(q, nearest, metric_);
  }

  std::vector<FeatureVector> points_;
  Metric metric_;
  std::size_t dim_ = 0;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace rce

#endif  // RCE_KDTREE_HPP
