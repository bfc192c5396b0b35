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

#ifndef RCE_MILP_HPP
#define RCE_MILP_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rce/lp.hpp"

namespace rce {

struct MilpProblem {
  LinearProgram lp;
  std::vector<std::size_t> binaries;

  std::size_t add_binary(std::string name = {}) {
    const std::size_t j = lp.add_variable(0.0, 1.0, 0.0, std::move(name));
    binaries.push_back(j);
    return j;
  }

  void validate() const {
    lp.validate();
    std::vector<char> seen(lp.num_vars(), 0);
    for (std::size_t b : binaries) {
      if (b >= lp.num_vars()) throw std::invalid_argument("binary index out of range");
      if (seen[b]) throw std::invalid_argument("duplicate binary index");
      seen[b] = 1;
    }
  }
};

struct BranchAndBoundOptions {
  std::size_t node_limit = 1'000'000;
  double integrality_tol = 1e-6;
  // Optional yes/no mode. Only the question "is the optimum on the good side
  // of the threshold?" gets answered: for minimization the search stops at the
  // first incumbent below it and prunes nodes whose relaxation bound reaches it
  // (mirrored for maximization). SolveResult::bound then carries the proof.
  std::optional<double> decision_threshold;
  SimplexOptions simplex;
};

struct MilpResult : SolveResult {
  // Proven dual bound: optimum >= bound when minimizing, <= bound when
  // maximizing. Equals objective for fully solved problems.
  double bound = 0.0;
};

// Depth-first branch and bound over the binaries, bounding with the LP
// relaxation, branching on the most fractional binary. Among open nodes of
// equal depth the one with the better parent bound is explored first, then
// creation order, so runs are reproducible.
inline MilpResult branch_and_bound(const MilpProblem& milp, const BranchAndBoundOptions& opt = {}) {
  milp.validate();
  const double sign = milp.lp.sense == Sense::Minimize ? 1.0 : -1.0;
  const std::size_t nb = milp.binaries.size();

  struct Node {
    std::vector<std::int8_t> fix;  // -1 free, else 0 / 1
    std::size_t depth;
    double parent_bound;  // in minimization form
    std::size_t id;
  };
  auto worse = [](const Node& a, const Node& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    if (a.parent_bound != b.parent_bound) return a.parent_bound > b.parent_bound;
    return a.id > b.id;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);
  std::size_t next_id = 0;
  open.push({std::vector<std::int8_t>(nb, -1), 0, -kInf, next_id++});

  const bool decide = opt.decision_threshold.has_value();
  const double threshold = decide ? sign * *opt.decision_threshold : 0.0;

  MilpResult best;
  best.status = SolveStatus::Infeasible;
  double incumbent = kInf;
  double pruned_bound = kInf;  // smallest bound among threshold-pruned nodes
  std::size_t nodes = 0, pivots = 0;
  LinearProgram work = milp.lp;
  bool stopped_early = false;

  while (!open.empty()) {
    if (nodes >= opt.node_limit) {
      best.status = SolveStatus::NodeLimit;
      break;
    }
    Node node = open.top();
    open.pop();
    if (node.parent_bound >= incumbent - 1e-9) continue;
    if (decide && node.parent_bound >= threshold) {
      pruned_bound = std::min(pruned_bound, node.parent_bound);
      continue;
    }

    for (std::size_t k = 0; k < nb; ++k) {
      const std::size_t j = milp.binaries[k];
      const double lo = std::max(0.0, milp.lp.lower[j]);
      const double hi = std::min(1.0, milp.lp.upper[j]);
      work.lower[j] = node.fix[k] < 0 ? lo : std::max(lo, static_cast<double>(node.fix[k]));
      work.upper[j] = node.fix[k] < 0 ? hi : std::min(hi, static_cast<double>(node.fix[k]));
    }
    ++nodes;
    const SolveResult rel = simplex_solve(work, opt.simplex);
    pivots += rel.pivots;
    if (rel.status == SolveStatus::Infeasible) continue;
    if (rel.status == SolveStatus::Unbounded) {
      best.status = SolveStatus::Unbounded;
      best.nodes = nodes;
      best.pivots = pivots;
      best.bound = -sign * kInf;
      return best;
    }
    const double obj = sign * rel.objective;
    if (obj >= incumbent - 1e-9) continue;
    if (decide && obj >= threshold) {
      pruned_bound = std::min(pruned_bound, obj);
      continue;
    }

    std::size_t branch = nb;
    double frac_best = opt.integrality_tol;
    for (std::size_t k = 0; k < nb; ++k) {
      const double v = rel.x[milp.binaries[k]];
      const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
      if (frac > frac_best + 1e-12) {
        frac_best = frac;
        branch = k;
      }
    }
    if (branch == nb) {
      incumbent = obj;
      best.status = SolveStatus::Optimal;
      best.x = rel.x;
      best.objective = rel.objective;
      if (decide && obj < threshold) {
        stopped_early = true;
        break;
      }
      continue;
    }
    const double v = rel.x[milp.binaries[branch]];
    const std::int8_t first = v >= 0.5 ? 1 : 0;
    for (std::int8_t side : {first, static_cast<std::int8_t>(1 - first)}) {
      Node child{node.fix, node.depth + 1, obj, next_id++};
      child.fix[branch] = side;
      open.push(std::move(child));
    }
  }

  best.nodes = nodes;
  best.pivots = pivots;
  double bound = std::min(incumbent, pruned_bound);
  if (stopped_early || best.status == SolveStatus::NodeLimit) {
    while (!open.empty()) {
      bound = std::min(bound, open.top().parent_bound);
      open.pop();
    }
  }
  best.bound = sign * bound;
  if (best.status == SolveStatus::Infeasible && std::isfinite(pruned_bound)) {
    // Every node was cut off by the threshold: no incumbent, but the question
    // is answered by the bound.
    best.status = SolveStatus::Optimal;
    best.objective = best.bound;
  }
  return best;
}

namespace detail {
inline std::string lp_term(double c, const std::string& name, bool first) {
  std::ostringstream os;
  os.precision(17);
  if (first) {
    os << c << ' ' << name;
  } else {
    os << (c < 0 ? " - " : " + ") << std::abs(c) << ' ' << name;
  }
  return os.str();
}
}  // namespace detail

// CPLEX-LP style text, for cross-checking against external solvers.
inline std::string to_lp_format(const MilpProblem& milp) {
  const LinearProgram& lp = milp.lp;
  std::ostringstream os;
  os.precision(17);
  os << (lp.sense == Sense::Minimize ? "Minimize\n" : "Maximize\n") << " obj:";
  bool first = true;
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    if (lp.objective[j] == 0.0) continue;
    os << ' ' << detail::lp_term(lp.objective[j], lp.names[j], first);
    first = false;
  }
  if (first) os << " 0 " << lp.names.front();
  os << "\nSubject To\n";
  for (std::size_t i = 0; i < lp.rows.size(); ++i) {
    const Constraint& r = lp.rows[i];
    os << ' ' << (r.name.empty() ? "c" + std::to_string(i) : r.name) << ':';
    bool f = true;
    for (const Term& t : r.terms) {
      os << ' ' << detail::lp_term(t.coef, lp.names[t.var], f);
      f = false;
    }
    if (f) os << " 0 " << lp.names.front();
    os << (r.rel == Relation::LessEqual ? " <= " : r.rel == Relation::GreaterEqual ? " >= " : " = ")
       << r.rhs << '\n';
  }
  os << "Bounds\n";
  std::vector<char> is_bin(lp.num_vars(), 0);
  for (std::size_t b : milp.binaries) is_bin[b] = 1;
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    if (is_bin[j] && lp.lower[j] == 0.0 && lp.upper[j] == 1.0) continue;
    const double l = lp.lower[j], u = lp.upper[j];
    if (std::isinf(l) && std::isinf(u)) {
      os << ' ' << lp.names[j] << " free\n";
    } else if (l == u) {
      os << ' ' << lp.names[j] << " = " << l << '\n';
    } else {
      os << ' ';
      if (std::isinf(l)) os << "-inf"; else os << l;
      os << " <= " << lp.names[j] << " <= ";
      if (std::isinf(u)) os << "+inf"; else os << u;
      os << '\n';
    }
  }
  if (!milp.binaries.empty()) {
    os << "Binaries\n";
    for (std::size_t b : milp.binaries) os << ' ' << lp.names[b] << '\n';
  }
  os << "End\n";
  return os.str();
}

}  // namespace rce

#endif  // RCE_MILP_HPP
