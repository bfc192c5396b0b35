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

#ifndef RCE_LP_HPP
#define RCE_LP_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rce {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, GreaterEqual, Equal };
enum class Sense { Minimize, Maximize };
enum class SolveStatus { Optimal, Infeasible, Unbounded, NodeLimit };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NodeLimit: return "node_limit";
  }
  return "?";
}

struct Term {
  std::size_t var;
  double coef;
};

struct Constraint {
  std::vector<Term> terms;
  Relation rel = Relation::LessEqual;
  double rhs = 0.0;
  std::string name;
};

// min/max c.x subject to rows and per-variable bounds (which may be infinite).
struct LinearProgram {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> objective;
  std::vector<std::string> names;
  std::vector<Constraint> rows;
  Sense sense = Sense::Minimize;

  std::size_t num_vars() const { return objective.size(); }

  std::size_t add_variable(double lo, double hi, double cost = 0.0, std::string name = {}) {
    lower.push_back(lo);
    upper.push_back(hi);
    objective.push_back(cost);
    if (name.empty()) name = "x" + std::to_string(names.size());
    names.push_back(std::move(name));
    return objective.size() - 1;
  }

  void add_constraint(std::vector<Term> terms, Relation rel, double rhs, std::string name = {}) {
    rows.push_back({std::move(terms), rel, rhs, std::move(name)});
  }

  void validate() const {
    const std::size_t n = num_vars();
    if (n == 0) throw std::invalid_argument("linear program has no variables");
    if (lower.size() != n || upper.size() != n) {
      throw std::invalid_argument("bound vectors do not match variable count");
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isnan(lower[j]) || std::isnan(upper[j]) || !std::isfinite(objective[j])) {
        throw std::invalid_argument("invalid bound or cost on variable " + names[j]);
      }
    }
    for (const auto& r : rows) {
      if (!std::isfinite(r.rhs)) throw std::invalid_argument("non-finite right-hand side");
      for (const auto& t : r.terms) {
        if (t.var >= n) throw std::invalid_argument("constraint references unknown variable");
        if (!std::isfinite(t.coef)) throw std::invalid_argument("non-finite coefficient");
      }
    }
  }

  double evaluate(const std::vector<double>& x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += objective[j] * x[j];
    return s;
  }

  // Largest bound or row violation of x.
  double max_violation(const std::vector<double>& x) const {
    double v = 0.0;
    for (std::size_t j = 0; j < num_vars(); ++j) {
      v = std::max(v, lower[j] - x[j]);
      v = std::max(v, x[j] - upper[j]);
    }
    for (const auto& r : rows) {
      double lhs = 0.0;
      for (const auto& t : r.terms) lhs += t.coef * x[t.var];
      if (r.rel != Relation::GreaterEqual) v = std::max(v, lhs - r.rhs);
      if (r.rel != Relation::LessEqual) v = std::max(v, r.rhs - lhs);
    }
    return v;
  }
};

struct SolveResult {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
  std::size_t nodes = 0;
  std::size_t pivots = 0;

  bool optimal() const { return status == SolveStatus::Optimal; }
};

struct SimplexOptions {
  double feasibility_tol = 1e-9;
  double pivot_tol = 1e-9;
  std::size_t max_pivots = 200000;
  // Consecutive degenerate pivots tolerated under Dantzig pricing before
  // switching to Bland's rule for the rest of the phase.
  std::size_t degenerate_switch = 50;
};

namespace detail {

// Dense tableau over nonnegative columns; row m holds reduced costs, the last
// column holds the right-hand side (and minus the objective in row m).
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : m_(rows), n_(cols), a_((rows + 1) * (cols + 1), 0.0), basis_(rows, 0) {}

  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }
  double& at(std::size_t i, std::size_t j) { return a_[i * (n_ + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return a_[i * (n_ + 1) + j]; }
  double& rhs(std::size_t i) { return at(i, n_); }
  double& cost(std::size_t j) { return at(m_, j); }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t r, std::size_t c) {
    const std::size_t w = n_ + 1;
    double* pr = &a_[r * w];
    const double inv = 1.0 / pr[c];
    for (std::size_t j = 0; j < w; ++j) pr[j] *= inv;
    pr[c] = 1.0;
    for (std::size_t i = 0; i <= m_; ++i) {
      if (i == r) continue;
      double* pi = &a_[i * w];
      const double f = pi[c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < w; ++j) pi[j] -= f * pr[j];
      pi[c] = 0.0;
    }
    basis_[r] = c;
  }

  // Sets row m to reduced costs of the given cost vector under the current basis.
  void load_costs(const std::vector<double>& c) {
    for (std::size_t j = 0; j <= n_; ++j) cost(j) = (j < n_) ? c[j] : 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = c[basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j <= n_; ++j) at(m_, j) -= cb * at(i, j);
    }
  }

  void drop_row(std::size_t r) {
    const std::size_t w = n_ + 1;
    a_.erase(a_.begin() + static_cast<std::ptrdiff_t>(r * w),
             a_.begin() + static_cast<std::ptrdiff_t>((r + 1) * w));
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
    --m_;
  }

 private:
  std::size_t m_, n_;
  std::vector<double> a_;
  std::vector<std::size_t> basis_;
};

enum class PhaseOutcome { Optimal, Unbounded, PivotLimit };

// Minimizes the loaded cost row over columns [0, allowed_cols).
inline PhaseOutcome run_phase(Tableau& t, std::size_t allowed_cols, const SimplexOptions& opt,
                              std::size_t& pivots) {
  bool bland = false;
  std::size_t degenerate_run = 0;
  while (true) {
    if (pivots >= opt.max_pivots) return PhaseOutcome::PivotLimit;
    std::size_t enter = allowed_cols;
    double best = -opt.feasibility_tol;
    for (std::size_t j = 0; j < allowed_cols; ++j) {
      const double d = t.cost(j);
      if (d < best) {
        enter = j;
        if (bland) break;
        best = d;
      }
    }
    if (enter == allowed_cols) return PhaseOutcome::Optimal;

    std::size_t leave = t.rows();
    double best_ratio = kInf;
    for (std::size_t i = 0; i < t.rows(); ++i) {
      const double aic = t.at(i, enter);
      if (aic <= opt.pivot_tol) continue;
      const double ratio = std::max(0.0, t.rhs(i)) / aic;
      if (ratio < best_ratio - 1e-12 ||
          (ratio <= best_ratio + 1e-12 && leave < t.rows() && t.basis()[i] < t.basis()[leave])) {
        if (ratio < best_ratio) best_ratio = ratio;
        leave = i;
      }
    }
    if (leave == t.rows()) return PhaseOutcome::Unbounded;

    if (best_ratio <= 1e-12) {
      if (++degenerate_run >= opt.degenerate_switch) bland = true;
    } else {
      degenerate_run = 0;
    }
    t.pivot(leave, enter);
    ++pivots;
  }
}

}  // namespace detail

// Two-phase dense simplex. Dantzig pricing, falling back to Bland's rule on
// long degenerate streaks so the method always terminates.
inline SolveResult simplex_solve(const LinearProgram& lp, const SimplexOptions& opt = {}) {
  lp.validate();
  const std::size_t nv = lp.num_vars();
  SolveResult result;

  // Substitute every variable by nonnegative columns:
  //   fixed        x = l
  //   [l, u]       x = l + y            (plus row y <= u - l when u finite)
  //   (-inf, u]    x = u - y
  //   free         x = y1 - y2
  struct Map {
    double offset = 0.0;
    std::size_t col = SIZE_MAX;
    double sign = 1.0;
    std::size_t neg_col = SIZE_MAX;
  };
  std::vector<Map> map(nv);
  std::size_t ncols = 0;
  struct Row {
    std::vector<std::pair<std::size_t, double>> coefs;
    Relation rel;
    double rhs;
  };
  std::vector<Row> rows;

  for (std::size_t j = 0; j < nv; ++j) {
    const double l = lp.lower[j], u = lp.upper[j];
    if (l > u + opt.feasibility_tol) {
      result.status = SolveStatus::Infeasible;
      return result;
    }
    Map& mp = map[j];
    if (std::isfinite(l) && std::isfinite(u) && u - l <= opt.feasibility_tol) {
      mp.offset = l;
    } else if (std::isfinite(l)) {
      mp.offset = l;
      mp.col = ncols++;
      if (std::isfinite(u)) rows.push_back({{{mp.col, 1.0}}, Relation::LessEqual, u - l});
    } else if (std::isfinite(u)) {
      mp.offset = u;
      mp.sign = -1.0;
      mp.col = ncols++;
    } else {
      mp.col = ncols++;
      mp.neg_col = ncols++;
    }
  }

  for (const auto& r : lp.rows) {
    Row row{{}, r.rel, r.rhs};
    for (const auto& t : r.terms) {
      const Map& mp = map[t.var];
      row.rhs -= t.coef * mp.offset;
      if (mp.col != SIZE_MAX) row.coefs.push_back({mp.col, t.coef * mp.sign});
      if (mp.neg_col != SIZE_MAX) row.coefs.push_back({mp.neg_col, -t.coef});
    }
    if (row.coefs.empty()) {
      const bool ok = (row.rel == Relation::LessEqual && row.rhs >= -opt.feasibility_tol) ||
                      (row.rel == Relation::GreaterEqual && row.rhs <= opt.feasibility_tol) ||
                      (row.rel == Relation::Equal && std::abs(row.rhs) <= opt.feasibility_tol);
      if (!ok) {
        result.status = SolveStatus::Infeasible;
        return result;
      }
      continue;
    }
    rows.push_back(std::move(row));
  }

  // Normalize to nonnegative right-hand sides.
  for (auto& row : rows) {
    if (row.rhs < 0.0) {
      row.rhs = -row.rhs;
      for (auto& [c, v] : row.coefs) v = -v;
      if (row.rel == Relation::LessEqual) {
        row.rel = Relation::GreaterEqual;
      } else if (row.rel == Relation::GreaterEqual) {
        row.rel = Relation::LessEqual;
      }
    }
  }

  const std::size_t m = rows.size();
  std::size_t n_slack = 0, n_art = 0;
  for (const auto& row : rows) {
    if (row.rel != Relation::Equal) ++n_slack;
    if (row.rel != Relation::LessEqual) ++n_art;
  }
  const std::size_t art_begin = ncols + n_slack;
  const std::size_t total = art_begin + n_art;

  std::vector<double> cost(total, 0.0);
  for (std::size_t j = 0; j < nv; ++j) {
    double c = lp.objective[j];
    if (lp.sense == Sense::Maximize) c = -c;
    const Map& mp = map[j];
    if (mp.col != SIZE_MAX) cost[mp.col] += c * mp.sign;
    if (mp.neg_col != SIZE_MAX) cost[mp.neg_col] -= c;
  }

  detail::Tableau t(m, total);
  std::size_t slack = ncols, art = art_begin;
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& [c, v] : rows[i].coefs) t.at(i, c) += v;
    t.rhs(i) = rows[i].rhs;
    switch (rows[i].rel) {
      case Relation::LessEqual:
        t.at(i, slack) = 1.0;
        t.basis()[i] = slack++;
        break;
      case Relation::GreaterEqual:
        t.at(i, slack++) = -1.0;
        t.at(i, art) = 1.0;
        t.basis()[i] = art++;
        break;
      case Relation::Equal:
        t.at(i, art) = 1.0;
        t.basis()[i] = art++;
        break;
    }
  }

  std::size_t pivots = 0;
  if (n_art > 0) {
    std::vector<double> phase1(total, 0.0);
    for (std::size_t j = art_begin; j < total; ++j) phase1[j] = 1.0;
    t.load_costs(phase1);
    const auto out = detail::run_phase(t, total, opt, pivots);
    if (out == detail::PhaseOutcome::PivotLimit) {
      throw std::runtime_error("simplex pivot limit reached in phase one");
    }
    double infeas = 0.0;
    for (std::size_t i = 0; i < t.rows(); ++i) {
      if (t.basis()[i] >= art_begin) infeas += std::max(0.0, t.rhs(i));
    }
    if (infeas > 1e-7) {
      result.status = SolveStatus::Infeasible;
      result.pivots = pivots;
      return result;
    }
    // Drive zero-level artificials out of the basis; drop redundant rows.
    for (std::size_t i = 0; i < t.rows();) {
      if (t.basis()[i] < art_begin) {
        ++i;
        continue;
      }
      std::size_t col = art_begin;
      double best = opt.pivot_tol;
      for (std::size_t j = 0; j < art_begin; ++j) {
        if (std::abs(t.at(i, j)) > best) {
          best = std::abs(t.at(i, j));
          col = j;
        }
      }
      if (col < art_begin) {
        t.pivot(i, col);
        ++pivots;
        ++i;
      } else {
        t.drop_row(i);
      }
    }
  }

  t.load_costs(cost);
  const auto out = detail::run_phase(t, art_begin, opt, pivots);
  result.pivots = pivots;
  if (out == detail::PhaseOutcome::PivotLimit) {
    throw std::runtime_error("simplex pivot limit reached in phase two");
  }
  if (out == detail::PhaseOutcome::Unbounded) {
    result.status = SolveStatus::Unbounded;
    return result;
  }

  std::vector<double> y(total, 0.0);
  for (std::size_t i = 0; i < t.rows(); ++i) y[t.basis()[i]] = std::max(0.0, t.rhs(i));
  result.x.assign(nv, 0.0);
  for (std::size_t j = 0; j < nv; ++j) {
    const Map& mp = map[j];
    double v = mp.offset;
    if (mp.col != SIZE_MAX) v += mp.sign * y[mp.col];
    if (mp.neg_col != SIZE_MAX) v -= y[mp.neg_col];
    result.x[j] = v;
  }
  result.status = SolveStatus::Optimal;
  result.objective = lp.evaluate(result.x);
  return result;
}

}  // namespace rce

#endif  // RCE_LP_HPP
