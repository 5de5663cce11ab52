#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "delayflow/errors.hpp"

namespace delayflow {

enum class Sense { kMinimize, kMaximize };
enum class Relation { kLessEqual, kEqual, kGreaterEqual };
enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

inline constexpr double kLpInfinity = std::numeric_limits<double>::infinity();

struct LpTerm {
  std::size_t var;
  double coef;
};

struct LpConstraint {
  std::vector<LpTerm> terms;
  Relation relation = Relation::kLessEqual;
  double rhs = 0.0;
};

// Rows are stored sparsely; absent coefficients are zero. Variables default to
// the bound interval [0, +inf).
struct LinearProgram {
  Sense sense = Sense::kMaximize;
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<LpConstraint> constraints;

  std::size_t variable_count() const { return objective.size(); }

  std::size_t add_variable(double obj = 0.0, double lo = 0.0,
                           double hi = kLpInfinity) {
    objective.push_back(obj);
    lower.push_back(lo);
    upper.push_back(hi);
    return objective.size() - 1;
  }

  std::size_t add_constraint(std::vector<LpTerm> terms, Relation rel,
                             double rhs) {
    constraints.push_back({std::move(terms), rel, rhs});
    return constraints.size() - 1;
  }

  std::size_t add_dense_constraint(std::span<const double> row, Relation rel,
                                   double rhs) {
    if (row.size() != variable_count()) {
      throw std::invalid_argument("constraint row has " +
                                  std::to_string(row.size()) + " coefficients, expected " +
                                  std::to_string(variable_count()));
    }
    std::vector<LpTerm> terms;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] != 0.0) terms.push_back({j, row[j]});
    }
    return add_constraint(std::move(terms), rel, rhs);
  }

  double row_activity(std::size_t r, std::span<const double> x) const {
    double a = 0.0;
    for (const LpTerm& t : constraints[r].terms) a += t.coef * x[t.var];
    return a;
  }
};

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> x;
  double objective = 0.0;
  // Lagrange multipliers, one per constraint: objective gradient equals
  // sum(duals[r] * row_r) + reduced_costs at an optimum.
  std::vector<double> duals;
  std::vector<double> reduced_costs;
  std::size_t iterations = 0;
};

namespace detail {

inline constexpr double kPivotTol = 1e-9;
inline constexpr double kOptimalityTol = 1e-9;

// Dense simplex tableau. Row `rows` is the objective row holding z_j - c_j for
// a maximization; the last column is the right-hand side.
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_((rows + 1) * (cols + 1), 0.0),
        basis_(rows, 0) {}

  double& at(std::size_t i, std::size_t j) { return data_[i * (cols_ + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * (cols_ + 1) + j]; }
  double& rhs(std::size_t i) { return at(i, cols_); }
  double& obj(std::size_t j) { return at(rows_, j); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t r, std::size_t c) {
    const std::size_t width = cols_ + 1;
    double* prow = &data_[r * width];
    const double inv = 1.0 / prow[c];
    nz_.clear();
    for (std::size_t j = 0; j < width; ++j) {
      if (prow[j] != 0.0) {
        prow[j] *= inv;
        nz_.push_back(j);
      }
    }
    prow[c] = 1.0;
    for (std::size_t i = 0; i <= rows_; ++i) {
      if (i == r) continue;
      double* row = &data_[i * width];
      const double f = row[c];
      if (f == 0.0) continue;
      for (std::size_t j : nz_) row[j] -= f * prow[j];
      row[c] = 0.0;
    }
    basis_[r] = c;
  }

  // Runs Bland's rule until optimal or unbounded over columns [0, limit).
  // Returns false when unbounded.
  bool optimize(std::size_t limit, std::size_t& iterations) {
    const std::size_t max_iter = 100 * (rows_ + cols_) + 10000;
    while (true) {
      std::size_t enter = limit;
      for (std::size_t j = 0; j < limit; ++j) {
        if (obj(j) < -kOptimalityTol) {
          enter = j;
          break;
        }
      }
      if (enter == limit) return true;
      std::size_t leave = rows_;
      double best = 0.0;
      for (std::size_t i = 0; i < rows_; ++i) {
        const double a = at(i, enter);
        if (a <= kPivotTol) continue;
        const double ratio = std::max(0.0, rhs(i)) / a;
        if (leave == rows_) {
          leave = i;
          best = ratio;
          continue;
        }
        const double slack = 1e-12 * (1.0 + std::abs(best));
        if (ratio < best - slack ||
            (ratio <= best + slack && basis_[i] < basis_[leave])) {
          leave = i;
          best = std::min(best, ratio);
        }
      }
      if (leave == rows_) return false;
      pivot(leave, enter);
      if (++iterations > max_iter) {
        throw Error("simplex iteration limit exceeded");
      }
    }
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> nz_;
};

}  // namespace detail

// Two-phase dense-tableau simplex. Bland's rule for entering and leaving
// variables; rows are scaled by their largest absolute coefficient.
inline LpSolution solve_lp(const LinearProgram& lp) {
  const std::size_t n = lp.variable_count();
  if (lp.lower.size() != n || lp.upper.size() != n) {
    throw std::invalid_argument("bound vectors do not match variable count");
  }
  for (std::size_t r = 0; r < lp.constraints.size(); ++r) {
    const auto& con = lp.constraints[r];
    if (!std::isfinite(con.rhs)) {
      throw std::invalid_argument("constraint " + std::to_string(r) + " has non-finite rhs");
    }
    for (const LpTerm& t : con.terms) {
      if (t.var >= n) {
        throw std::invalid_argument("constraint " + std::to_string(r) +
                                    " references variable " + std::to_string(t.var) +
                                    " of " + std::to_string(n));
      }
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (lp.lower[j] > lp.upper[j]) {
      throw std::invalid_argument("variable " + std::to_string(j) + " has lower > upper");
    }
    if (lp.lower[j] == kLpInfinity || lp.upper[j] == -kLpInfinity) {
      throw std::invalid_argument("variable " + std::to_string(j) + " has an empty domain");
    }
  }

  // Map each variable onto non-negative columns y.
  enum class Kind { kShift, kMirror, kSplit };
  struct VarMap {
    Kind kind;
    std::size_t col;
    std::size_t col2;
  };
  std::vector<VarMap> vmap(n);
  std::size_t ny = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const bool lo_fin = std::isfinite(lp.lower[j]);
    const bool hi_fin = std::isfinite(lp.upper[j]);
    if (lo_fin) {
      vmap[j] = {Kind::kShift, ny++, 0};
    } else if (hi_fin) {
      vmap[j] = {Kind::kMirror, ny++, 0};
    } else {
      vmap[j] = {Kind::kSplit, ny, ny + 1};
      ny += 2;
    }
  }

  struct Row {
    std::vector<std::pair<std::size_t, double>> coefs;  // over y
    Relation rel;
    double rhs;
    std::size_t source;  // original constraint index, or npos for bound rows
    double unscale = 1.0;  // multiplier mapping internal dual to original
  };
  constexpr std::size_t kBoundRow = static_cast<std::size_t>(-1);
  std::vector<Row> rows;
  rows.reserve(lp.constraints.size() + n);

  LpSolution sol;
  sol.duals.assign(lp.constraints.size(), 0.0);

  for (std::size_t r = 0; r < lp.constraints.size(); ++r) {
    const auto& con = lp.constraints[r];
    std::vector<std::pair<std::size_t, double>> acc;
    double rhs = con.rhs;
    for (const LpTerm& t : con.terms) {
      const VarMap& m = vmap[t.var];
      switch (m.kind) {
        case Kind::kShift:
          rhs -= t.coef * lp.lower[t.var];
          acc.emplace_back(m.col, t.coef);
          break;
        case Kind::kMirror:
          rhs -= t.coef * lp.upper[t.var];
          acc.emplace_back(m.col, -t.coef);
          break;
        case Kind::kSplit:
          acc.emplace_back(m.col, t.coef);
          acc.emplace_back(m.col2, -t.coef);
          break;
      }
    }
    std::sort(acc.begin(), acc.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<std::size_t, double>> merged;
    for (const auto& [c, v] : acc) {
      if (!merged.empty() && merged.back().first == c) {
        merged.back().second += v;
      } else {
        merged.emplace_back(c, v);
      }
    }
    std::erase_if(merged, [](const auto& p) { return p.second == 0.0; });
    double scale = 0.0;
    for (const auto& p : merged) scale = std::max(scale, std::abs(p.second));
    if (scale == 0.0) {
      const double tol = 1e-9 * (1.0 + std::abs(rhs));
      const bool ok = (con.relation == Relation::kLessEqual && rhs >= -tol) ||
                      (con.relation == Relation::kGreaterEqual && rhs <= tol) ||
                      (con.relation == Relation::kEqual && std::abs(rhs) <= tol);
      if (!ok) {
        sol.status = LpStatus::kInfeasible;
        return sol;
      }
      continue;
    }
    for (auto& p : merged) p.second /= scale;
    rhs /= scale;
    Relation rel = con.relation;
    double sign = 1.0;
    if (rhs < 0.0) {
      sign = -1.0;
      rhs = -rhs;
      for (auto& p : merged) p.second = -p.second;
      if (rel == Relation::kLessEqual) {
        rel = Relation::kGreaterEqual;
      } else if (rel == Relation::kGreaterEqual) {
        rel = Relation::kLessEqual;
      }
    }
    rows.push_back({std::move(merged), rel, rhs, r, sign / scale});
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (vmap[j].kind == Kind::kShift && std::isfinite(lp.upper[j])) {
      const double width = lp.upper[j] - lp.lower[j];
      rows.push_back({{{vmap[j].col, 1.0}}, Relation::kLessEqual, width, kBoundRow, 1.0});
    }
  }

  // Column layout: y | slack or surplus per inequality | artificial per
  // equality / >= row.
  const std::size_t m = rows.size();
  std::vector<std::size_t> slack_col(m, kBoundRow);
  std::vector<std::size_t> art_col(m, kBoundRow);
  std::size_t ncols = ny;
  for (std::size_t i = 0; i < m; ++i) {
    if (rows[i].rel != Relation::kEqual) slack_col[i] = ncols++;
  }
  const std::size_t first_art = ncols;
  for (std::size_t i = 0; i < m; ++i) {
    if (rows[i].rel != Relation::kLessEqual) art_col[i] = ncols++;
  }

  detail::Tableau tab(m, ncols);
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& [c, v] : rows[i].coefs) tab.at(i, c) = v;
    if (slack_col[i] != kBoundRow) {
      tab.at(i, slack_col[i]) = rows[i].rel == Relation::kLessEqual ? 1.0 : -1.0;
    }
    if (art_col[i] != kBoundRow) tab.at(i, art_col[i]) = 1.0;
    tab.rhs(i) = rows[i].rhs;
    tab.basis()[i] = rows[i].rel == Relation::kLessEqual ? slack_col[i] : art_col[i];
  }

  // Phase 1: maximize -sum(artificials).
  double rhs_mass = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    rhs_mass += rows[i].rhs;
    if (art_col[i] == kBoundRow) continue;
    for (std::size_t j = 0; j <= ncols; ++j) {
      if (j >= first_art && j < ncols) continue;
      tab.obj(j) -= tab.at(i, j);
    }
  }
  if (first_art < ncols) {
    tab.optimize(ncols, sol.iterations);
    if (tab.obj(ncols) < -1e-9 * (1.0 + rhs_mass)) {
      sol.status = LpStatus::kInfeasible;
      return sol;
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (tab.basis()[i] < first_art) continue;
      for (std::size_t j = 0; j < first_art; ++j) {
        if (std::abs(tab.at(i, j)) > detail::kPivotTol) {
          tab.pivot(i, j);
          break;
        }
      }
    }
  }

  // Phase 2 on the original objective, internally maximized.
  const double dir = lp.sense == Sense::kMaximize ? 1.0 : -1.0;
  std::vector<double> cost(ncols, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double c = dir * lp.objective[j];
    switch (vmap[j].kind) {
      case Kind::kShift:
        cost[vmap[j].col] = c;
        break;
      case Kind::kMirror:
        cost[vmap[j].col] = -c;
        break;
      case Kind::kSplit:
        cost[vmap[j].col] = c;
        cost[vmap[j].col2] = -c;
        break;
    }
  }
  for (std::size_t j = 0; j <= ncols; ++j) {
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double cb = cost[tab.basis()[i]];
      if (cb != 0.0) z += cb * tab.at(i, j);
    }
    tab.obj(j) = z - (j < ncols ? cost[j] : 0.0);
  }
  if (!tab.optimize(first_art, sol.iterations)) {
    sol.status = LpStatus::kUnbounded;
    return sol;
  }

  std::vector<double> y(ncols, 0.0);
  for (std::size_t i = 0; i < m; ++i) y[tab.basis()[i]] = std::max(0.0, tab.rhs(i));
  sol.x.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const VarMap& vm = vmap[j];
    switch (vm.kind) {
      case Kind::kShift:
        sol.x[j] = lp.lower[j] + y[vm.col];
        if (std::isfinite(lp.upper[j])) sol.x[j] = std::min(sol.x[j], lp.upper[j]);
        break;
      case Kind::kMirror:
        sol.x[j] = lp.upper[j] - y[vm.col];
        break;
      case Kind::kSplit:
        sol.x[j] = y[vm.col] - y[vm.col2];
        break;
    }
  }
  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += lp.objective[j] * sol.x[j];

  for (std::size_t i = 0; i < m; ++i) {
    if (rows[i].source == kBoundRow) continue;
    const std::size_t id = rows[i].rel == Relation::kLessEqual ? slack_col[i] : art_col[i];
    sol.duals[rows[i].source] = dir * tab.obj(id) * rows[i].unscale;
  }
  sol.reduced_costs = lp.objective;
  for (std::size_t r = 0; r < lp.constraints.size(); ++r) {
    for (const LpTerm& t : lp.constraints[r].terms) {
      sol.reduced_costs[t.var] -= sol.duals[r] * t.coef;
    }
  }
  sol.status = LpStatus::kOptimal;
  return sol;
}

}  // namespace delayflow
