#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace delayflow;

namespace {

LinearProgram make(Sense sense, std::vector<double> obj) {
  LinearProgram lp;
  lp.sense = sense;
  for (double c : obj) lp.add_variable(c);
  return lp;
}

void expect_feasible(const LinearProgram& lp, const LpSolution& sol, double tol = 1e-7) {
  ASSERT_EQ(sol.x.size(), lp.variable_count());
  for (std::size_t j = 0; j < lp.variable_count(); ++j) {
    EXPECT_GE(sol.x[j], lp.lower[j] - tol);
    EXPECT_LE(sol.x[j], lp.upper[j] + tol);
  }
  for (std::size_t r = 0; r < lp.constraints.size(); ++r) {
    const double a = lp.row_activity(r, sol.x);
    const double rhs = lp.constraints[r].rhs;
    const double scale = std::max(1.0, std::abs(rhs));
    switch (lp.constraints[r].relation) {
      case Relation::kLessEqual: EXPECT_LE(a, rhs + tol * scale); break;
      case Relation::kGreaterEqual: EXPECT_GE(a, rhs - tol * scale); break;
      case Relation::kEqual: EXPECT_NEAR(a, rhs, tol * scale); break;
    }
  }
}

}  // namespace

TEST(SolveLp, SingleBound) {
  auto lp = make(Sense::kMaximize, {1});
  lp.add_constraint({{0, 1}}, Relation::kLessEqual, 1);
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.x[0], 1, 1e-12);
  EXPECT_NEAR(sol.objective, 1, 1e-12);
}

TEST(SolveLp, TwoVariables) {
  auto lp = make(Sense::kMaximize, {1, 1});
  lp.add_constraint({{0, 1}, {1, 1}}, Relation::kLessEqual, 2);
  lp.add_constraint({{0, 1}}, Relation::kLessEqual, 1);
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.objective, 2, 1e-12);
  expect_feasible(lp, sol);
}

TEST(SolveLp, Infeasible) {
  auto lp = make(Sense::kMinimize, {1});
  lp.add_constraint({{0, 1}}, Relation::kGreaterEqual, 3);
  lp.add_constraint({{0, 1}}, Relation::kLessEqual, 2);
  EXPECT_EQ(solve_lp(lp).status, LpStatus::kInfeasible);
}

TEST(SolveLp, Unbounded) {
  auto lp = make(Sense::kMaximize, {1, 1});
  lp.add_constraint({{0, 1}, {1, -1}}, Relation::kLessEqual, 1);
  EXPECT_EQ(solve_lp(lp).status, LpStatus::kUnbounded);
}

TEST(SolveLp, EqualityAndNegativeRhs) {
  auto lp = make(Sense::kMinimize, {2, 3});
  lp.add_constraint({{0, 1}, {1, 1}}, Relation::kEqual, 4);
  lp.add_constraint({{0, -1}}, Relation::kGreaterEqual, -3);  // x0 <= 3
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.x[0], 3, 1e-9);
  EXPECT_NEAR(sol.x[1], 1, 1e-9);
  EXPECT_NEAR(sol.objective, 9, 1e-9);
}

TEST(SolveLp, VariableBounds) {
  LinearProgram lp;
  lp.sense = Sense::kMinimize;
  lp.add_variable(1, -5, 5);                  // shifted
  lp.add_variable(-1, -kLpInfinity, 2);       // mirrored
  lp.add_variable(1, -kLpInfinity, kLpInfinity);  // free
  lp.add_constraint({{2, 1}}, Relation::kGreaterEqual, -7);
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.x[0], -5, 1e-9);
  EXPECT_NEAR(sol.x[1], 2, 1e-9);
  EXPECT_NEAR(sol.x[2], -7, 1e-9);
  EXPECT_NEAR(sol.objective, -14, 1e-9);
}

TEST(SolveLp, ZeroRowsAndEmpty) {
  auto lp = make(Sense::kMaximize, {0});
  lp.add_constraint({}, Relation::kLessEqual, 1);
  EXPECT_EQ(solve_lp(lp).status, LpStatus::kOptimal);
  lp.add_constraint({{0, 0.0}}, Relation::kGreaterEqual, 1);
  EXPECT_EQ(solve_lp(lp).status, LpStatus::kInfeasible);
  LinearProgram empty;
  EXPECT_EQ(solve_lp(empty).status, LpStatus::kOptimal);
}

TEST(SolveLp, DimensionErrors) {
  auto lp = make(Sense::kMaximize, {1, 1});
  const std::vector<double> row{1, 2, 3};
  EXPECT_THROW(lp.add_dense_constraint(row, Relation::kLessEqual, 1), std::invalid_argument);
  lp.add_constraint({{5, 1}}, Relation::kLessEqual, 1);
  EXPECT_THROW(solve_lp(lp), std::invalid_argument);
}

TEST(SolveLp, DegenerateCycleProne) {
  // Beale's example cycles under the textbook largest-coefficient rule.
  auto lp = make(Sense::kMinimize, {-0.75, 150, -0.02, 6});
  lp.add_constraint({{0, 0.25}, {1, -60}, {2, -0.04}, {3, 9}}, Relation::kLessEqual, 0);
  lp.add_constraint({{0, 0.5}, {1, -90}, {2, -0.02}, {3, 3}}, Relation::kLessEqual, 0);
  lp.add_constraint({{2, 1}}, Relation::kLessEqual, 1);
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.objective, -0.05, 1e-9);
}

TEST(SolveLp, DualsSatisfyComplementarySlackness) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 4;
    const std::size_t m = 2 + rng() % 4;
    LinearProgram lp;
    lp.sense = (rng() % 2) ? Sense::kMaximize : Sense::kMinimize;
    for (std::size_t j = 0; j < n; ++j) lp.add_variable(static_cast<double>(rng() % 11) - 5.0);
    for (std::size_t j = 0; j < n; ++j) lp.add_constraint({{j, 1}}, Relation::kLessEqual, 10);
    for (std::size_t r = 0; r < m; ++r) {
      std::vector<LpTerm> terms;
      for (std::size_t j = 0; j < n; ++j) terms.push_back({j, static_cast<double>(rng() % 7) - 2.0});
      lp.add_constraint(terms, static_cast<Relation>(rng() % 3), static_cast<double>(rng() % 9));
    }
    const auto sol = solve_lp(lp);
    if (sol.status != LpStatus::kOptimal) continue;
    ASSERT_EQ(sol.duals.size(), lp.constraints.size());
    // Stationarity: c = A^T y + reduced costs.
    for (std::size_t j = 0; j < n; ++j) {
      double g = sol.reduced_costs[j];
      for (std::size_t r = 0; r < lp.constraints.size(); ++r) {
        for (const auto& t : lp.constraints[r].terms) {
          if (t.var == j) g += sol.duals[r] * t.coef;
        }
      }
      EXPECT_NEAR(g, lp.objective[j], 1e-6);
      // A variable strictly inside its bounds has no reduced cost.
      if (sol.x[j] > 1e-7) {
        EXPECT_NEAR(sol.reduced_costs[j], 0.0, 1e-6);
      }
    }
    // A slack row carries no multiplier, and duals have the right sign.
    double dual_obj = 0.0;
    for (std::size_t r = 0; r < lp.constraints.size(); ++r) {
      const double slack = lp.constraints[r].rhs - lp.row_activity(r, sol.x);
      if (std::abs(slack) > 1e-7) {
        EXPECT_NEAR(sol.duals[r], 0.0, 1e-6);
      }
      dual_obj += sol.duals[r] * lp.constraints[r].rhs;
    }
    EXPECT_NEAR(dual_obj, sol.objective, 1e-6 * (1 + std::abs(sol.objective)));
  }
}

TEST(SolveLp, Deterministic) {
  std::mt19937_64 rng(11);
  LinearProgram lp;
  for (int j = 0; j < 6; ++j) lp.add_variable(static_cast<double>(rng() % 5));
  for (int r = 0; r < 6; ++r) {
    std::vector<LpTerm> terms;
    for (std::size_t j = 0; j < 6; ++j) terms.push_back({j, static_cast<double>(rng() % 5)});
    lp.add_constraint(terms, Relation::kLessEqual, 3 + static_cast<double>(rng() % 5));
  }
  const auto a = solve_lp(lp);
  const auto b = solve_lp(lp);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.objective, b.objective);
}

// Random bounded LPs against brute-force vertex enumeration.
TEST(SolveLp, MatchesVertexEnumeration) {
  std::mt19937_64 rng(2024);
  int optimal = 0;
  int infeasible = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 6;
    const std::size_t m = 1 + rng() % 6;
    LinearProgram lp;
    lp.sense = (rng() % 2) ? Sense::kMaximize : Sense::kMinimize;
    for (std::size_t j = 0; j < n; ++j) lp.add_variable(static_cast<double>(rng() % 21) / 2.0 - 5.0);
    std::vector<LpTerm> box;
    for (std::size_t j = 0; j < n; ++j) box.push_back({j, 1.0});
    lp.add_constraint(box, Relation::kLessEqual, 20.0);  // keeps the problem bounded
    for (std::size_t r = 1; r < m; ++r) {
      std::vector<LpTerm> terms;
      for (std::size_t j = 0; j < n; ++j) {
        const double a = static_cast<double>(rng() % 13) - 4.0;
        if (a != 0.0) terms.push_back({j, a});
      }
      const auto rel = static_cast<Relation>(rng() % 3);
      lp.add_constraint(terms, rel, static_cast<double>(rng() % 25) - 6.0);
    }
    const auto want = oracle::brute_force_lp(lp);
    const auto got = solve_lp(lp);
    if (!want) {
      EXPECT_EQ(got.status, LpStatus::kInfeasible) << "trial " << trial;
      ++infeasible;
      continue;
    }
    ASSERT_EQ(got.status, LpStatus::kOptimal) << "trial " << trial;
    EXPECT_NEAR(got.objective, *want, 1e-6 * (1 + std::abs(*want))) << "trial " << trial;
    expect_feasible(lp, got);
    ++optimal;
  }
  EXPECT_GT(optimal, 40);
  EXPECT_GT(infeasible, 0);
}
