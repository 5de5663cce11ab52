#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace delayflow;

namespace {

FlowSolution single(std::vector<PathFlow> paths) {
  FlowSolution sol;
  sol.flows.push_back(std::move(paths));
  return sol;
}

}  // namespace

TEST(PLFunction, EvaluatesAndExtends) {
  const PLFunction f({{0, 0}, {10, 10}, {20, 15}});
  EXPECT_DOUBLE_EQ(f(0), 0);
  EXPECT_DOUBLE_EQ(f(5), 5);
  EXPECT_DOUBLE_EQ(f(10), 10);
  EXPECT_DOUBLE_EQ(f(15), 12.5);
  EXPECT_DOUBLE_EQ(f(30), 20);  // last slope continues
  EXPECT_DOUBLE_EQ(PLFunction::identity()(123.5), 123.5);
  EXPECT_DOUBLE_EQ(PLFunction({{0, 4}})(99), 4);
  EXPECT_DOUBLE_EQ(PLFunction::linear(2, 5)(3), 11);
}

TEST(PLFunction, RejectsMalformedBreakpoints) {
  EXPECT_THROW(PLFunction(std::vector<Breakpoint>{}), std::invalid_argument);
  EXPECT_THROW(PLFunction({{1, 0}, {2, 1}}), std::invalid_argument);
  EXPECT_THROW(PLFunction({{0, 0}, {2, 1}, {2, 3}}), std::invalid_argument);
  EXPECT_THROW(PLFunction({{0, 0}, {1, std::nan("")}}), std::invalid_argument);
}

TEST(ValidateUtility, ThroughputExamples) {
  EXPECT_FALSE(validate_utility_t(PLFunction::identity()));
  EXPECT_FALSE(validate_utility_t(PLFunction({{0, 0}, {10, 10}, {20, 15}})));
  const auto bad = validate_utility_t(PLFunction({{0, 0}, {10, 5}, {20, 20}}));
  ASSERT_TRUE(bad);
  EXPECT_NE(bad->find("not concave"), std::string::npos);
  EXPECT_TRUE(validate_utility_t(PLFunction({{0, 0}, {1, -1}})));
  EXPECT_TRUE(validate_utility_t(PLFunction({{0, -1}, {1, 0}})));
}

TEST(ValidateUtility, DelayExamples) {
  EXPECT_FALSE(validate_utility_d(PLFunction::identity()));
  EXPECT_FALSE(validate_utility_d(PLFunction({{0, 5}, {1, 6}})));
  const auto bad = validate_utility_d(PLFunction({{0, 0}, {1, 1}, {2, 4}}));
  ASSERT_TRUE(bad);
  EXPECT_NE(bad->find("segment 2"), std::string::npos);
  EXPECT_NE(bad->find("-2"), std::string::npos);
  EXPECT_TRUE(validate_utility_d(PLFunction({{0, 0}, {1, 3}, {2, 4}})));  // concave
}

TEST(ValidateUtility, InterceptRuleMatchesScalingInequality) {
  // U(s a) <= s U(a) for s >= 1 exactly when no segment has negative intercept.
  const std::vector<PLFunction> fs{
      PLFunction({{0, 0}, {1, 1}, {2, 4}}), PLFunction({{0, 2}, {3, 5}, {6, 11}}),
      PLFunction({{0, 1}, {1, 2}, {2, 4}, {3, 7}}), PLFunction({{0, 0}, {5, 5}, {10, 20}}),
      PLFunction::linear(3, 1)};
  for (const auto& f : fs) {
    bool holds = true;
    for (double a = 0.05; a < 12; a += 0.05) {
      for (double s = 1; s < 6; s += 0.25) {
        if (f(s * a) > s * f(a) + 1e-9) holds = false;
      }
    }
    const bool convex_ok = !validate_utility_d(f);
    EXPECT_EQ(holds, convex_ok);
  }
}

TEST(ProblemSpec, ValidationErrors) {
  ProblemSpec spec = fixtures::two_parallel_tcdm(1);
  EXPECT_NO_THROW(spec.validate());
  auto bad = spec;
  bad.commodities[0].sink = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.commodities[0].R = -1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.commodities[0].D = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.commodities[0].utility_d = PLFunction({{0, 0}, {1, 1}, {2, 4}});
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.commodities.clear();
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Metrics, Examples) {
  const Network net = fixtures::two_parallel();
  const auto one = evaluate_commodity(net, std::vector<PathFlow>{{Path{{1}}, 3}});
  EXPECT_EQ(one.throughput, 3);
  EXPECT_EQ(one.max_delay, 10);
  EXPECT_EQ(one.total_delay, 30);
  EXPECT_EQ(one.average_delay, 10);
  const auto two = evaluate_commodity(net, std::vector<PathFlow>{{Path{{0}}, 1}, {Path{{1}}, 1}});
  EXPECT_EQ(two.throughput, 2);
  EXPECT_EQ(two.max_delay, 10);
  EXPECT_EQ(two.total_delay, 11);
  EXPECT_EQ(two.average_delay, 5.5);
  const auto none = evaluate_commodity(net, std::vector<PathFlow>{});
  EXPECT_EQ(none.throughput, 0);
  EXPECT_EQ(none.max_delay, 0);
  EXPECT_EQ(none.total_delay, 0);
  EXPECT_EQ(none.average_delay, 0);
}

TEST(CheckFlow, DetectsViolations) {
  const ProblemSpec spec = fixtures::two_parallel_tcdm(1);
  EXPECT_TRUE(check_flow(spec, single({{Path{{0}}, 1}})).empty());
  const auto over = check_flow(spec, single({{Path{{0}}, 1.5}}));
  ASSERT_EQ(over.size(), 1u);
  EXPECT_NE(over[0].find("s->t"), std::string::npos);
  EXPECT_FALSE(check_flow(spec, single({{Path{{0}}, -1}})).empty());
  EXPECT_FALSE(check_flow(spec, FlowSolution{}).empty());
}

TEST(Counterpart, DelayObjectiveForcesBothEdges) {
  ProblemSpec spec = fixtures::two_parallel_tcdm(2);
  const Counterpart cp = build_counterpart(spec);
  const auto sol = solve_lp(cp.lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  const auto x = counterpart_edge_flows(spec, cp, sol);
  EXPECT_NEAR(x[0][0], 1, 1e-9);
  EXPECT_NEAR(x[0][1], 1, 1e-9);
  EXPECT_NEAR(sol.objective, 5.5, 1e-9);  // U^d(11 / 2)
}

TEST(Counterpart, ThroughputObjectiveCapacityBound) {
  const std::vector<DcumDemand> d{{0, 1, kUnboundedDelay}};
  const ProblemSpec spec = make_dcum(fixtures::two_parallel(), d);
  const auto sol = solve_lp(build_counterpart(spec).lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.objective, 2, 1e-9);
}

TEST(Counterpart, AverageDelayBoundExcludesSlowEdge) {
  const std::vector<DcumDemand> d{{0, 1, 1.0}};
  const ProblemSpec spec = make_dcum(fixtures::two_parallel(), d);
  const Counterpart cp = build_counterpart(spec);
  const auto sol = solve_lp(cp.lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.objective, 1, 1e-9);
  EXPECT_NEAR(counterpart_edge_flows(spec, cp, sol)[0][1], 0, 1e-9);
}

TEST(Counterpart, RejectsZeroRequirementUnderDelayObjective) {
  ProblemSpec spec = fixtures::two_parallel_tcdm(1);
  spec.commodities[0].R = 0;
  EXPECT_THROW(build_counterpart(spec), std::invalid_argument);
}

TEST(Counterpart, SkipsEdgesIntoSourceAndOutOfSink) {
  const Network net = load_topology("node s\nnode t\nedge s t 1 1\nedge t s 1 1\n");
  const std::vector<TcdmDemand> d{{0, 1, 1, 1}};
  const Counterpart cp = build_counterpart(make_tcdm(net, d));
  ASSERT_EQ(cp.flow_vars.size(), 1u);
  EXPECT_EQ(cp.flow_vars[0].edge, 0u);
}

TEST(Counterpart, EpigraphIsExactForPiecewiseUtilities) {
  for (std::uint64_t seed = 1; seed <= 80; ++seed) {
    const ProblemSpec spec = random_instance(seed);
    const Counterpart cp = build_counterpart(spec);
    const auto sol = solve_lp(cp.lp);
    if (sol.status != LpStatus::kOptimal) continue;
    const auto x = counterpart_edge_flows(spec, cp, sol);
    const bool delay = is_delay_objective(spec.objective);
    const bool maxmin = is_maxmin_objective(spec.objective);
    double value = maxmin ? (delay ? -1e300 : 1e300) : 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) {
      const Commodity& c = spec.commodities[i];
      double thr = 0.0;
      for (EdgeId e : spec.network.out_edges(c.source)) thr += x[i][e];
      double total = 0.0;
      for (EdgeId e = 0; e < spec.network.edge_count(); ++e) total += x[i][e] * spec.network.edge(e).delay_ms;
      const double v = delay ? c.delay_penalty(total / c.R) : c.throughput_utility(thr);
      value = maxmin ? (delay ? std::max(value, v) : std::min(value, v)) : value + v;
    }
    EXPECT_NEAR(value, sol.objective, 1e-6 * (1 + std::abs(value))) << "seed " << seed;
  }
}

TEST(Constructors, Tcdm) {
  const ProblemSpec spec = fixtures::ec2_tcdm(230);
  EXPECT_EQ(spec.objective, Objective::kSumDelayPenalty);
  ASSERT_EQ(spec.size(), 2u);
  EXPECT_EQ(spec.commodities[0].R, 230);
  EXPECT_TRUE(std::isinf(spec.commodities[0].D));
  EXPECT_EQ(spec.commodities[1].delay_penalty(100), 100);
}

TEST(Constructors, TcdmWithZeroWeightsMakesEveryFeasibleFlowOptimal) {
  const std::vector<TcdmDemand> d{{0, 1, 2, 0.0}};
  const ProblemSpec spec = make_tcdm(fixtures::two_parallel(), d);
  EXPECT_EQ(objective_value(spec, Metrics{{2, 10, 11, 5.5}}), 0);
  EXPECT_EQ(pass_t(spec).objective, 0);
}

TEST(Constructors, DcumBelowShortestDelayGivesZero) {
  const std::vector<DcumDemand> d{{0, 1, 0.5}};
  const ProblemSpec spec = make_dcum(fixtures::two_parallel(), d);
  EXPECT_EQ(spec.commodities[0].R, 0);
  EXPECT_NEAR(exact_time_expanded(spec).objective, 0, 1e-12);
  EXPECT_NEAR(pass_t(spec).objective, 0, 1e-12);
}

TEST(Constructors, DcumUnboundedIsMaxFlow) {
  const Network net = builtin_ec2();
  const std::vector<DcumDemand> d{{net.node("OR"), net.node("TO"), kUnboundedDelay}};
  const ProblemSpec spec = make_dcum(net, d);
  const auto opt = oracle::path_enumeration_optimum(spec);
  ASSERT_TRUE(opt);
  EXPECT_NEAR(pass_t(spec).objective, *opt, 1e-6);
}

TEST(FeasibilityTransfer, ExactSolutionsSatisfyTheCounterpart) {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    RandomInstanceOptions opts;
    opts.max_nodes = 6;
    const ProblemSpec spec = random_instance(seed, opts);
    SolveReport exact;
    try {
      exact = exact_time_expanded(spec);
    } catch (const InfeasibleError&) {
      continue;
    }
    EXPECT_TRUE(counterpart_violations(spec, exact.solution).empty()) << "seed " << seed;
    ++checked;
  }
  EXPECT_GT(checked, 30);
}

TEST(Metrics, TotalDelayBoundedByMaxDelayTimesThroughput) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const ProblemSpec spec = random_instance(seed);
    for (const auto& m : pass_t(spec).metrics) {
      EXPECT_LE(m.total_delay, m.max_delay * m.throughput + 1e-9);
    }
  }
}

TEST(ProblemJson, RoundTripAndDefaults) {
  const Network net = builtin_ec2();
  const ProblemSpec spec = parse_problem(R"({
    "objective": "sum-throughput-utility",
    "commodities": [
      {"src": "VA", "dst": "SI", "R": 80, "D": 150, "w": 3,
       "utility_t": {"points": [[0, 0], [100, 100], [200, 150]]}},
      {"src": "OR", "dst": "TO"}
    ]})", net);
  ASSERT_EQ(spec.size(), 2u);
  EXPECT_EQ(spec.commodities[0].w, 3);
  EXPECT_EQ(spec.commodities[0].utility_t(200), 150);
  EXPECT_EQ(spec.commodities[1].R, 0);
  EXPECT_TRUE(std::isinf(spec.commodities[1].D));
  EXPECT_EQ(spec.commodities[1].w, 1);
  EXPECT_EQ(spec.commodities[1].utility_t, PLFunction::identity());
  const ProblemSpec back = problem_from_json(problem_to_json(spec), net);
  EXPECT_EQ(problem_to_json(back), problem_to_json(spec));
  EXPECT_EQ(problem_to_json(spec)["commodities"][1]["D"], "inf");
}

TEST(ProblemJson, Errors) {
  const Network net = builtin_ec2();
  auto message = [&](const std::string& text) {
    try {
      parse_problem(text, net);
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("{\n\"objective\": \n}").find("line 3"), std::string::npos);
  EXPECT_NE(message(R"({"objective": "fastest", "commodities": []})").find("unknown objective"), std::string::npos);
  EXPECT_NE(message(R"({"objective": "sum-delay-penalty", "commodities": [{"src": "XX", "dst": "SI"}]})").find("unknown node"), std::string::npos);
  EXPECT_NE(message(R"({"objective": "sum-delay-penalty", "commodities": [{"src": "VA", "dst": "SI", "R": "lots"}]})").find("'R'"), std::string::npos);
  EXPECT_NE(message(R"({"objective": "sum-delay-penalty", "commodities": [{"src": "VA", "dst": "SI", "utility_d": {"points": [[0,0],[1,1],[2,4]]}}]})").find("intercept"), std::string::npos);
  EXPECT_NE(message(R"({"objective": "sum-delay-penalty", "commodities": []})").find("no commodities"), std::string::npos);
}
