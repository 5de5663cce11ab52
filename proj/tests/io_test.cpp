#include <gtest/gtest.h>

#include <cstdlib>

#include "fixtures.hpp"

using namespace delayflow;

namespace {

LoadedReport reload(const json& j) { return report_from_json(json::parse(j.dump())); }

bool mentions(const std::vector<std::string>& issues, const std::string& needle) {
  for (const auto& m : issues) {
    if (m.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(Report, RoundTripVerifiesForEveryAlgorithm) {
  const ProblemSpec dcum = fixtures::ec2_dcum(150);
  const ProblemSpec tcdm = fixtures::ec2_tcdm(230);
  std::vector<std::pair<const ProblemSpec*, SolveReport>> runs{
      {&tcdm, pass(tcdm, 0.03)}, {&tcdm, pass_t(tcdm)},    {&tcdm, greedy(tcdm)},
      {&tcdm, exact_time_expanded(tcdm)}, {&dcum, pass(dcum, 0.5)}, {&dcum, pass_m(dcum)},
      {&dcum, exact_time_expanded(dcum)}};
  attach_lambda(tcdm, runs[1].second, 0.03);
  for (const auto& [spec, r] : runs) {
    const LoadedReport back = reload(report_to_json(*spec, r));
    EXPECT_EQ(back.report.algorithm, r.algorithm);
    EXPECT_EQ(back.report.spec_digest, spec_digest(back.spec));
    EXPECT_TRUE(verify_report(back.spec, back.report, 1e-6).empty())
        << algorithm_name(r.algorithm);
  }
}

TEST(Report, LambdaAndRatioBoundFields) {
  const ProblemSpec spec = fixtures::two_parallel_with_bound(2, 5.5);
  SolveReport t = pass_t(spec);
  EXPECT_TRUE(report_to_json(spec, t)["lambda"].is_null());
  attach_lambda(spec, t, 0.5);
  EXPECT_EQ(report_to_json(spec, t)["lambda"], 10.0);
  t.lambda->unbounded = true;
  EXPECT_EQ(report_to_json(spec, t)["lambda"], "unbounded");
  EXPECT_TRUE(reload(report_to_json(spec, t)).report.lambda->unbounded);
  const json m = report_to_json(spec, pass_m(spec));
  EXPECT_EQ(m["delay_ratio_bound"], 2.0);
}

TEST(Verify, TamperedRateNamesTheEdge) {
  const ProblemSpec spec = fixtures::two_parallel_tcdm(2);
  json j = report_to_json(spec, pass(spec, 0.5));
  j["commodities"][0]["paths"][0]["rate"] = 1.5;
  const LoadedReport back = reload(j);
  const auto issues = verify_report(back.spec, back.report, 1e-6);
  ASSERT_FALSE(issues.empty());
  EXPECT_TRUE(mentions(issues, "capacity exceeded on edge s->t")) << issues[0];
}

TEST(Verify, TamperedMetricsAndObjective) {
  const ProblemSpec spec = fixtures::two_parallel_tcdm(2);
  json j = report_to_json(spec, greedy(spec));
  j["commodities"][0]["max_delay"] = 3.0;
  j["objective"] = 3.0;
  const LoadedReport back = reload(j);
  const auto issues = verify_report(back.spec, back.report, 1e-6);
  EXPECT_TRUE(mentions(issues, "max delay differs"));
  EXPECT_TRUE(mentions(issues, "recorded objective 3"));
}

TEST(Verify, UnderstatedLambdaBreaksRelaxedBound) {
  const ProblemSpec spec = fixtures::two_parallel_with_bound(2, 5.5);
  SolveReport t = pass_t(spec);
  attach_lambda(spec, t, 0.5);
  json j = report_to_json(spec, t);
  j["lambda"] = 0.1;
  const LoadedReport back = reload(j);
  EXPECT_TRUE(mentions(verify_report(back.spec, back.report, 1e-6), "relaxed delay bound"));
}

TEST(Verify, PassDeletionAmountAndEpsilonBounds) {
  const ProblemSpec spec = fixtures::two_parallel_tcdm(2);
  json j = report_to_json(spec, pass(spec, 0.5));
  j["epsilon"] = 0.25;
  LoadedReport back = reload(j);
  EXPECT_TRUE(mentions(verify_report(back.spec, back.report, 1e-6), "removed rate"));
  j["epsilon"] = 1.0;
  back = reload(j);
  EXPECT_TRUE(mentions(verify_report(back.spec, back.report, 1e-6), "epsilon in (0, 1)"));
}

TEST(Verify, PassMEpsilonsAreRecomputed) {
  const ProblemSpec spec = fixtures::two_parallel_with_bound(2, 5.5);
  json j = report_to_json(spec, pass_m(spec));
  j["epsilon_max"] = 0.1;
  const LoadedReport back = reload(j);
  EXPECT_TRUE(mentions(verify_report(back.spec, back.report, 1e-6), "epsilon_max"));
}

TEST(Verify, DigestMismatch) {
  const ProblemSpec spec = fixtures::two_parallel_tcdm(2);
  json j = report_to_json(spec, greedy(spec));
  j["spec_digest"] = "0000000000000000";
  const LoadedReport back = reload(j);
  EXPECT_TRUE(mentions(verify_report(back.spec, back.report, 1e-6), "digest"));
}

TEST(Verify, ToleranceFromEnvironment) {
  ::unsetenv("DELAYFLOW_TOL");
  EXPECT_EQ(verification_tolerance(), 1e-6);
  ::setenv("DELAYFLOW_TOL", "0.01", 1);
  EXPECT_EQ(verification_tolerance(), 0.01);
  ::setenv("DELAYFLOW_TOL", "junk", 1);
  EXPECT_EQ(verification_tolerance(), 1e-6);
  ::unsetenv("DELAYFLOW_TOL");
  // A loose tolerance accepts a small overload that the default rejects.
  const ProblemSpec spec = fixtures::two_parallel_tcdm(2);
  json j = report_to_json(spec, greedy(spec));
  j["commodities"][0]["paths"][0]["rate"] = 1.001;
  const LoadedReport back = reload(j);
  EXPECT_FALSE(verify_report(back.spec, back.report, 1e-6).empty());
  EXPECT_TRUE(check_flow(back.spec, back.report.solution, 0.01).empty());
}

TEST(Report, RejectsForeignDocuments) {
  EXPECT_THROW(report_from_json(json::parse(R"({"format": "other"})")), ParseError);
  EXPECT_THROW(report_from_json(json::parse(R"({"format": "delayflow-report/1"})")), ParseError);
}
