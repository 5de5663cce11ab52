// Routes two video-conferencing demands across the EC2 network and compares
// every algorithm on the same instance.
#include <cstdio>
#include <vector>

#include "delayflow/delayflow.hpp"

int main() {
  using namespace delayflow;
  Network net = builtin_ec2();
  const std::vector<TcdmDemand> demands{{net.node("VA"), net.node("SI"), 200.0, 1.0},
                                        {net.node("OR"), net.node("TO"), 200.0, 1.0}};
  const ProblemSpec spec = make_tcdm(net, demands);

  std::vector<SolveReport> reports{pass(spec, 0.03), pass_t(spec), greedy(spec),
                                   exact_time_expanded(spec)};
  attach_lambda(spec, reports[1], 0.03);
  for (const SolveReport& r : reports) {
    std::printf("%-7s sum of max delays %7.2f ms  |f| = (%.1f, %.1f)  M = (%g, %g)\n",
                algorithm_name(r.algorithm).data(), r.objective, r.metrics[0].throughput,
                r.metrics[1].throughput, r.metrics[0].max_delay, r.metrics[1].max_delay);
  }
  for (const PathFlow& pf : reports[0].solution.flows[0]) {
    std::printf("  VA->SI via");
    for (NodeId v : path_nodes(spec.network, pf.path)) {
      std::printf(" %s", spec.network.node_name(v).c_str());
    }
    std::printf(": %.3f Mbps\n", pf.rate);
  }
  return 0;
}
