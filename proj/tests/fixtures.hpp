#pragma once

#include <vector>

#include "delayflow/delayflow.hpp"

namespace fixtures {

using namespace delayflow;

// s -> t over a fast edge (d=1, c=1) and a slow edge (d=10, c=1).
inline Network two_parallel() {
  Network net;
  const NodeId s = net.add_node("s");
  const NodeId t = net.add_node("t");
  net.add_edge(s, t, 1, 1);
  net.add_edge(s, t, 10, 1);
  return net;
}

inline ProblemSpec two_parallel_tcdm(double R) {
  const std::vector<TcdmDemand> d{{0, 1, R, 1.0}};
  return make_tcdm(two_parallel(), d);
}

inline ProblemSpec two_parallel_with_bound(double R, double D) {
  ProblemSpec spec = two_parallel_tcdm(R);
  spec.commodities[0].D = D;
  return spec;
}

inline ProblemSpec ec2_tcdm(double R) {
  Network net = builtin_ec2();
  const std::vector<TcdmDemand> d{{net.node("VA"), net.node("SI"), R, 1.0},
                                  {net.node("OR"), net.node("TO"), R, 1.0}};
  return make_tcdm(net, d);
}

inline ProblemSpec ec2_dcum(double D) {
  Network net = builtin_ec2();
  const std::vector<DcumDemand> d{{net.node("VA"), net.node("SI"), D},
                                  {net.node("OR"), net.node("TO"), D}};
  return make_dcum(net, d);
}

inline std::vector<double> capacities(const Network& net) {
  std::vector<double> c(net.edge_count());
  for (EdgeId e = 0; e < net.edge_count(); ++e) c[e] = net.edge(e).capacity_mbps;
  return c;
}

}  // namespace fixtures
