#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "delayflow/errors.hpp"
#include "delayflow/graph.hpp"
#include "delayflow/lp.hpp"
#include "delayflow/problem.hpp"

namespace delayflow {

struct RandomInstanceOptions {
  std::size_t min_nodes = 3;
  std::size_t max_nodes = 8;
  long max_delay = 10;        // delays are integers in [1, max_delay]
  long max_capacity = 20;     // capacities are integers in [1, max_capacity]
  unsigned edge_percent = 35; // chance of each extra ordered pair becoming an edge
  std::size_t max_commodities = 2;
};

namespace detail {

// Uniform draws via modulo so instances are identical on every platform.
class SeededDraw {
 public:
  explicit SeededDraw(std::uint64_t seed) : rng_(seed) {}
  std::uint64_t below(std::uint64_t n) { return rng_() % n; }
  long between(long lo, long hi) { return lo + static_cast<long>(below(static_cast<std::uint64_t>(hi - lo + 1))); }
  bool chance(unsigned percent) { return below(100) < percent; }

 private:
  std::mt19937_64 rng_;
};

inline PLFunction random_concave(SeededDraw& draw) {
  std::vector<Breakpoint> pts{{0.0, static_cast<double>(draw.between(0, 2))}};
  double slope = static_cast<double>(draw.between(1, 4));
  const long segments = draw.between(1, 3);
  for (long k = 0; k < segments; ++k) {
    const double a = pts.back().a + static_cast<double>(draw.between(2, 10));
    pts.push_back({a, pts.back().u + slope * (a - pts.back().a)});
    slope *= 0.5;
  }
  return PLFunction(std::move(pts));
}

// Convex with non-negative segment intercepts: slopes grow slowly enough that
// each line still passes above the origin.
inline PLFunction random_scaled_convex(SeededDraw& draw) {
  std::vector<Breakpoint> pts{{0.0, static_cast<double>(draw.between(0, 5))}};
  double slope = static_cast<double>(draw.between(1, 3));
  const long segments = draw.between(1, 3);
  for (long k = 0; k < segments; ++k) {
    const double a = pts.back().a + static_cast<double>(draw.between(5, 30));
    pts.push_back({a, pts.back().u + slope * (a - pts.back().a)});
    const double intercept_room = pts.back().u / pts.back().a;  // keeps intercept >= 0
    slope = std::min(slope + static_cast<double>(draw.between(0, 2)), intercept_room);
  }
  PLFunction f(std::move(pts));
  if (validate_utility_d(f)) return PLFunction::identity();
  return f;
}

inline bool counterpart_feasible(const ProblemSpec& spec) {
  try {
    return solve_lp(build_counterpart(spec).lp).status == LpStatus::kOptimal;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

}  // namespace detail

// Small random problem for property tests: a strongly connected digraph with
// integer delays, one or two commodities, a random objective and utilities
// that satisfy the validation rules. Requirements are shrunk until the
// average-delay counterpart is feasible.
inline ProblemSpec random_instance(std::uint64_t seed, const RandomInstanceOptions& opts = {}) {
  detail::SeededDraw draw(seed);
  const std::size_t n = static_cast<std::size_t>(
      draw.between(static_cast<long>(opts.min_nodes), static_cast<long>(opts.max_nodes)));
  Network net;
  for (std::size_t v = 0; v < n; ++v) net.add_node("n" + std::to_string(v));
  auto add = [&](NodeId u, NodeId v) {
    net.add_edge(u, v, static_cast<double>(draw.between(1, opts.max_delay)),
                 static_cast<double>(draw.between(1, opts.max_capacity)));
  };
  std::vector<std::vector<bool>> has(n, std::vector<bool>(n, false));
  // A directed ring keeps every node pair connected.
  for (NodeId v = 0; v < n; ++v) {
    add(v, (v + 1) % n);
    has[v][(v + 1) % n] = true;
  }
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = 0; v < n; ++v) {
      if (u != v && !has[u][v] && draw.chance(opts.edge_percent)) add(u, v);
    }
  }

  ProblemSpec spec;
  spec.network = std::move(net);
  spec.objective = static_cast<Objective>(draw.below(4));
  const bool delay_obj = is_delay_objective(spec.objective);
  const std::size_t K = static_cast<std::size_t>(draw.between(1, static_cast<long>(opts.max_commodities)));
  for (std::size_t i = 0; i < K; ++i) {
    Commodity c;
    c.source = static_cast<NodeId>(draw.below(n));
    c.sink = static_cast<NodeId>((c.source + 1 + draw.below(n - 1)) % n);
    c.w = static_cast<double>(draw.between(1, 5));
    c.R = static_cast<double>(draw.between(delay_obj ? 1 : 0, 2 * opts.max_capacity / 3));
    const auto path = shortest_path_by_delay(
        spec.network, std::vector<double>(spec.network.edge_count(), 1.0), c.source, c.sink);
    const double shortest = path ? path_delay(spec.network, *path) : 1.0;
    // Finite bounds everywhere except some delay-objective instances.
    if (!delay_obj || draw.chance(50)) {
      c.D = shortest + static_cast<double>(draw.between(0, 2 * opts.max_delay));
    }
    if (delay_obj) {
      c.utility_d = draw.chance(50) ? PLFunction::identity() : detail::random_scaled_convex(draw);
    } else {
      c.utility_t = draw.chance(50) ? PLFunction::identity() : detail::random_concave(draw);
    }
    spec.commodities.push_back(std::move(c));
  }
  for (int attempt = 0; attempt < 12 && !detail::counterpart_feasible(spec); ++attempt) {
    for (Commodity& c : spec.commodities) c.R = std::floor(c.R / 2.0 * 4.0) / 4.0;
    if (delay_obj) {
      for (Commodity& c : spec.commodities) c.R = std::max(c.R, 0.25);
    }
  }
  spec.validate();
  return spec;
}

}  // namespace delayflow
