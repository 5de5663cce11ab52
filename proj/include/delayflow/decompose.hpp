#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "delayflow/errors.hpp"
#include "delayflow/graph.hpp"

namespace delayflow {

// Anything with dense node and arc indices, arc endpoints and outgoing-arc
// lists. Network models it; so does the time-expanded graph.
template <class G>
concept ArcGraph = requires(const G& g, std::size_t i) {
  { g.node_count() } -> std::convertible_to<std::size_t>;
  { g.edge_count() } -> std::convertible_to<std::size_t>;
  { g.tail(i) } -> std::convertible_to<std::size_t>;
  { g.head(i) } -> std::convertible_to<std::size_t>;
  g.out_edges(i);
};

// Rates at or below this are treated as absent.
inline constexpr double kRateTol = 1e-9;

struct PathFlow {
  Path path;
  double rate = 0.0;
};

namespace detail {

template <ArcGraph G>
void check_conservation(const G& g, std::size_t s, std::size_t t,
                        std::span<const double> flow) {
  if (flow.size() != g.edge_count()) {
    throw std::invalid_argument("edge flow size does not match edge count");
  }
  double scale = 1.0;
  for (double x : flow) {
    if (x < -1e-9) throw Error("negative edge flow");
    scale = std::max(scale, x);
  }
  std::vector<double> net(g.node_count(), 0.0);
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    net[g.tail(e)] += flow[e];
    net[g.head(e)] -= flow[e];
  }
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    if (v == s || v == t) continue;
    if (std::abs(net[v]) > 1e-6 * scale) {
      throw Error("flow conservation violated at node " + std::to_string(v));
    }
  }
}

// Finds a directed cycle in the support graph; returns its arcs in order, or
// nothing when the support is acyclic.
template <ArcGraph G>
std::vector<std::size_t> find_support_cycle(const G& g, std::span<const double> flow) {
  enum : unsigned char { kWhite, kGrey, kBlack };
  std::vector<unsigned char> color(g.node_count(), kWhite);
  std::vector<std::size_t> via(g.node_count(), 0);
  struct Frame {
    std::size_t node;
    std::size_t next;
  };
  for (std::size_t root = 0; root < g.node_count(); ++root) {
    if (color[root] != kWhite) continue;
    std::vector<Frame> stack{{root, 0}};
    color[root] = kGrey;
    while (!stack.empty()) {
      Frame& f = stack.back();
      const auto outs = g.out_edges(f.node);
      if (f.next == std::size(outs)) {
        color[f.node] = kBlack;
        stack.pop_back();
        continue;
      }
      const std::size_t e = outs[f.next++];
      if (flow[e] <= kRateTol) continue;
      const std::size_t w = g.head(e);
      if (color[w] == kGrey) {
        std::vector<std::size_t> cycle{e};
        std::size_t v = f.node;
        while (v != w) {
          cycle.push_back(via[v]);
          v = g.tail(via[v]);
        }
        std::reverse(cycle.begin(), cycle.end());
        return cycle;
      }
      if (color[w] == kWhite) {
        color[w] = kGrey;
        via[w] = e;
        stack.push_back({w, 0});
      }
    }
  }
  return {};
}

}  // namespace detail

// Removes flow cycles from one commodity's edge flow. Each round cancels the
// bottleneck of one cycle found by DFS, so the result is pointwise no larger
// than the input and has an acyclic support.
template <ArcGraph G>
std::vector<double> cancel_cycles(const G& g, std::size_t s, std::size_t t,
                                  std::vector<double> flow) {
  detail::check_conservation(g, s, t, flow);
  for (double& x : flow) {
    if (x <= kRateTol) x = 0.0;
  }
  while (true) {
    const auto cycle = detail::find_support_cycle(g, std::span<const double>(flow));
    if (cycle.empty()) break;
    std::size_t arg = cycle.front();
    for (std::size_t e : cycle) {
      if (flow[e] < flow[arg]) arg = e;
    }
    const double amount = flow[arg];
    for (std::size_t e : cycle) {
      flow[e] -= amount;
      if (flow[e] <= kRateTol) flow[e] = 0.0;
    }
    flow[arg] = 0.0;
  }
  return flow;
}

// Splits an acyclic edge flow into s->t path flows. Each round follows, from s,
// the positive outgoing arc with the smallest index and strips the bottleneck,
// so at most edge_count() paths are produced.
template <ArcGraph G>
std::vector<PathFlow> decompose(const G& g, std::size_t s, std::size_t t,
                                std::vector<double> flow) {
  detail::check_conservation(g, s, t, flow);
  for (double& x : flow) {
    if (x <= kRateTol) x = 0.0;
  }
  std::vector<PathFlow> out;
  auto source_outflow = [&] {
    double total = 0.0;
    for (std::size_t e : g.out_edges(s)) total += flow[e];
    return total;
  };
  std::vector<bool> visited(g.node_count(), false);
  while (source_outflow() > kRateTol) {
    Path walk;
    std::fill(visited.begin(), visited.end(), false);
    std::size_t v = s;
    visited[s] = true;
    bool stuck = false;
    while (v != t) {
      std::size_t next = g.edge_count();
      for (std::size_t e : g.out_edges(v)) {
        if (flow[e] > 0.0 && e < next) next = e;
      }
      if (next == g.edge_count()) {
        stuck = true;
        break;
      }
      walk.edges.push_back(next);
      v = g.head(next);
      if (visited[v]) throw Error("decompose: flow support contains a cycle");
      visited[v] = true;
    }
    double bottleneck = walk.edges.empty() ? 0.0 : flow[walk.edges.front()];
    for (std::size_t e : walk.edges) bottleneck = std::min(bottleneck, flow[e]);
    if (stuck) {
      // Residue left by floating-point cancellation is discarded; anything
      // larger means the input did not conserve flow.
      if (bottleneck > 1e-7) throw Error("decompose: flow cannot reach the sink");
      for (std::size_t e : walk.edges) {
        flow[e] -= bottleneck;
        if (flow[e] <= kRateTol) flow[e] = 0.0;
      }
      continue;
    }
    for (std::size_t e : walk.edges) {
      flow[e] -= bottleneck;
      if (flow[e] <= kRateTol) flow[e] = 0.0;
    }
    out.push_back({std::move(walk), bottleneck});
  }
  std::erase_if(out, [](const PathFlow& pf) { return pf.rate <= kRateTol; });
  return out;
}

}  // namespace delayflow
