#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "delayflow/decompose.hpp"
#include "delayflow/errors.hpp"
#include "delayflow/graph.hpp"
#include "delayflow/lp.hpp"
#include "delayflow/pass.hpp"
#include "delayflow/problem.hpp"

namespace delayflow {

namespace detail {

// Adds `rate` on `path` to a commodity's path flow, merging equal paths.
inline void add_path_rate(std::vector<PathFlow>& flow, Path path, double rate) {
  for (PathFlow& pf : flow) {
    if (pf.path == path) {
      pf.rate += rate;
      return;
    }
  }
  flow.push_back({std::move(path), rate});
}

}  // namespace detail

// Shortest-path heuristic: commodities in index order, each repeatedly routed
// on the minimum-delay residual path. Delay objectives stop once R_i is met;
// throughput objectives keep pushing until no path within D_i remains.
inline SolveReport greedy(const ProblemSpec& spec) {
  spec.validate();
  detail::Stopwatch clock;
  const Network& net = spec.network;
  std::vector<double> residual(net.edge_count());
  for (EdgeId e = 0; e < net.edge_count(); ++e) residual[e] = net.edge(e).capacity_mbps;
  SolveReport report;
  report.algorithm = Algorithm::kGreedy;
  const bool delay_obj = is_delay_objective(spec.objective);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const Commodity& c = spec.commodities[i];
    std::vector<PathFlow> flow;
    const double need = delay_obj ? c.R : std::numeric_limits<double>::infinity();
    double pushed = 0.0;
    while (need - pushed > kRateTol) {
      auto p = shortest_path_by_delay(net, residual, c.source, c.sink);
      if (!p || path_delay(net, *p) > c.D) break;
      double amount = need - pushed;
      for (EdgeId e : p->edges) amount = std::min(amount, residual[e]);
      for (EdgeId e : p->edges) {
        residual[e] -= amount;
        if (residual[e] <= kFeasibilityTol) residual[e] = 0.0;
      }
      pushed += amount;
      detail::add_path_rate(flow, std::move(*p), amount);
    }
    if (pushed < c.R - kRateTol * std::max(1.0, c.R)) {
      report.infeasible = true;
      if (!report.note.empty()) report.note += "; ";
      report.note += "commodity " + std::to_string(i + 1) + " reached " +
                     detail::format_number(pushed) + " of " + detail::format_number(c.R);
    }
    report.solution.flows.push_back(std::move(flow));
  }
  finalize_report(spec, report);
  report.wall_ms = clock.elapsed_ms();
  return report;
}

// One commodity's time-expanded network for a deadline: node (v, tau) means
// "at v at time tau". Only nodes reachable from (s, 0) that can still reach t
// by the deadline are kept; every (t, tau) has an arrival arc into a single
// super sink. Node 0 is (s, 0) and node 1 the super sink.
class TimeExpandedGraph {
 public:
  struct Arc {
    std::size_t from;
    std::size_t to;
    std::optional<EdgeId> edge;  // empty for arrival arcs
  };

  static constexpr std::size_t kSource = 0;
  static constexpr std::size_t kSink = 1;

  TimeExpandedGraph(const Network& net, NodeId s, NodeId t, long deadline,
                    std::span<const long> dist_to_t) {
    add_node(s, 0);
    add_node(t, -1);
    if (dist_to_t[s] > deadline) return;
    std::vector<std::vector<std::pair<long, std::size_t>>> seen(net.node_count());
    seen[s].push_back({0, kSource});
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      if (k == kSink) continue;
      const auto [v, tau] = nodes_[k];
      if (v == t) {
        add_arc(k, kSink, std::nullopt);
        continue;
      }
      for (EdgeId e : net.out_edges(v)) {
        const Edge& ed = net.edge(e);
        if (ed.capacity_mbps <= 0.0 || ed.to == s) continue;
        const long arrive = tau + std::lround(ed.delay_ms);
        if (dist_to_t[ed.to] < 0 || arrive + dist_to_t[ed.to] > deadline) continue;
        auto& slot = seen[ed.to];
        auto it = std::find_if(slot.begin(), slot.end(),
                               [&](const auto& p) { return p.first == arrive; });
        std::size_t w;
        if (it == slot.end()) {
          w = add_node(ed.to, arrive);
          slot.push_back({arrive, w});
        } else {
          w = it->second;
        }
        add_arc(k, w, e);
      }
    }
  }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return arcs_.size(); }
  std::size_t tail(std::size_t a) const { return arcs_[a].from; }
  std::size_t head(std::size_t a) const { return arcs_[a].to; }
  std::span<const std::size_t> out_edges(std::size_t v) const { return out_[v]; }
  std::span<const std::size_t> in_edges(std::size_t v) const { return in_[v]; }
  const Arc& arc(std::size_t a) const { return arcs_[a]; }
  // Network node and time of an expanded node (time -1 for the super sink).
  std::pair<NodeId, long> node(std::size_t k) const { return nodes_[k]; }

 private:
  std::size_t add_node(NodeId v, long tau) {
    nodes_.push_back({v, tau});
    out_.emplace_back();
    in_.emplace_back();
    return nodes_.size() - 1;
  }
  void add_arc(std::size_t from, std::size_t to, std::optional<EdgeId> e) {
    arcs_.push_back({from, to, e});
    out_[from].push_back(arcs_.size() - 1);
    in_[to].push_back(arcs_.size() - 1);
  }

  std::vector<std::pair<NodeId, long>> nodes_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
};

namespace detail {

// Integer delay distance from every node to t over edges with capacity; -1
// when t is unreachable.
inline std::vector<long> distances_to(const Network& net, NodeId t) {
  std::vector<long> dist(net.node_count(), -1);
  using Item = std::pair<long, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[t] = 0;
  pq.push({0, t});
  while (!pq.empty()) {
    const auto [d, v] = pq.top();
    pq.pop();
    if (d != dist[v]) continue;
    for (EdgeId e : net.in_edges(v)) {
      if (net.edge(e).capacity_mbps <= 0.0) continue;
      const NodeId u = net.tail(e);
      const long nd = d + std::lround(net.edge(e).delay_ms);
      if (dist[u] < 0 || nd < dist[u]) {
        dist[u] = nd;
        pq.push({nd, u});
      }
    }
  }
  return dist;
}

// Distinct delays of simple s->t paths over edges with capacity, ascending.
// Returns nothing when the search exceeds `budget` steps.
inline std::optional<std::vector<long>> simple_path_delays(const Network& net, NodeId s, NodeId t,
                                                           std::size_t budget) {
  std::set<long> found;
  std::vector<bool> on_path(net.node_count(), false);
  std::size_t steps = 0;
  bool exhausted = false;
  std::function<void(NodeId, long)> dfs = [&](NodeId v, long d) {
    if (exhausted) return;
    if (++steps > budget) {
      exhausted = true;
      return;
    }
    if (v == t) {
      found.insert(d);
      return;
    }
    on_path[v] = true;
    for (EdgeId e : net.out_edges(v)) {
      const Edge& ed = net.edge(e);
      if (ed.capacity_mbps <= 0.0 || on_path[ed.to]) continue;
      dfs(ed.to, d + std::lround(ed.delay_ms));
    }
    on_path[v] = false;
  };
  dfs(s, 0);
  if (exhausted) return std::nullopt;
  return std::vector<long>(found.begin(), found.end());
}

// Removes loops from a walk, keeping the first visit of each node.
inline Path shortcut_walk(const Network& net, const std::vector<EdgeId>& walk) {
  Path p;
  std::vector<std::size_t> pos(net.node_count(), SIZE_MAX);
  if (walk.empty()) return p;
  pos[net.tail(walk.front())] = 0;
  for (EdgeId e : walk) {
    const NodeId w = net.head(e);
    if (pos[w] != SIZE_MAX) {
      while (p.edges.size() > pos[w]) {
        pos[net.head(p.edges.back())] = SIZE_MAX;
        p.edges.pop_back();
      }
      continue;
    }
    p.edges.push_back(e);
    pos[w] = p.edges.size();
  }
  return p;
}

// Joint time-expanded LP for a deadline per commodity. In delay mode it is a
// feasibility problem with |f_i| = R_i; in throughput mode it maximizes the
// utility epigraph with |f_i| >= R_i.
struct TimeExpandedModel {
  LinearProgram lp;
  std::vector<std::optional<TimeExpandedGraph>> graphs;
  std::vector<std::size_t> offset;
};

inline TimeExpandedModel build_time_expanded_model(const ProblemSpec& spec,
                                                   std::span<const long> deadline,
                                                   const std::vector<bool>& active,
                                                   std::span<const std::vector<long>> dist,
                                                   bool delay_mode) {
  const Network& net = spec.network;
  TimeExpandedModel m;
  LinearProgram& lp = m.lp;
  lp.sense = Sense::kMaximize;
  std::vector<std::vector<LpTerm>> capacity(net.edge_count());
  std::vector<std::vector<LpTerm>> out_of_source(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) {
    m.offset.push_back(lp.variable_count());
    if (!active[i]) {
      m.graphs.emplace_back();
      continue;
    }
    const Commodity& c = spec.commodities[i];
    m.graphs.emplace_back(std::in_place, net, c.source, c.sink, deadline[i], dist[i]);
    const TimeExpandedGraph& g = *m.graphs.back();
    const std::size_t base = lp.variable_count();
    for (std::size_t a = 0; a < g.edge_count(); ++a) {
      lp.add_variable();
      if (g.arc(a).edge) capacity[*g.arc(a).edge].push_back({base + a, 1.0});
    }
    for (std::size_t v = 0; v < g.node_count(); ++v) {
      if (v == TimeExpandedGraph::kSource || v == TimeExpandedGraph::kSink) continue;
      std::vector<LpTerm> terms;
      for (std::size_t a : g.out_edges(v)) terms.push_back({base + a, 1.0});
      for (std::size_t a : g.in_edges(v)) terms.push_back({base + a, -1.0});
      lp.add_constraint(std::move(terms), Relation::kEqual, 0.0);
    }
    for (std::size_t a : g.out_edges(TimeExpandedGraph::kSource)) {
      out_of_source[i].push_back({base + a, 1.0});
    }
    if (delay_mode) {
      lp.add_constraint(out_of_source[i], Relation::kEqual, c.R);
    } else if (c.R > 0.0) {
      lp.add_constraint(out_of_source[i], Relation::kGreaterEqual, c.R);
    }
  }
  for (EdgeId e = 0; e < net.edge_count(); ++e) {
    if (!capacity[e].empty()) {
      lp.add_constraint(std::move(capacity[e]), Relation::kLessEqual, net.edge(e).capacity_mbps);
    }
  }
  if (!delay_mode) {
    const bool maxmin = is_maxmin_objective(spec.objective);
    std::optional<std::size_t> shared;
    if (maxmin) shared = lp.add_variable(1.0);
    for (std::size_t i = 0; i < spec.size(); ++i) {
      const Commodity& c = spec.commodities[i];
      const std::size_t z = maxmin ? *shared : lp.add_variable(1.0);
      for (const auto& line : c.utility_t.segment_lines()) {
        std::vector<LpTerm> terms{{z, 1.0}};
        for (LpTerm t : out_of_source[i]) terms.push_back({t.var, -c.w * line.slope});
        lp.add_constraint(std::move(terms), Relation::kLessEqual, c.w * line.intercept);
      }
    }
  }
  return m;
}

inline FlowSolution recover_time_expanded_flow(const ProblemSpec& spec,
                                               const TimeExpandedModel& m,
                                               std::span<const double> x) {
  FlowSolution sol;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    std::vector<PathFlow> flow;
    if (m.graphs[i]) {
      const TimeExpandedGraph& g = *m.graphs[i];
      std::vector<double> xi(g.edge_count());
      for (std::size_t a = 0; a < g.edge_count(); ++a) xi[a] = std::max(0.0, x[m.offset[i] + a]);
      auto acyclic = cancel_cycles(g, TimeExpandedGraph::kSource, TimeExpandedGraph::kSink,
                                   std::move(xi));
      for (const PathFlow& pf : decompose(g, TimeExpandedGraph::kSource,
                                          TimeExpandedGraph::kSink, std::move(acyclic))) {
        std::vector<EdgeId> walk;
        for (std::size_t a : pf.path.edges) {
          if (g.arc(a).edge) walk.push_back(*g.arc(a).edge);
        }
        add_path_rate(flow, shortcut_walk(spec.network, walk), pf.rate);
      }
      std::sort(flow.begin(), flow.end(), [&](const PathFlow& a, const PathFlow& b) {
        return path_names_less(spec.network, a.path, b.path);
      });
    }
    sol.flows.push_back(std::move(flow));
  }
  return sol;
}

}  // namespace detail

struct ExactOptions {
  // Maximum number of time-expanded LPs solved while enumerating deadlines.
  std::size_t lp_budget = 200000;
  // Step budget of the simple-path search that yields candidate deadlines;
  // when exceeded every integer in [shortest, cap] is a candidate.
  std::size_t path_search_budget = 2000000;
};

// Exact optimum for integer edge delays via time-expanded networks. Throughput
// objectives need one LP at deadlines D_i. Delay objectives enumerate deadline
// vectors drawn from the achievable path delays, cheapest first, keeping the
// best one whose time-expanded LP is feasible.
inline SolveReport exact_time_expanded(const ProblemSpec& spec, ExactOptions opts = {}) {
  spec.validate();
  const Network& net = spec.network;
  if (!net.has_integer_delays()) {
    throw std::invalid_argument("exact solver: integer delays required");
  }
  detail::Stopwatch clock;
  const std::size_t K = spec.size();
  const bool delay_mode = is_delay_objective(spec.objective);

  std::vector<std::vector<long>> dist(K);
  std::vector<std::vector<long>> candidates(K);
  std::vector<bool> active(K, true);
  std::vector<long> cap(K, 0);
  for (std::size_t i = 0; i < K; ++i) {
    const Commodity& c = spec.commodities[i];
    dist[i] = detail::distances_to(net, c.sink);
    if (delay_mode && c.R <= 0.0) {
      active[i] = false;
      continue;
    }
    long longest = 0;
    auto delays = detail::simple_path_delays(net, c.source, c.sink, opts.path_search_budget);
    if (delays) {
      longest = delays->empty() ? 0 : delays->back();
    } else {
      for (const Edge& e : net.edges()) longest += std::lround(e.delay_ms);
    }
    cap[i] = std::isfinite(c.D) ? std::min<long>(longest, static_cast<long>(std::floor(c.D)))
                                : longest;
    if (delays) {
      for (long d : *delays) {
        if (d <= cap[i]) candidates[i].push_back(d);
      }
    } else if (dist[i][c.source] >= 0) {
      for (long d = dist[i][c.source]; d <= cap[i]; ++d) candidates[i].push_back(d);
    }
  }

  SolveReport report;
  report.algorithm = Algorithm::kExact;
  std::size_t lp_count = 0;
  auto solve_at = [&](std::span<const long> deadline)
      -> std::optional<std::pair<detail::TimeExpandedModel, LpSolution>> {
    if (++lp_count > opts.lp_budget) {
      throw Error("exact solver: enumeration budget of " + std::to_string(opts.lp_budget) +
                  " LPs exceeded");
    }
    auto model = detail::build_time_expanded_model(spec, deadline, active, dist, delay_mode);
    auto sol = solve_lp(model.lp);
    if (sol.status != LpStatus::kOptimal) return std::nullopt;
    return std::make_pair(std::move(model), std::move(sol));
  };

  if (!delay_mode) {
    auto found = solve_at(cap);
    if (!found) {
      throw InfeasibleError("exact solver: no flow meets the requirements within the deadlines");
    }
    report.solution = detail::recover_time_expanded_flow(spec, found->first, found->second.x);
    finalize_report(spec, report);
    report.wall_ms = clock.elapsed_ms();
    return report;
  }

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < K; ++i) {
    if (!active[i]) continue;
    if (candidates[i].empty()) {
      throw InfeasibleError("exact solver: commodity " + std::to_string(i + 1) +
                            " has no path within its delay bound");
    }
    order.push_back(i);
  }
  const bool maxmin = is_maxmin_objective(spec.objective);
  auto combine = [&](double acc, double v) { return maxmin ? std::max(acc, v) : acc + v; };
  auto cost = [&](std::size_t i, long d) {
    return spec.commodities[i].delay_penalty(static_cast<double>(d));
  };
  // Commodities without demand contribute their penalty at zero delay.
  double base = maxmin ? -std::numeric_limits<double>::infinity() : 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    if (!active[i]) base = combine(base, spec.commodities[i].delay_penalty(0.0));
  }

  // A feasible greedy solution bounds the optimum from above.
  double limit = std::numeric_limits<double>::infinity();
  {
    const SolveReport g = greedy(spec);
    if (!g.infeasible) limit = g.objective + 1e-9 * (1.0 + std::abs(g.objective));
  }
  std::optional<std::pair<detail::TimeExpandedModel, LpSolution>> best;
  std::vector<long> deadline(K, 0);
  auto record = [&](double value, std::pair<detail::TimeExpandedModel, LpSolution> found) {
    best = std::move(found);
    limit = value - 1e-9 * (1.0 + std::abs(value));
  };
  auto feasible = [&](std::size_t i, long d) {
    deadline[i] = d;
    return solve_at(deadline);
  };

  const std::size_t m = order.size();
  // Lower bound on what commodities order[k..] add: their cheapest deadlines.
  std::vector<double> tail_bound(m + 1, maxmin ? -std::numeric_limits<double>::infinity() : 0.0);
  for (std::size_t k = m; k-- > 0;) {
    tail_bound[k] = combine(tail_bound[k + 1], cost(order[k], candidates[order[k]].front()));
  }

  std::function<void(std::size_t, double)> search = [&](std::size_t k, double acc) {
    if (k + 1 == m) {
      // Single remaining commodity: feasibility is monotone in its deadline.
      const std::size_t i = order[k];
      const auto& c = candidates[i];
      long jmax = static_cast<long>(c.size()) - 1;
      while (jmax >= 0 && combine(acc, cost(i, c[jmax])) > limit) --jmax;
      if (jmax < 0) return;
      auto top = feasible(i, c[jmax]);
      if (!top) return;
      long lo = 0;
      long hi = jmax;
      while (lo < hi) {
        const long mid = (lo + hi) / 2;
        if (auto f = feasible(i, c[mid])) {
          hi = mid;
          top = std::move(f);
        } else {
          lo = mid + 1;
        }
      }
      record(combine(acc, cost(i, c[hi])), std::move(*top));
      return;
    }
    if (k + 2 == m) {
      // Last two commodities: as the first deadline grows, the smallest
      // feasible second deadline can only shrink, so walk a staircase.
      const std::size_t i = order[k];
      const std::size_t j = order[k + 1];
      const auto& ci = candidates[i];
      const auto& cj = candidates[j];
      long hi = static_cast<long>(cj.size()) - 1;
      for (long a : ci) {
        const double pa = combine(acc, cost(i, a));
        if (combine(pa, cost(j, cj.front())) > limit) break;
        deadline[i] = a;
        long b = hi;
        while (b >= 0 && combine(pa, cost(j, cj[b])) > limit) --b;
        if (b < 0) continue;
        auto top = feasible(j, cj[b]);
        if (!top) continue;
        while (b > 0) {
          auto f = feasible(j, cj[b - 1]);
          if (!f) break;
          top = std::move(f);
          --b;
        }
        hi = b;
        record(combine(pa, cost(j, cj[b])), std::move(*top));
      }
      return;
    }
    const std::size_t i = order[k];
    for (long a : candidates[i]) {
      const double pa = combine(acc, cost(i, a));
      if (combine(pa, tail_bound[k + 1]) > limit) break;
      deadline[i] = a;
      search(k + 1, pa);
    }
  };
  if (m > 0) {
    search(0, base);
  } else {
    best = solve_at(deadline);
  }
  if (!best) {
    throw InfeasibleError("exact solver: no deadline vector admits a feasible flow");
  }
  report.solution = detail::recover_time_expanded_flow(spec, best->first, best->second.x);
  report.note = std::to_string(lp_count) + " time-expanded LPs";
  finalize_report(spec, report);
  report.wall_ms = clock.elapsed_ms();
  return report;
}

}  // namespace delayflow
