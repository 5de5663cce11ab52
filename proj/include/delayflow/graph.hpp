#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "delayflow/errors.hpp"

namespace delayflow {

using NodeId = std::size_t;
using EdgeId = std::size_t;

// Residual capacity at or below this is treated as zero.
inline constexpr double kFeasibilityTol = 1e-9;

struct Edge {
  NodeId from;
  NodeId to;
  double delay_ms;
  double capacity_mbps;
};

// Directed network with constant per-link delay and capacity. Node ids are
// dense indices assigned in declaration order.
class Network {
 public:
  NodeId add_node(std::string name) {
    if (name.empty()) throw std::invalid_argument("empty node identifier");
    if (index_.contains(name)) {
      throw std::invalid_argument("duplicate node '" + name + "'");
    }
    const NodeId id = names_.size();
    index_.emplace(name, id);
    names_.push_back(std::move(name));
    out_.emplace_back();
    in_.emplace_back();
    return id;
  }

  EdgeId add_edge(NodeId from, NodeId to, double delay_ms,
                  double capacity_mbps) {
    if (from >= node_count() || to >= node_count()) {
      throw std::out_of_range("edge endpoint is not a node");
    }
    if (from == to) {
      throw std::invalid_argument("self-loop at '" + names_[from] + "'");
    }
    if (!(delay_ms >= 0.0) || !std::isfinite(delay_ms)) {
      throw std::invalid_argument("negative or non-finite delay");
    }
    if (!(capacity_mbps >= 0.0) || !std::isfinite(capacity_mbps)) {
      throw std::invalid_argument("negative or non-finite capacity");
    }
    const EdgeId id = edges_.size();
    edges_.push_back({from, to, delay_ms, capacity_mbps});
    out_[from].push_back(id);
    in_[to].push_back(id);
    return id;
  }

  std::size_t node_count() const { return names_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const Edge& edge(EdgeId e) const { return edges_.at(e); }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const EdgeId> out_edges(NodeId v) const { return out_.at(v); }
  std::span<const EdgeId> in_edges(NodeId v) const { return in_.at(v); }

  NodeId tail(EdgeId e) const { return edges_[e].from; }
  NodeId head(EdgeId e) const { return edges_[e].to; }

  const std::string& node_name(NodeId v) const { return names_.at(v); }

  std::optional<NodeId> find_node(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  NodeId node(std::string_view name) const {
    auto id = find_node(name);
    if (!id) throw std::invalid_argument("unknown node '" + std::string(name) + "'");
    return *id;
  }

  std::string edge_label(EdgeId e) const {
    return names_[edges_[e].from] + "->" + names_[edges_[e].to];
  }

  bool has_integer_delays() const {
    return std::all_of(edges_.begin(), edges_.end(), [](const Edge& e) {
      return e.delay_ms == std::floor(e.delay_ms);
    });
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeId>> out_;
  std::vector<std::vector<EdgeId>> in_;
};

// Ordered edge list from a source to a sink.
struct Path {
  std::vector<EdgeId> edges;

  bool operator==(const Path&) const = default;
};

inline double path_delay(const Network& net, const Path& p) {
  double d = 0.0;
  for (EdgeId e : p.edges) d += net.edge(e).delay_ms;
  return d;
}

inline std::vector<NodeId> path_nodes(const Network& net, const Path& p) {
  std::vector<NodeId> nodes;
  if (p.edges.empty()) return nodes;
  nodes.reserve(p.edges.size() + 1);
  nodes.push_back(net.tail(p.edges.front()));
  for (EdgeId e : p.edges) nodes.push_back(net.head(e));
  return nodes;
}

// True when p is a non-empty simple s->t path whose consecutive edges share
// endpoints.
inline bool is_simple_path(const Network& net, const Path& p, NodeId s,
                           NodeId t) {
  if (p.edges.empty()) return false;
  for (EdgeId e : p.edges) {
    if (e >= net.edge_count()) return false;
  }
  if (net.tail(p.edges.front()) != s || net.head(p.edges.back()) != t) {
    return false;
  }
  for (std::size_t k = 1; k < p.edges.size(); ++k) {
    if (net.head(p.edges[k - 1]) != net.tail(p.edges[k])) return false;
  }
  std::vector<bool> seen(net.node_count(), false);
  for (NodeId v : path_nodes(net, p)) {
    if (seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

// Compares two paths by the identifier sequence of the nodes they visit.
inline bool path_names_less(const Network& net, const Path& a, const Path& b) {
  const auto na = path_nodes(net, a);
  const auto nb = path_nodes(net, b);
  return std::lexicographical_compare(
      na.begin(), na.end(), nb.begin(), nb.end(),
      [&](NodeId x, NodeId y) { return net.node_name(x) < net.node_name(y); });
}

namespace detail {

inline std::optional<double> parse_number(std::string_view tok) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) toks.push_back(line.substr(i, j - i));
    i = j;
  }
  return toks;
}

}  // namespace detail

// Parses the line-oriented topology format:
//   node <id>
//   edge <u> <v> <delay_ms> <capacity_mbps>
//   uedge <u> <v> <delay_ms> <capacity_mbps>   (both directions)
// '#' starts a comment.
inline Network load_topology(std::string_view text) {
  Network net;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const auto toks = detail::split_ws(line);
    if (toks.empty()) {
      if (end == text.size()) break;
      continue;
    }
    try {
      if (toks[0] == "node") {
        if (toks.size() != 2) throw ParseError(line_no, "expected 'node <id>'");
        net.add_node(std::string(toks[1]));
      } else if (toks[0] == "edge" || toks[0] == "uedge") {
        if (toks.size() != 5) {
          throw ParseError(line_no, "expected '" + std::string(toks[0]) +
                                        " <u> <v> <delay_ms> <capacity_mbps>'");
        }
        auto u = net.find_node(toks[1]);
        auto v = net.find_node(toks[2]);
        if (!u) throw ParseError(line_no, "unknown node '" + std::string(toks[1]) + "'");
        if (!v) throw ParseError(line_no, "unknown node '" + std::string(toks[2]) + "'");
        auto d = detail::parse_number(toks[3]);
        auto c = detail::parse_number(toks[4]);
        if (!d) throw ParseError(line_no, "bad delay '" + std::string(toks[3]) + "'");
        if (!c) throw ParseError(line_no, "bad capacity '" + std::string(toks[4]) + "'");
        if (*d < 0) throw ParseError(line_no, "negative delay");
        if (*c < 0) throw ParseError(line_no, "negative capacity");
        net.add_edge(*u, *v, *d, *c);
        if (toks[0] == "uedge") net.add_edge(*v, *u, *d, *c);
      } else {
        throw ParseError(line_no, "unknown directive '" + std::string(toks[0]) + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ParseError(line_no, ex.what());
    }
    if (end == text.size()) break;
  }
  return net;
}

// Normalized form: all node lines, then one `edge` line per directed edge.
inline std::string serialize_topology(const Network& net) {
  std::string out;
  for (NodeId v = 0; v < net.node_count(); ++v) {
    out += "node " + net.node_name(v) + "\n";
  }
  for (const Edge& e : net.edges()) {
    out += "edge " + net.node_name(e.from) + " " + net.node_name(e.to) + " " +
           detail::format_number(e.delay_ms) + " " +
           detail::format_number(e.capacity_mbps) + "\n";
  }
  return out;
}

// Six Amazon EC2 datacenters as a complete undirected graph; each link is
// two independent directed edges with identical (delay ms, capacity Mbps).
inline Network builtin_ec2() {
  static constexpr std::string_view kTopology = R"(# Amazon EC2 inter-datacenter network
node OR
node VA
node IR
node TO
node SI
node SP
uedge OR VA 41 82
uedge OR IR 86 86
uedge OR TO 68 138
uedge OR SI 117 74
uedge OR SP 104 67
uedge VA IR 54 72
uedge VA TO 101 41
uedge VA SI 127 52
uedge VA SP 82 70
uedge IR TO 138 56
uedge IR SI 117 44
uedge IR SP 120 61
uedge TO SI 45 166
uedge TO SP 151 41
uedge SI SP 182 33
)";
  return load_topology(kTopology);
}

// Minimum-delay s->t path over edges with residual > kFeasibilityTol. Ties are
// broken by the lexicographic order of the visited node identifiers, then by
// edge index.
inline std::optional<Path> shortest_path_by_delay(const Network& net,
                                                  std::span<const double> residual,
                                                  NodeId s, NodeId t) {
  if (s >= net.node_count() || t >= net.node_count()) {
    throw std::out_of_range("shortest_path_by_delay: node not in network");
  }
  if (s == t) throw std::invalid_argument("shortest_path_by_delay: s == t");
  if (residual.size() != net.edge_count()) {
    throw std::invalid_argument("shortest_path_by_delay: residual size mismatch");
  }
  const auto usable = [&](EdgeId e) { return residual[e] > kFeasibilityTol; };
  constexpr double kInf = std::numeric_limits<double>::infinity();

  auto dijkstra = [&](NodeId src, bool reverse) {
    std::vector<double> dist(net.node_count(), kInf);
    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[src] = 0.0;
    pq.emplace(0.0, src);
    while (!pq.empty()) {
      auto [d, v] = pq.top();
      pq.pop();
      if (d > dist[v]) continue;
      for (EdgeId e : reverse ? net.in_edges(v) : net.out_edges(v)) {
        if (!usable(e)) continue;
        const NodeId w = reverse ? net.tail(e) : net.head(e);
        const double nd = d + net.edge(e).delay_ms;
        if (nd < dist[w]) {
          dist[w] = nd;
          pq.emplace(nd, w);
        }
      }
    }
    return dist;
  };

  const auto from_s = dijkstra(s, false);
  if (from_s[t] == kInf) return std::nullopt;
  const auto to_t = dijkstra(t, true);
  const double best = from_s[t];
  const double tie_tol = 1e-9 * std::max(1.0, best);

  // Depth-first walk over tight edges in name order yields the
  // lexicographically smallest shortest path.
  std::vector<EdgeId> order;
  std::vector<bool> on_path(net.node_count(), false);
  Path path;
  std::function<bool(NodeId, double)> dfs = [&](NodeId v, double dist_v) {
    if (v == t) return true;
    std::vector<EdgeId> cand;
    for (EdgeId e : net.out_edges(v)) {
      if (!usable(e)) continue;
      const NodeId w = net.head(e);
      if (on_path[w] || to_t[w] == kInf) continue;
      if (dist_v + net.edge(e).delay_ms + to_t[w] <= best + tie_tol) cand.push_back(e);
    }
    std::sort(cand.begin(), cand.end(), [&](EdgeId a, EdgeId b) {
      const auto& na = net.node_name(net.head(a));
      const auto& nb = net.node_name(net.head(b));
      if (na != nb) return na < nb;
      return a < b;
    });
    for (EdgeId e : cand) {
      const NodeId w = net.head(e);
      on_path[w] = true;
      path.edges.push_back(e);
      if (dfs(w, dist_v + net.edge(e).delay_ms)) return true;
      path.edges.pop_back();
      on_path[w] = false;
    }
    return false;
  };
  on_path[s] = true;
  if (!dfs(s, 0.0)) return std::nullopt;
  return path;
}

}  // namespace delayflow
