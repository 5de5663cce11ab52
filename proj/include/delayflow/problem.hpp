#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "delayflow/decompose.hpp"
#include "delayflow/errors.hpp"
#include "delayflow/graph.hpp"
#include "delayflow/lp.hpp"

namespace delayflow {

inline constexpr double kUnboundedDelay = std::numeric_limits<double>::infinity();

struct Breakpoint {
  double a;
  double u;
};

// Piecewise-linear function on [0, inf) through the given breakpoints; the
// last segment extends with its slope (a single breakpoint is a constant).
class PLFunction {
 public:
  struct Line {
    double slope;
    double intercept;
  };

  PLFunction() : PLFunction(std::vector<Breakpoint>{{0.0, 0.0}, {1.0, 1.0}}) {}

  explicit PLFunction(std::vector<Breakpoint> points) : points_(std::move(points)) {
    if (points_.empty()) throw std::invalid_argument("utility needs at least one breakpoint");
    if (points_.front().a != 0.0) throw std::invalid_argument("first breakpoint must be at a = 0");
    for (std::size_t k = 0; k < points_.size(); ++k) {
      if (!std::isfinite(points_[k].a) || !std::isfinite(points_[k].u)) {
        throw std::invalid_argument("utility breakpoints must be finite");
      }
      if (k > 0 && !(points_[k].a > points_[k - 1].a)) {
        throw std::invalid_argument("utility breakpoints must be strictly increasing in a");
      }
    }
  }

  static PLFunction identity() { return PLFunction(); }
  static PLFunction linear(double slope, double intercept = 0.0) {
    return PLFunction({{0.0, intercept}, {1.0, intercept + slope}});
  }

  std::span<const Breakpoint> points() const { return points_; }

  // One line per segment, in order of increasing a.
  std::vector<Line> segment_lines() const {
    std::vector<Line> lines;
    if (points_.size() == 1) {
      lines.push_back({0.0, points_.front().u});
      return lines;
    }
    for (std::size_t k = 0; k + 1 < points_.size(); ++k) {
      const double slope = (points_[k + 1].u - points_[k].u) / (points_[k + 1].a - points_[k].a);
      lines.push_back({slope, points_[k].u - slope * points_[k].a});
    }
    return lines;
  }

  double operator()(double a) const {
    const auto lines = segment_lines();
    std::size_t k = 0;
    while (k + 1 < lines.size() && a > points_[k + 1].a) ++k;
    return lines[k].slope * a + lines[k].intercept;
  }

  bool operator==(const PLFunction& o) const {
    if (points_.size() != o.points_.size()) return false;
    for (std::size_t k = 0; k < points_.size(); ++k) {
      if (points_[k].a != o.points_[k].a || points_[k].u != o.points_[k].u) return false;
    }
    return true;
  }

 private:
  std::vector<Breakpoint> points_;
};

namespace detail {
inline bool slope_le(double a, double b) { return a <= b + 1e-12 * (1.0 + std::abs(b)); }
}  // namespace detail

// Throughput utilities must be concave, non-decreasing and non-negative.
// Returns a description of the first violation, or nothing when valid.
inline std::optional<std::string> validate_utility_t(const PLFunction& u) {
  if (u.points().front().u < 0.0) return "utility is negative at 0";
  const auto lines = u.segment_lines();
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (lines[k].slope < 0.0) {
      return "segment " + std::to_string(k + 1) + " has negative slope (decreasing)";
    }
    if (k > 0 && !detail::slope_le(lines[k].slope, lines[k - 1].slope)) {
      return "slopes increase at segment " + std::to_string(k + 1) + " (not concave)";
    }
  }
  return std::nullopt;
}

// Delay penalties must be convex, non-decreasing, non-negative and satisfy
// U(s*a) <= s*U(a) for s >= 1, which for a convex piecewise-linear function is
// equivalent to every segment line having a non-negative intercept.
inline std::optional<std::string> validate_utility_d(const PLFunction& u) {
  if (u.points().front().u < 0.0) return "penalty is negative at 0";
  const auto lines = u.segment_lines();
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (lines[k].slope < 0.0) {
      return "segment " + std::to_string(k + 1) + " has negative slope (decreasing)";
    }
    if (k > 0 && !detail::slope_le(lines[k - 1].slope, lines[k].slope)) {
      return "slopes decrease at segment " + std::to_string(k + 1) + " (not convex)";
    }
    if (lines[k].intercept < -1e-12 * (1.0 + std::abs(lines[k].slope))) {
      return "segment " + std::to_string(k + 1) + " line has intercept " +
             detail::format_number(lines[k].intercept) +
             " < 0, so U(s*a) > s*U(a) for some s >= 1";
    }
  }
  return std::nullopt;
}

struct Commodity {
  NodeId source = 0;
  NodeId sink = 0;
  double R = 0.0;               // throughput requirement, Mbps
  double D = kUnboundedDelay;   // maximum-delay bound, ms
  double w = 1.0;               // multiplies whichever utility the objective uses
  PLFunction utility_t;
  PLFunction utility_d;

  double throughput_utility(double throughput) const { return w * utility_t(throughput); }
  double delay_penalty(double delay) const { return w * utility_d(delay); }
};

enum class Objective {
  kSumThroughputUtility,  // max sum_i U_i^t(|f_i|)
  kSumDelayPenalty,       // min sum_i U_i^d(M(f_i))
  kMinThroughputUtility,  // max min_i U_i^t(|f_i|)
  kMaxDelayPenalty,       // min max_i U_i^d(M(f_i))
};

inline bool is_delay_objective(Objective o) {
  return o == Objective::kSumDelayPenalty || o == Objective::kMaxDelayPenalty;
}

inline bool is_maxmin_objective(Objective o) {
  return o == Objective::kMinThroughputUtility || o == Objective::kMaxDelayPenalty;
}

inline std::string_view objective_name(Objective o) {
  switch (o) {
    case Objective::kSumThroughputUtility: return "sum-throughput-utility";
    case Objective::kSumDelayPenalty: return "sum-delay-penalty";
    case Objective::kMinThroughputUtility: return "min-throughput-utility";
    case Objective::kMaxDelayPenalty: return "max-delay-penalty";
  }
  return "";
}

inline Objective parse_objective(std::string_view name) {
  for (Objective o : {Objective::kSumThroughputUtility, Objective::kSumDelayPenalty,
                      Objective::kMinThroughputUtility, Objective::kMaxDelayPenalty}) {
    if (objective_name(o) == name) return o;
  }
  throw std::invalid_argument("unknown objective '" + std::string(name) + "'");
}

struct ProblemSpec {
  Network network;
  std::vector<Commodity> commodities;
  Objective objective = Objective::kSumThroughputUtility;

  std::size_t size() const { return commodities.size(); }

  // Throws std::invalid_argument describing the first problem found.
  void validate() const {
    if (commodities.empty()) throw std::invalid_argument("problem has no commodities");
    for (std::size_t i = 0; i < commodities.size(); ++i) {
      const Commodity& c = commodities[i];
      const std::string tag = "commodity " + std::to_string(i + 1) + ": ";
      if (c.source >= network.node_count() || c.sink >= network.node_count()) {
        throw std::invalid_argument(tag + "endpoint not in network");
      }
      if (c.source == c.sink) throw std::invalid_argument(tag + "source equals sink");
      if (!(c.R >= 0.0) || !std::isfinite(c.R)) {
        throw std::invalid_argument(tag + "throughput requirement must be finite and >= 0");
      }
      if (!(c.D > 0.0)) throw std::invalid_argument(tag + "delay bound must be > 0");
      if (!(c.w >= 0.0) || !std::isfinite(c.w)) {
        throw std::invalid_argument(tag + "weight must be finite and >= 0");
      }
      if (is_delay_objective(objective)) {
        if (auto bad = validate_utility_d(c.utility_d)) {
          throw std::invalid_argument(tag + "delay penalty: " + *bad);
        }
      } else if (auto bad = validate_utility_t(c.utility_t)) {
        throw std::invalid_argument(tag + "throughput utility: " + *bad);
      }
    }
  }
};

// Path flows per commodity.
struct FlowSolution {
  std::vector<std::vector<PathFlow>> flows;
};

struct CommodityMetrics {
  double throughput = 0.0;     // |f_i|
  double max_delay = 0.0;      // M(f_i)
  double total_delay = 0.0;    // T(f_i)
  double average_delay = 0.0;  // A(f_i)
};

using Metrics = std::vector<CommodityMetrics>;

inline double throughput(std::span<const PathFlow> flow) {
  double total = 0.0;
  for (const PathFlow& pf : flow) total += pf.rate;
  return total;
}

inline CommodityMetrics evaluate_commodity(const Network& net, std::span<const PathFlow> flow) {
  CommodityMetrics m;
  for (const PathFlow& pf : flow) {
    const double d = path_delay(net, pf.path);
    m.throughput += pf.rate;
    m.total_delay += pf.rate * d;
    if (pf.rate > kRateTol) m.max_delay = std::max(m.max_delay, d);
  }
  m.average_delay = m.throughput > 0.0 ? m.total_delay / m.throughput : 0.0;
  return m;
}

inline Metrics evaluate_metrics(const Network& net, const FlowSolution& sol) {
  Metrics out;
  out.reserve(sol.flows.size());
  for (const auto& f : sol.flows) out.push_back(evaluate_commodity(net, f));
  return out;
}

inline std::vector<double> commodity_edge_rates(const Network& net, std::span<const PathFlow> flow) {
  std::vector<double> x(net.edge_count(), 0.0);
  for (const PathFlow& pf : flow) {
    for (EdgeId e : pf.path.edges) x.at(e) += pf.rate;
  }
  return x;
}

inline std::vector<double> total_edge_rates(const Network& net, const FlowSolution& sol) {
  std::vector<double> x(net.edge_count(), 0.0);
  for (const auto& f : sol.flows) {
    const auto xi = commodity_edge_rates(net, f);
    for (std::size_t e = 0; e < x.size(); ++e) x[e] += xi[e];
  }
  return x;
}

// Objective of the original (maximum-delay) problem. Delay objectives report
// the penalty, which is minimized.
inline double objective_value(const ProblemSpec& spec, const Metrics& metrics) {
  const bool maxmin = is_maxmin_objective(spec.objective);
  const bool delay = is_delay_objective(spec.objective);
  double acc = maxmin ? (delay ? -std::numeric_limits<double>::infinity()
                               : std::numeric_limits<double>::infinity())
                      : 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const Commodity& c = spec.commodities[i];
    const double v = delay ? c.delay_penalty(metrics[i].max_delay)
                           : c.throughput_utility(metrics[i].throughput);
    if (!maxmin) {
      acc += v;
    } else {
      acc = delay ? std::max(acc, v) : std::min(acc, v);
    }
  }
  return acc;
}

// True when `candidate` is at least as good as `reference` up to tol.
inline bool objective_no_worse(const ProblemSpec& spec, double candidate, double reference,
                               double tol) {
  return is_delay_objective(spec.objective) ? candidate <= reference + tol
                                            : candidate >= reference - tol;
}

// Checks the feasible-set conditions: valid simple s_i->t_i paths, rates >= 0,
// conservation at interior nodes and capacity on every edge (within tol).
inline std::vector<std::string> check_flow(const ProblemSpec& spec, const FlowSolution& sol,
                                           double tol = 1e-6) {
  std::vector<std::string> issues;
  const Network& net = spec.network;
  if (sol.flows.size() != spec.size()) {
    issues.push_back("solution has " + std::to_string(sol.flows.size()) +
                     " commodities, problem has " + std::to_string(spec.size()));
    return issues;
  }
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const Commodity& c = spec.commodities[i];
    for (const PathFlow& pf : sol.flows[i]) {
      if (!is_simple_path(net, pf.path, c.source, c.sink)) {
        issues.push_back("commodity " + std::to_string(i + 1) + ": invalid path");
      }
      if (!(pf.rate >= 0.0) || !std::isfinite(pf.rate)) {
        issues.push_back("commodity " + std::to_string(i + 1) + ": negative or non-finite rate");
      }
    }
    if (!issues.empty()) continue;
    const auto x = commodity_edge_rates(net, sol.flows[i]);
    for (NodeId v = 0; v < net.node_count(); ++v) {
      if (v == c.source || v == c.sink) continue;
      double bal = 0.0;
      for (EdgeId e : net.out_edges(v)) bal += x[e];
      for (EdgeId e : net.in_edges(v)) bal -= x[e];
      if (std::abs(bal) > tol) {
        issues.push_back("commodity " + std::to_string(i + 1) +
                         ": conservation violated at " + net.node_name(v));
      }
    }
  }
  if (!issues.empty()) return issues;
  const auto x = total_edge_rates(net, sol);
  for (EdgeId e = 0; e < net.edge_count(); ++e) {
    if (x[e] > net.edge(e).capacity_mbps + tol) {
      issues.push_back("capacity exceeded on edge " + net.edge_label(e) + ": " +
                       detail::format_number(x[e]) + " > " +
                       detail::format_number(net.edge(e).capacity_mbps));
    }
  }
  return issues;
}

struct FlowVar {
  std::size_t commodity;
  EdgeId edge;
};

// Average-delay counterpart as a linear program. The first flow_vars.size()
// LP variables are the per-commodity edge rates; the rest are epigraph
// variables for the utilities.
struct Counterpart {
  LinearProgram lp;
  std::vector<FlowVar> flow_vars;
};

// Builds the average-delay-aware counterpart: for throughput objectives
// max U^t(|f_i|) s.t. |f_i| >= R_i, T(f_i) <= D_i |f_i|; for delay objectives
// min U^d(T(f_i)/R_i) s.t. |f_i| = R_i, T(f_i) <= D_i R_i; plus conservation
// and capacity. Edges entering s_i or leaving t_i carry no variable for i.
inline Counterpart build_counterpart(const ProblemSpec& spec) {
  spec.validate();
  const Network& net = spec.network;
  const bool delay_obj = is_delay_objective(spec.objective);
  if (delay_obj) {
    for (std::size_t i = 0; i < spec.size(); ++i) {
      if (spec.commodities[i].R <= 0.0) {
        throw std::invalid_argument("commodity " + std::to_string(i + 1) +
                                    ": delay objectives need R > 0 (average delay undefined)");
      }
    }
  }
  Counterpart cp;
  LinearProgram& lp = cp.lp;
  lp.sense = delay_obj ? Sense::kMinimize : Sense::kMaximize;
  const std::size_t K = spec.size();
  std::vector<std::vector<std::optional<std::size_t>>> var(
      K, std::vector<std::optional<std::size_t>>(net.edge_count()));
  for (std::size_t i = 0; i < K; ++i) {
    const Commodity& c = spec.commodities[i];
    for (EdgeId e = 0; e < net.edge_count(); ++e) {
      if (net.head(e) == c.source || net.tail(e) == c.sink) continue;
      var[i][e] = lp.add_variable();
      cp.flow_vars.push_back({i, e});
    }
  }
  auto throughput_terms = [&](std::size_t i, double scale) {
    std::vector<LpTerm> terms;
    for (EdgeId e : net.out_edges(spec.commodities[i].source)) {
      if (var[i][e]) terms.push_back({*var[i][e], scale});
    }
    return terms;
  };
  auto delay_terms = [&](std::size_t i, double scale) {
    std::vector<LpTerm> terms;
    for (EdgeId e = 0; e < net.edge_count(); ++e) {
      if (var[i][e] && net.edge(e).delay_ms != 0.0) {
        terms.push_back({*var[i][e], scale * net.edge(e).delay_ms});
      }
    }
    return terms;
  };

  for (std::size_t i = 0; i < K; ++i) {
    const Commodity& c = spec.commodities[i];
    for (NodeId v = 0; v < net.node_count(); ++v) {
      if (v == c.source || v == c.sink) continue;
      std::vector<LpTerm> terms;
      for (EdgeId e : net.out_edges(v)) {
        if (var[i][e]) terms.push_back({*var[i][e], 1.0});
      }
      for (EdgeId e : net.in_edges(v)) {
        if (var[i][e]) terms.push_back({*var[i][e], -1.0});
      }
      if (!terms.empty()) lp.add_constraint(std::move(terms), Relation::kEqual, 0.0);
    }
    if (delay_obj) {
      lp.add_constraint(throughput_terms(i, 1.0), Relation::kEqual, c.R);
      if (std::isfinite(c.D)) {
        lp.add_constraint(delay_terms(i, 1.0), Relation::kLessEqual, c.D * c.R);
      }
    } else {
      if (c.R > 0.0) lp.add_constraint(throughput_terms(i, 1.0), Relation::kGreaterEqual, c.R);
      if (std::isfinite(c.D)) {
        auto terms = delay_terms(i, 1.0);
        for (auto t : throughput_terms(i, -c.D)) terms.push_back(t);
        lp.add_constraint(std::move(terms), Relation::kLessEqual, 0.0);
      }
    }
  }
  for (EdgeId e = 0; e < net.edge_count(); ++e) {
    std::vector<LpTerm> terms;
    for (std::size_t i = 0; i < K; ++i) {
      if (var[i][e]) terms.push_back({*var[i][e], 1.0});
    }
    if (!terms.empty()) {
      lp.add_constraint(std::move(terms), Relation::kLessEqual, net.edge(e).capacity_mbps);
    }
  }

  // Epigraph of the utilities: concave throughput utilities are the minimum
  // of their segment lines, convex penalties the maximum.
  const bool maxmin = is_maxmin_objective(spec.objective);
  std::optional<std::size_t> shared;
  if (maxmin) shared = lp.add_variable(1.0);
  for (std::size_t i = 0; i < K; ++i) {
    const Commodity& c = spec.commodities[i];
    const std::size_t z = maxmin ? *shared : lp.add_variable(1.0);
    if (delay_obj) {
      for (const auto& line : c.utility_d.segment_lines()) {
        auto terms = delay_terms(i, -c.w * line.slope / c.R);
        terms.push_back({z, 1.0});
        lp.add_constraint(std::move(terms), Relation::kGreaterEqual, c.w * line.intercept);
      }
    } else {
      for (const auto& line : c.utility_t.segment_lines()) {
        auto terms = throughput_terms(i, -c.w * line.slope);
        terms.push_back({z, 1.0});
        lp.add_constraint(std::move(terms), Relation::kLessEqual, c.w * line.intercept);
      }
    }
  }
  return cp;
}

// Per-commodity edge rates from an LP solution of the counterpart.
inline std::vector<std::vector<double>> counterpart_edge_flows(const ProblemSpec& spec,
                                                               const Counterpart& cp,
                                                               const LpSolution& sol) {
  std::vector<std::vector<double>> x(spec.size(),
                                     std::vector<double>(spec.network.edge_count(), 0.0));
  for (std::size_t k = 0; k < cp.flow_vars.size(); ++k) {
    x[cp.flow_vars[k].commodity][cp.flow_vars[k].edge] = std::max(0.0, sol.x[k]);
  }
  return x;
}

// Lists the counterpart constraints a flow violates (throughput requirement,
// average-delay bound, feasibility).
inline std::vector<std::string> counterpart_violations(const ProblemSpec& spec,
                                                       const FlowSolution& sol,
                                                       double tol = 1e-6) {
  auto issues = check_flow(spec, sol, tol);
  if (!issues.empty()) return issues;
  const auto metrics = evaluate_metrics(spec.network, sol);
  const bool delay_obj = is_delay_objective(spec.objective);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const Commodity& c = spec.commodities[i];
    const auto& m = metrics[i];
    const std::string tag = "commodity " + std::to_string(i + 1) + ": ";
    if (delay_obj && std::abs(m.throughput - c.R) > tol * std::max(1.0, c.R)) {
      issues.push_back(tag + "throughput differs from the requirement");
    }
    if (!delay_obj && m.throughput < c.R - tol * std::max(1.0, c.R)) {
      issues.push_back(tag + "throughput below requirement");
    }
    if (std::isfinite(c.D)) {
      const double budget = c.D * (delay_obj ? c.R : m.throughput);
      if (m.total_delay > budget + tol * std::max(1.0, budget)) {
        issues.push_back(tag + "average delay above bound");
      }
    }
  }
  return issues;
}

struct TcdmDemand {
  NodeId source;
  NodeId sink;
  double R;
  double w = 1.0;
};

// Throughput-constrained weighted max-delay minimization:
// min sum_i w_i M(f_i) s.t. |f_i| >= R_i.
inline ProblemSpec make_tcdm(Network net, std::span<const TcdmDemand> demands) {
  ProblemSpec spec{std::move(net), {}, Objective::kSumDelayPenalty};
  for (const auto& d : demands) {
    Commodity c;
    c.source = d.source;
    c.sink = d.sink;
    c.R = d.R;
    c.D = kUnboundedDelay;
    c.w = d.w;
    spec.commodities.push_back(std::move(c));
  }
  spec.validate();
  return spec;
}

struct DcumDemand {
  NodeId source;
  NodeId sink;
  double D;
  PLFunction utility = PLFunction::identity();
};

// Delay-constrained throughput-utility maximization:
// max sum_i U_i^t(|f_i|) s.t. M(f_i) <= D_i.
inline ProblemSpec make_dcum(Network net, std::span<const DcumDemand> demands) {
  ProblemSpec spec{std::move(net), {}, Objective::kSumThroughputUtility};
  for (const auto& d : demands) {
    Commodity c;
    c.source = d.source;
    c.sink = d.sink;
    c.R = 0.0;
    c.D = d.D;
    c.utility_t = d.utility;
    spec.commodities.push_back(std::move(c));
  }
  spec.validate();
  return spec;
}

}  // namespace delayflow
