#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "delayflow/decompose.hpp"
#include "delayflow/errors.hpp"
#include "delayflow/graph.hpp"
#include "delayflow/lp.hpp"
#include "delayflow/problem.hpp"

namespace delayflow {

enum class Algorithm { kPass, kPassM, kPassT, kGreedy, kExact };

inline std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kPass: return "pass";
    case Algorithm::kPassM: return "pass-m";
    case Algorithm::kPassT: return "pass-t";
    case Algorithm::kGreedy: return "greedy";
    case Algorithm::kExact: return "exact";
  }
  return "";
}

inline Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::kPass, Algorithm::kPassM, Algorithm::kPassT,
                      Algorithm::kGreedy, Algorithm::kExact}) {
    if (algorithm_name(a) == name) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

struct DeletionCheck {
  bool holds = true;
  double slack = 0.0;  // T(f_hat) - (T(f_bar) + eps |f_hat| M(f_bar))
};

// lambda = max{1, max_i M(pass-t_i) / M(pass_i)}; unbounded when some PASS
// commodity has zero max delay but the PASS-T one does not.
struct LambdaCertificate {
  bool unbounded = false;
  double value = 1.0;
};

struct SolveReport {
  Algorithm algorithm = Algorithm::kPass;
  FlowSolution solution;
  Metrics metrics;
  double objective = 0.0;

  // Decomposed counterpart optimum f_hat (PASS family only).
  std::optional<FlowSolution> counterpart;
  Metrics counterpart_metrics;
  std::optional<double> counterpart_objective;

  std::optional<double> epsilon;
  std::optional<double> epsilon_max;
  std::optional<double> epsilon_min;
  std::optional<LambdaCertificate> lambda;

  // |f_i| / R_i (absent when R_i = 0) and M(f_i) / D_i (absent when D_i = inf).
  std::vector<std::optional<double>> throughput_ratio;
  std::vector<std::optional<double>> delay_ratio;

  std::vector<DeletionCheck> deletion;

  bool infeasible = false;
  std::string note;
  double wall_ms = 0.0;
  std::string spec_digest;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

// Stable 64-bit fingerprint of a problem, used to pair reports.
inline std::string spec_digest(const ProblemSpec& spec) {
  std::string text = serialize_topology(spec.network);
  text += std::string(objective_name(spec.objective)) + "\n";
  for (const Commodity& c : spec.commodities) {
    text += std::to_string(c.source) + " " + std::to_string(c.sink) + " " +
            detail::format_number(c.R) + " " + detail::format_number(c.D) + " " +
            detail::format_number(c.w);
    for (const auto* u : {&c.utility_t, &c.utility_d}) {
      text += " |";
      for (const Breakpoint& b : u->points()) {
        text += " " + detail::format_number(b.a) + "," + detail::format_number(b.u);
      }
    }
    text += "\n";
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(detail::fnv1a(text)));
  return buf;
}

// Fills metrics, objective, constraint ratios and digest from the solution.
inline void finalize_report(const ProblemSpec& spec, SolveReport& report) {
  report.metrics = evaluate_metrics(spec.network, report.solution);
  report.objective = objective_value(spec, report.metrics);
  report.throughput_ratio.assign(spec.size(), std::nullopt);
  report.delay_ratio.assign(spec.size(), std::nullopt);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const Commodity& c = spec.commodities[i];
    if (c.R > 0.0) report.throughput_ratio[i] = report.metrics[i].throughput / c.R;
    if (std::isfinite(c.D)) report.delay_ratio[i] = report.metrics[i].max_delay / c.D;
  }
  if (report.counterpart) {
    report.counterpart_metrics = evaluate_metrics(spec.network, *report.counterpart);
  }
  report.spec_digest = spec_digest(spec);
}

// Path order used by every deletion: slowest first, then larger rate, then
// lexicographically smaller node-name sequence.
inline std::vector<std::size_t> slowest_first_order(const Network& net,
                                                    std::span<const PathFlow> flow) {
  std::vector<double> delay(flow.size());
  for (std::size_t k = 0; k < flow.size(); ++k) delay[k] = path_delay(net, flow[k].path);
  std::vector<std::size_t> order(flow.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (delay[a] != delay[b]) return delay[a] > delay[b];
    if (flow[a].rate != flow[b].rate) return flow[a].rate > flow[b].rate;
    return path_names_less(net, flow[a].path, flow[b].path);
  });
  return order;
}

// Removes `amount` of rate from the slowest flow-carrying paths; the last
// path touched may be cut partially. Paths left with no rate are dropped.
inline std::vector<PathFlow> delete_slowest(const Network& net, std::vector<PathFlow> flow,
                                            double amount) {
  if (!(amount >= 0.0)) throw std::invalid_argument("deletion amount must be >= 0");
  const double total = throughput(flow);
  if (amount > total + kRateTol * std::max(1.0, total)) {
    throw std::invalid_argument("deletion amount " + detail::format_number(amount) +
                                " exceeds total rate " + detail::format_number(total));
  }
  double remaining = amount;
  for (std::size_t k : slowest_first_order(net, flow)) {
    if (remaining <= 0.0) break;
    PathFlow& pf = flow[k];
    if (pf.rate - remaining <= kRateTol) {
      remaining -= pf.rate;
      pf.rate = 0.0;
    } else {
      pf.rate -= remaining;
      remaining = 0.0;
    }
  }
  std::erase_if(flow, [](const PathFlow& pf) { return pf.rate <= 0.0; });
  return flow;
}

struct CounterpartSolution {
  FlowSolution flow;
  double objective = 0.0;
};

// Solves the average-delay counterpart and decomposes each commodity's edge
// flow into paths (after cancelling any flow cycles).
inline CounterpartSolution solve_counterpart(const ProblemSpec& spec) {
  const Counterpart cp = build_counterpart(spec);
  const LpSolution sol = solve_lp(cp.lp);
  if (sol.status == LpStatus::kInfeasible) {
    throw InfeasibleError("average-delay counterpart is infeasible, so the problem is too");
  }
  if (sol.status != LpStatus::kOptimal) throw Error("average-delay counterpart is unbounded");
  const auto x = counterpart_edge_flows(spec, cp, sol);
  CounterpartSolution out;
  out.objective = sol.objective;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const Commodity& c = spec.commodities[i];
    auto acyclic = cancel_cycles(spec.network, c.source, c.sink, x[i]);
    auto paths = decompose(spec.network, c.source, c.sink, std::move(acyclic));
    std::sort(paths.begin(), paths.end(), [&](const PathFlow& a, const PathFlow& b) {
      return path_names_less(spec.network, a.path, b.path);
    });
    out.flow.flows.push_back(std::move(paths));
  }
  return out;
}

inline DeletionCheck check_deletion(const Network& net, std::span<const PathFlow> f_hat,
                                std::span<const PathFlow> f_bar, double epsilon) {
  const auto hat = evaluate_commodity(net, f_hat);
  const auto bar = evaluate_commodity(net, f_bar);
  DeletionCheck out;
  out.slack = hat.total_delay - (bar.total_delay + epsilon * hat.throughput * bar.max_delay);
  out.holds = out.slack >= -1e-6;
  return out;
}

// Solves the counterpart, then deletes epsilon * |f_hat_i| from the slowest
// paths of every commodity.
inline SolveReport pass(const ProblemSpec& spec, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("epsilon must lie in (0, 1)");
  }
  detail::Stopwatch clock;
  auto hat = solve_counterpart(spec);
  SolveReport report;
  report.algorithm = Algorithm::kPass;
  report.epsilon = epsilon;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto& f_hat = hat.flow.flows[i];
    auto f_bar = delete_slowest(spec.network, f_hat, epsilon * throughput(f_hat));
    report.deletion.push_back(check_deletion(spec.network, f_hat, f_bar, epsilon));
    report.solution.flows.push_back(std::move(f_bar));
  }
  report.counterpart = std::move(hat.flow);
  report.counterpart_objective = hat.objective;
  finalize_report(spec, report);
  report.wall_ms = clock.elapsed_ms();
  return report;
}

// Deletes whole slowest paths while a commodity's max delay exceeds D_i.
inline SolveReport pass_m(const ProblemSpec& spec) {
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (!std::isfinite(spec.commodities[i].D)) {
      throw std::invalid_argument("pass-m needs a finite delay bound for commodity " +
                                  std::to_string(i + 1));
    }
  }
  detail::Stopwatch clock;
  auto hat = solve_counterpart(spec);
  SolveReport report;
  report.algorithm = Algorithm::kPassM;
  double eps_max = 0.0;
  double eps_min = 1.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const double D = spec.commodities[i].D;
    std::vector<PathFlow> f = hat.flow.flows[i];
    while (!f.empty()) {
      const auto order = slowest_first_order(spec.network, f);
      if (path_delay(spec.network, f[order.front()].path) <= D) break;
      f.erase(f.begin() + static_cast<std::ptrdiff_t>(order.front()));
    }
    const double before = throughput(hat.flow.flows[i]);
    const double eps_i = before > 0.0 ? (before - throughput(f)) / before : 0.0;
    eps_max = std::max(eps_max, eps_i);
    eps_min = std::min(eps_min, eps_i);
    report.solution.flows.push_back(std::move(f));
  }
  report.epsilon_max = eps_max;
  report.epsilon_min = eps_min;
  report.counterpart = std::move(hat.flow);
  report.counterpart_objective = hat.objective;
  finalize_report(spec, report);
  report.wall_ms = clock.elapsed_ms();
  return report;
}

// Returns the decomposed counterpart optimum unchanged.
inline SolveReport pass_t(const ProblemSpec& spec) {
  detail::Stopwatch clock;
  auto hat = solve_counterpart(spec);
  SolveReport report;
  report.algorithm = Algorithm::kPassT;
  report.solution = hat.flow;
  report.counterpart = std::move(hat.flow);
  report.counterpart_objective = hat.objective;
  finalize_report(spec, report);
  report.wall_ms = clock.elapsed_ms();
  return report;
}

inline LambdaCertificate compute_lambda(const SolveReport& pass_t_report,
                                        const SolveReport& pass_report) {
  if (pass_t_report.spec_digest != pass_report.spec_digest ||
      pass_t_report.metrics.size() != pass_report.metrics.size()) {
    throw std::invalid_argument("lambda needs two reports for the same problem");
  }
  if (!pass_report.epsilon) throw std::invalid_argument("companion report carries no epsilon");
  LambdaCertificate out;
  for (std::size_t i = 0; i < pass_report.metrics.size(); ++i) {
    const double num = pass_t_report.metrics[i].max_delay;
    const double den = pass_report.metrics[i].max_delay;
    if (den <= 0.0) {
      if (num > 0.0) out.unbounded = true;
      continue;
    }
    out.value = std::max(out.value, num / den);
  }
  return out;
}

// Runs PASS at `epsilon` alongside and stores lambda and epsilon on a PASS-T
// report.
inline void attach_lambda(const ProblemSpec& spec, SolveReport& pass_t_report, double epsilon) {
  const SolveReport companion = pass(spec, epsilon);
  pass_t_report.epsilon = epsilon;
  pass_t_report.lambda = compute_lambda(pass_t_report, companion);
}

// Checks the guarantees an algorithm promises about its own output
// (relaxed constraints and, for PASS, the deletion inequality). Returns one
// message per violated guarantee.
inline std::vector<std::string> check_guarantees(const ProblemSpec& spec, const SolveReport& r,
                                                 double tol = 1e-6) {
  std::vector<std::string> issues;
  auto tag = [](std::size_t i) { return "commodity " + std::to_string(i + 1) + ": "; };
  if (r.metrics.size() != spec.size()) {
    issues.push_back("report metrics do not match the problem");
    return issues;
  }
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const Commodity& c = spec.commodities[i];
    const auto& m = r.metrics[i];
    const double rtol = tol * std::max(1.0, c.R);
    switch (r.algorithm) {
      case Algorithm::kPass: {
        const double eps = r.epsilon.value_or(0.0);
        if (m.throughput < (1.0 - eps) * c.R - rtol) {
          issues.push_back(tag(i) + "throughput below (1 - epsilon) R");
        }
        if (std::isfinite(c.D) && m.max_delay > c.D / eps + tol) {
          issues.push_back(tag(i) + "max delay above the relaxed delay bound D / epsilon");
        }
        if (i < r.deletion.size() && !r.deletion[i].holds) {
          issues.push_back(tag(i) + "deletion inequality T(f) + eps |f_hat| M(f) <= T(f_hat) fails");
        }
        break;
      }
      case Algorithm::kPassM:
        if (m.max_delay > c.D) issues.push_back(tag(i) + "max delay above D");
        if (m.throughput < (1.0 - r.epsilon_max.value_or(0.0)) * c.R - rtol) {
          issues.push_back(tag(i) + "throughput below (1 - epsilon_max) R");
        }
        break;
      case Algorithm::kPassT:
        if (m.throughput < c.R - rtol) issues.push_back(tag(i) + "throughput below R");
        if (r.lambda && r.epsilon && !r.lambda->unbounded && std::isfinite(c.D) &&
            m.max_delay > r.lambda->value / *r.epsilon * c.D + tol) {
          issues.push_back(tag(i) + "max delay above the relaxed delay bound lambda D / epsilon");
        }
        break;
      case Algorithm::kGreedy:
      case Algorithm::kExact:
        if (!r.infeasible && m.throughput < c.R - rtol) {
          issues.push_back(tag(i) + "throughput below R");
        }
        if (std::isfinite(c.D) && m.max_delay > c.D + tol) {
          issues.push_back(tag(i) + "max delay above D");
        }
        break;
    }
  }
  return issues;
}

// Checks the approximation ratio an algorithm guarantees against the exact
// optimum `opt` of the same problem.
inline std::vector<std::string> check_approximation(const ProblemSpec& spec, const SolveReport& r,
                                                    double opt, double tol = 1e-6) {
  std::vector<std::string> issues;
  const bool delay = is_delay_objective(spec.objective);
  const double v = r.objective;
  auto fail = [&](const std::string& what) {
    issues.push_back("objective " + detail::format_number(v) + " violates " + what +
                     " with optimum " + detail::format_number(opt));
  };
  switch (r.algorithm) {
    case Algorithm::kPass: {
      const double eps = r.epsilon.value_or(1.0);
      if (!delay && v < (1.0 - eps) * opt - tol) fail(">= (1 - epsilon) OPT");
      if (delay && v > opt / eps + tol) fail("<= OPT / epsilon");
      break;
    }
    case Algorithm::kPassM: {
      if (!delay && v < (1.0 - r.epsilon_max.value_or(0.0)) * opt - tol) {
        fail(">= (1 - epsilon_max) OPT");
      }
      const double emin = r.epsilon_min.value_or(0.0);
      if (delay && emin > 0.0 && v > opt / emin + tol) fail("<= OPT / epsilon_min");
      break;
    }
    case Algorithm::kPassT: {
      if (!delay && v < opt - tol) fail(">= OPT");
      if (delay && r.lambda && r.epsilon && !r.lambda->unbounded &&
          v > r.lambda->value / *r.epsilon * opt + tol) {
        fail("<= lambda OPT / epsilon");
      }
      break;
    }
    case Algorithm::kGreedy:
    case Algorithm::kExact:
      if (!objective_no_worse(spec, opt, v, tol)) fail("optimality of the exact solution");
      break;
  }
  return issues;
}

}  // namespace delayflow
