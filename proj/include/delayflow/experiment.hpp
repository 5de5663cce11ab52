#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "delayflow/baselines.hpp"
#include "delayflow/graph.hpp"
#include "delayflow/pass.hpp"
#include "delayflow/problem.hpp"

namespace delayflow {

struct ExperimentRow {
  std::string experiment;
  std::string params;
  Algorithm algorithm = Algorithm::kPass;
  std::optional<SolveReport> report;  // empty when the solver failed
  std::string error;
  bool guarantees_ok = false;
  std::optional<bool> approximation_ok;  // vs. the exact row of the same instance
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"tcdm-eps", "tcdm-rate", "dcum-eps",
                                              "utility-weights"};
  return names;
}

namespace detail {

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string percent_param(const char* key, int pct) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s=%.2f", key, pct / 100.0);
  return buf;
}

// Endpoints used by every built-in sweep: VA->SI and OR->TO.
inline std::pair<std::pair<NodeId, NodeId>, std::pair<NodeId, NodeId>> ec2_endpoints(
    const Network& net) {
  return {{net.node("VA"), net.node("SI")}, {net.node("OR"), net.node("TO")}};
}

inline ProblemSpec ec2_tcdm(double R) {
  Network net = builtin_ec2();
  const auto [a, b] = ec2_endpoints(net);
  const std::vector<TcdmDemand> d{{a.first, a.second, R, 1.0}, {b.first, b.second, R, 1.0}};
  return make_tcdm(std::move(net), d);
}

inline ProblemSpec ec2_dcum(double D) {
  Network net = builtin_ec2();
  const auto [a, b] = ec2_endpoints(net);
  const std::vector<DcumDemand> d{{a.first, a.second, D}, {b.first, b.second, D}};
  return make_dcum(std::move(net), d);
}

inline ProblemSpec ec2_weighted_utility(double R, double D, double w1, double w2) {
  ProblemSpec spec = ec2_dcum(D);
  spec.commodities[0].R = R;
  spec.commodities[1].R = R;
  spec.commodities[0].w = w1;
  spec.commodities[1].w = w2;
  spec.validate();
  return spec;
}

// One sweep instance: a problem plus the algorithms to run on it. Results
// independent of epsilon are shared between instances through `shared`.
struct Instance {
  std::string params;
  const ProblemSpec* spec;
  double epsilon;
  std::vector<Algorithm> algorithms;
};

struct SharedRuns {
  std::optional<SolveReport> pass_m, pass_t, greedy, exact;
  bool frozen = false;  // read-only once workers run concurrently
};

inline SolveReport run_one(const ProblemSpec& spec, Algorithm a, double epsilon,
                           SharedRuns* shared, const SolveReport* companion_pass) {
  auto cached = [&](std::optional<SolveReport>* slot, auto&& compute) {
    if (shared && *slot) return **slot;
    SolveReport r = compute();
    if (shared && !shared->frozen) *slot = r;
    return r;
  };
  switch (a) {
    case Algorithm::kPass:
      return companion_pass ? *companion_pass : pass(spec, epsilon);
    case Algorithm::kPassM:
      return cached(shared ? &shared->pass_m : nullptr, [&] { return pass_m(spec); });
    case Algorithm::kPassT: {
      SolveReport r = cached(shared ? &shared->pass_t : nullptr, [&] { return pass_t(spec); });
      r.epsilon = epsilon;
      r.lambda = compute_lambda(r, companion_pass ? *companion_pass : pass(spec, epsilon));
      return r;
    }
    case Algorithm::kGreedy:
      return cached(shared ? &shared->greedy : nullptr, [&] { return greedy(spec); });
    case Algorithm::kExact:
      return cached(shared ? &shared->exact : nullptr, [&] { return exact_time_expanded(spec); });
  }
  throw std::logic_error("unreachable");
}

inline std::vector<ExperimentRow> run_instance(const std::string& experiment, const Instance& inst,
                                               SharedRuns* shared) {
  std::vector<ExperimentRow> rows;
  std::optional<SolveReport> companion;
  try {
    companion = pass(*inst.spec, inst.epsilon);
  } catch (const std::exception&) {
  }
  for (Algorithm a : inst.algorithms) {
    ExperimentRow row;
    row.experiment = experiment;
    row.params = inst.params;
    row.algorithm = a;
    try {
      row.report = run_one(*inst.spec, a, inst.epsilon, shared, companion ? &*companion : nullptr);
      row.guarantees_ok = check_guarantees(*inst.spec, *row.report).empty();
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  const ExperimentRow* exact = nullptr;
  for (const auto& r : rows) {
    if (r.algorithm == Algorithm::kExact && r.report) exact = &r;
  }
  if (exact) {
    for (auto& r : rows) {
      if (r.report) {
        r.approximation_ok =
            check_approximation(*inst.spec, *r.report, exact->report->objective).empty();
      }
    }
  }
  return rows;
}

}  // namespace detail

// Runs one of the built-in EC2 sweeps. Instances are processed by a pool of
// `workers` threads (0 = hardware concurrency); rows come back in instance
// order regardless of completion order.
inline std::vector<ExperimentRow> run_experiment(std::string_view name, unsigned workers = 0) {
  using detail::Instance;
  std::vector<ProblemSpec> specs;
  std::vector<Instance> instances;
  bool share = false;
  const std::vector<Algorithm> tcdm_algos{Algorithm::kPass, Algorithm::kPassT, Algorithm::kGreedy,
                                          Algorithm::kExact};
  const std::vector<Algorithm> all_algos{Algorithm::kPass, Algorithm::kPassM, Algorithm::kPassT,
                                         Algorithm::kGreedy, Algorithm::kExact};
  if (name == "tcdm-eps") {
    specs.push_back(detail::ec2_tcdm(230.0));
    for (int pct = 1; pct <= 99; ++pct) {
      instances.push_back({detail::percent_param("eps", pct), nullptr, pct / 100.0, tcdm_algos});
    }
    share = true;
  } else if (name == "tcdm-rate") {
    for (int R = 116; R <= 239; ++R) {
      specs.push_back(detail::ec2_tcdm(R));
      instances.push_back({"R=" + std::to_string(R), nullptr, 0.03, tcdm_algos});
    }
  } else if (name == "dcum-eps") {
    specs.push_back(detail::ec2_dcum(150.0));
    for (int pct = 1; pct <= 99; ++pct) {
      instances.push_back({detail::percent_param("eps", pct), nullptr, pct / 100.0, all_algos});
    }
    share = true;
  } else if (name == "utility-weights") {
    for (int w1 = 1; w1 <= 10; ++w1) {
      for (int w2 = 1; w2 <= 10; ++w2) {
        specs.push_back(detail::ec2_weighted_utility(80.0, 150.0, w1, w2));
        instances.push_back({"w1=" + std::to_string(w1) + ";w2=" + std::to_string(w2), nullptr,
                             0.03, all_algos});
      }
    }
  } else {
    throw std::invalid_argument("unknown experiment '" + std::string(name) + "'");
  }
  for (std::size_t k = 0; k < instances.size(); ++k) {
    instances[k].spec = &specs[share ? 0 : k];
  }

  std::vector<std::vector<ExperimentRow>> results(instances.size());
  detail::SharedRuns shared;
  if (share && !instances.empty()) {
    // Fill the epsilon-independent cache once before fanning out.
    results[0] = detail::run_instance(std::string(name), instances[0], &shared);
    shared.frozen = true;
  }
  std::atomic<std::size_t> next{share ? 1u : 0u};
  auto work = [&] {
    for (std::size_t k = next++; k < instances.size(); k = next++) {
      results[k] = detail::run_instance(std::string(name), instances[k], share ? &shared : nullptr);
    }
  };
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, instances.size()));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < workers; ++k) pool.emplace_back(work);
  }
  std::vector<ExperimentRow> rows;
  for (auto& r : results) {
    for (auto& row : r) rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string experiment_csv_header(std::size_t commodities = 2) {
  std::string h = "experiment,params,algo,objective";
  for (std::size_t i = 1; i <= commodities; ++i) {
    const std::string k = std::to_string(i);
    h += ",f" + k + ",M" + k + ",T" + k + ",A" + k;
  }
  h += ",epsilon,epsilon_max,epsilon_min,lambda,deletion_min_slack,infeasible,guarantees_ok,"
       "approximation_ok,error";
  return h;
}

inline std::string experiment_csv_row(const ExperimentRow& row, std::size_t commodities = 2) {
  using detail::fixed6;
  auto opt = [](const std::optional<double>& v) { return v ? fixed6(*v) : std::string(); };
  std::string line = row.experiment + "," + row.params + "," +
                     std::string(algorithm_name(row.algorithm));
  if (!row.report) {
    line += ",";
    for (std::size_t i = 0; i < commodities * 4; ++i) line += ",";
    std::string quoted;
    for (char ch : row.error) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    line += ",,,,,,,,,\"" + quoted + "\"";  // epsilon .. approximation_ok, then error
    return line;
  }
  const SolveReport& r = *row.report;
  line += "," + fixed6(r.objective);
  for (std::size_t i = 0; i < commodities; ++i) {
    if (i < r.metrics.size()) {
      const auto& m = r.metrics[i];
      line += "," + fixed6(m.throughput) + "," + fixed6(m.max_delay) + "," +
              fixed6(m.total_delay) + "," + fixed6(m.average_delay);
    } else {
      line += ",,,,";
    }
  }
  line += "," + opt(r.epsilon) + "," + opt(r.epsilon_max) + "," + opt(r.epsilon_min) + ",";
  if (r.lambda) line += r.lambda->unbounded ? std::string("unbounded") : fixed6(r.lambda->value);
  line += ",";
  if (!r.deletion.empty()) {
    double slack = r.deletion.front().slack;
    for (const auto& l : r.deletion) slack = std::min(slack, l.slack);
    line += fixed6(slack);
  }
  line += std::string(",") + (r.infeasible ? "1" : "0") + "," + (row.guarantees_ok ? "1" : "0") +
          "," + (row.approximation_ok ? (*row.approximation_ok ? "1" : "0") : "") + ",";
  return line;
}

inline std::string experiment_csv(const std::vector<ExperimentRow>& rows) {
  std::string out = experiment_csv_header() + "\n";
  for (const auto& row : rows) out += experiment_csv_row(row) + "\n";
  return out;
}

}  // namespace delayflow
