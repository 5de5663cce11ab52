#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "delayflow/errors.hpp"
#include "delayflow/graph.hpp"
#include "delayflow/pass.hpp"
#include "delayflow/problem.hpp"

namespace delayflow {

using nlohmann::json;

inline constexpr std::string_view kReportFormat = "delayflow-report/1";

// Verification tolerance: DELAYFLOW_TOL when set to a positive number, else 1e-6.
inline double verification_tolerance() {
  if (const char* env = std::getenv("DELAYFLOW_TOL")) {
    if (auto v = detail::parse_number(env); v && *v > 0.0) return *v;
  }
  return 1e-6;
}

namespace detail {

inline std::size_t line_of_byte(std::string_view text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

inline json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line_of_byte(text, e.byte), "invalid JSON");
  }
}

inline double json_number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ParseError(0, "field '" + field + "' must be a number");
  return j.get<double>();
}

inline json number_or_inf(double v) {
  return std::isfinite(v) ? json(v) : json("inf");
}

inline double parse_number_or_inf(const json& j, const std::string& field) {
  if (j.is_string() && j.get<std::string>() == "inf") return kUnboundedDelay;
  return json_number(j, field);
}

inline json utility_to_json(const PLFunction& u) {
  json pts = json::array();
  for (const Breakpoint& b : u.points()) pts.push_back({b.a, b.u});
  return {{"points", pts}};
}

inline PLFunction utility_from_json(const json& j, const std::string& field) {
  if (!j.is_object() || !j.contains("points") || !j["points"].is_array()) {
    throw ParseError(0, "field '" + field + "' must be an object with a 'points' array");
  }
  std::vector<Breakpoint> pts;
  for (const json& p : j["points"]) {
    if (!p.is_array() || p.size() != 2) {
      throw ParseError(0, "field '" + field + "': each point must be [a, u]");
    }
    pts.push_back({json_number(p[0], field), json_number(p[1], field)});
  }
  try {
    return PLFunction(std::move(pts));
  } catch (const std::invalid_argument& e) {
    throw ParseError(0, "field '" + field + "': " + e.what());
  }
}

inline json path_to_json(const Network& net, const PathFlow& pf) {
  json nodes = json::array();
  for (NodeId v : path_nodes(net, pf.path)) nodes.push_back(net.node_name(v));
  return {{"edges", pf.path.edges},
          {"nodes", nodes},
          {"rate", pf.rate},
          {"delay", path_delay(net, pf.path)}};
}

inline std::vector<PathFlow> paths_from_json(const Network& net, const json& j) {
  std::vector<PathFlow> out;
  if (!j.is_array()) throw ParseError(0, "'paths' must be an array");
  for (const json& p : j) {
    PathFlow pf;
    if (!p.contains("edges") || !p["edges"].is_array()) throw ParseError(0, "path without 'edges'");
    for (const json& e : p["edges"]) {
      if (!e.is_number_unsigned() || e.get<std::size_t>() >= net.edge_count()) {
        throw ParseError(0, "path references an unknown edge");
      }
      pf.path.edges.push_back(e.get<std::size_t>());
    }
    pf.rate = json_number(p.value("rate", json()), "rate");
    out.push_back(std::move(pf));
  }
  return out;
}

inline json metrics_to_json(const CommodityMetrics& m) {
  return {{"throughput", m.throughput},
          {"max_delay", m.max_delay},
          {"total_delay", m.total_delay},
          {"average_delay", m.average_delay}};
}

inline json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace detail

inline json problem_to_json(const ProblemSpec& spec) {
  json cs = json::array();
  for (const Commodity& c : spec.commodities) {
    cs.push_back({{"src", spec.network.node_name(c.source)},
                  {"dst", spec.network.node_name(c.sink)},
                  {"R", c.R},
                  {"D", detail::number_or_inf(c.D)},
                  {"w", c.w},
                  {"utility_t", detail::utility_to_json(c.utility_t)},
                  {"utility_d", detail::utility_to_json(c.utility_d)}});
  }
  return {{"objective", objective_name(spec.objective)}, {"commodities", cs}};
}

// Builds a problem on `net` from a parsed problem document. Omitted fields
// default to identity utilities, R = 0, D = inf and w = 1.
inline ProblemSpec problem_from_json(const json& doc, Network net) {
  if (!doc.is_object()) throw ParseError(0, "problem must be a JSON object");
  ProblemSpec spec;
  if (!doc.contains("objective") || !doc["objective"].is_string()) {
    throw ParseError(0, "missing string field 'objective'");
  }
  try {
    spec.objective = parse_objective(doc["objective"].get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ParseError(0, e.what());
  }
  if (!doc.contains("commodities") || !doc["commodities"].is_array()) {
    throw ParseError(0, "missing array field 'commodities'");
  }
  for (const json& cj : doc["commodities"]) {
    if (!cj.is_object()) throw ParseError(0, "each commodity must be an object");
    Commodity c;
    for (const char* key : {"src", "dst"}) {
      if (!cj.contains(key) || !cj[key].is_string()) {
        throw ParseError(0, std::string("commodity needs string field '") + key + "'");
      }
      auto id = net.find_node(cj[key].get<std::string>());
      if (!id) throw ParseError(0, "unknown node '" + cj[key].get<std::string>() + "'");
      (std::string_view(key) == "src" ? c.source : c.sink) = *id;
    }
    if (cj.contains("R")) c.R = detail::json_number(cj["R"], "R");
    if (cj.contains("D")) c.D = detail::parse_number_or_inf(cj["D"], "D");
    if (cj.contains("w")) c.w = detail::json_number(cj["w"], "w");
    if (cj.contains("utility_t")) c.utility_t = detail::utility_from_json(cj["utility_t"], "utility_t");
    if (cj.contains("utility_d")) c.utility_d = detail::utility_from_json(cj["utility_d"], "utility_d");
    spec.commodities.push_back(std::move(c));
  }
  spec.network = std::move(net);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(0, e.what());
  }
  return spec;
}

inline ProblemSpec parse_problem(std::string_view text, Network net) {
  return problem_from_json(detail::parse_json(text), std::move(net));
}

// Self-contained report: embeds the topology and problem so it can be
// verified without the original input files.
inline json report_to_json(const ProblemSpec& spec, const SolveReport& r) {
  const Network& net = spec.network;
  json j;
  j["format"] = kReportFormat;
  j["algorithm"] = algorithm_name(r.algorithm);
  j["topology"] = serialize_topology(net);
  j["problem"] = problem_to_json(spec);
  j["spec_digest"] = r.spec_digest;
  j["objective"] = r.objective;
  j["infeasible"] = r.infeasible;
  if (!r.note.empty()) j["note"] = r.note;
  j["wall_ms"] = r.wall_ms;
  j["epsilon"] = detail::optional_number(r.epsilon);
  j["epsilon_max"] = detail::optional_number(r.epsilon_max);
  j["epsilon_min"] = detail::optional_number(r.epsilon_min);
  if (r.algorithm == Algorithm::kPassM) {
    const double emin = r.epsilon_min.value_or(0.0);
    j["delay_ratio_bound"] = emin > 0.0 ? json(1.0 / emin) : json("unbounded");
  }
  if (r.lambda) {
    j["lambda"] = r.lambda->unbounded ? json("unbounded") : json(r.lambda->value);
  } else {
    j["lambda"] = nullptr;
  }
  if (r.counterpart_objective) j["counterpart_objective"] = *r.counterpart_objective;
  json cs = json::array();
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const Commodity& c = spec.commodities[i];
    json cj = detail::metrics_to_json(r.metrics[i]);
    cj["src"] = net.node_name(c.source);
    cj["dst"] = net.node_name(c.sink);
    cj["throughput_ratio"] = detail::optional_number(r.throughput_ratio[i]);
    cj["delay_ratio"] = detail::optional_number(r.delay_ratio[i]);
    json paths = json::array();
    for (const PathFlow& pf : r.solution.flows[i]) paths.push_back(detail::path_to_json(net, pf));
    cj["paths"] = paths;
    if (r.counterpart) {
      json cp = detail::metrics_to_json(r.counterpart_metrics[i]);
      json cpaths = json::array();
      for (const PathFlow& pf : r.counterpart->flows[i]) {
        cpaths.push_back(detail::path_to_json(net, pf));
      }
      cp["paths"] = cpaths;
      cj["counterpart"] = cp;
    }
    if (i < r.deletion.size()) {
      cj["deletion_check"] = {{"holds", r.deletion[i].holds}, {"slack", r.deletion[i].slack}};
    }
    cs.push_back(cj);
  }
  j["commodities"] = cs;
  return j;
}

// A report read back from JSON together with the problem it embeds.
struct LoadedReport {
  ProblemSpec spec;
  SolveReport report;
};

inline LoadedReport report_from_json(const json& j) {
  if (!j.is_object() || j.value("format", "") != kReportFormat) {
    throw ParseError(0, "not a delayflow report");
  }
  LoadedReport out;
  try {
    out.spec = problem_from_json(j.at("problem"), load_topology(j.at("topology").get<std::string>()));
    SolveReport& r = out.report;
    r.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    r.spec_digest = j.value("spec_digest", "");
    r.objective = detail::json_number(j.at("objective"), "objective");
    r.infeasible = j.value("infeasible", false);
    r.note = j.value("note", "");
    r.wall_ms = j.value("wall_ms", 0.0);
    auto opt = [&](const char* key) -> std::optional<double> {
      if (!j.contains(key) || j[key].is_null()) return std::nullopt;
      return detail::json_number(j[key], key);
    };
    r.epsilon = opt("epsilon");
    r.epsilon_max = opt("epsilon_max");
    r.epsilon_min = opt("epsilon_min");
    if (j.contains("counterpart_objective")) r.counterpart_objective = opt("counterpart_objective");
    if (j.contains("lambda") && !j["lambda"].is_null()) {
      LambdaCertificate lam;
      if (j["lambda"].is_string()) {
        lam.unbounded = true;
      } else {
        lam.value = detail::json_number(j["lambda"], "lambda");
      }
      r.lambda = lam;
    }
    const json& cs = j.at("commodities");
    if (!cs.is_array() || cs.size() != out.spec.size()) {
      throw ParseError(0, "report commodities do not match its problem");
    }
    bool has_counterpart = false;
    FlowSolution hat;
    for (const json& cj : cs) {
      r.solution.flows.push_back(detail::paths_from_json(out.spec.network, cj.at("paths")));
      CommodityMetrics m;
      m.throughput = detail::json_number(cj.at("throughput"), "throughput");
      m.max_delay = detail::json_number(cj.at("max_delay"), "max_delay");
      m.total_delay = detail::json_number(cj.at("total_delay"), "total_delay");
      m.average_delay = detail::json_number(cj.at("average_delay"), "average_delay");
      r.metrics.push_back(m);
      if (cj.contains("counterpart")) {
        has_counterpart = true;
        hat.flows.push_back(detail::paths_from_json(out.spec.network, cj["counterpart"].at("paths")));
      } else {
        hat.flows.emplace_back();
      }
      if (cj.contains("deletion_check")) {
        r.deletion.push_back({cj["deletion_check"].at("holds").get<bool>(),
                            detail::json_number(cj["deletion_check"].at("slack"), "slack")});
      }
    }
    if (has_counterpart) r.counterpart = std::move(hat);
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("malformed report: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(0, std::string("malformed report: ") + e.what());
  }
  return out;
}

// Re-derives everything a report claims from its paths and returns one
// message per failed check; an empty result means the report is valid.
inline std::vector<std::string> verify_report(const ProblemSpec& spec, const SolveReport& claimed,
                                              double tol) {
  std::vector<std::string> issues = check_flow(spec, claimed.solution, tol);
  if (!issues.empty()) return issues;
  SolveReport r = claimed;
  finalize_report(spec, r);
  if (!claimed.spec_digest.empty() && claimed.spec_digest != r.spec_digest) {
    issues.push_back("spec digest does not match the embedded problem");
  }
  auto close = [&](double a, double b) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); };
  for (std::size_t i = 0; i < spec.size() && i < claimed.metrics.size(); ++i) {
    const auto& got = r.metrics[i];
    const auto& said = claimed.metrics[i];
    const std::string tag = "commodity " + std::to_string(i + 1) + ": recorded ";
    if (!close(said.throughput, got.throughput)) issues.push_back(tag + "throughput differs from its paths");
    if (!close(said.max_delay, got.max_delay)) issues.push_back(tag + "max delay differs from its paths");
    if (!close(said.total_delay, got.total_delay)) issues.push_back(tag + "total delay differs from its paths");
  }
  if (!close(claimed.objective, r.objective)) {
    issues.push_back("recorded objective " + detail::format_number(claimed.objective) +
                     " differs from recomputed " + detail::format_number(r.objective));
  }
  const bool pass_family = r.algorithm == Algorithm::kPass || r.algorithm == Algorithm::kPassM ||
                           r.algorithm == Algorithm::kPassT;
  if (pass_family) {
    if (!r.counterpart) {
      issues.push_back("report lacks the counterpart flow");
      return issues;
    }
    for (const auto& msg : counterpart_violations(spec, *r.counterpart, tol)) {
      issues.push_back("counterpart flow: " + msg);
    }
  }
  if (r.algorithm == Algorithm::kPass) {
    if (!r.epsilon || !(*r.epsilon > 0.0 && *r.epsilon < 1.0)) {
      issues.push_back("pass report needs epsilon in (0, 1)");
      return issues;
    }
    r.deletion.clear();
    for (std::size_t i = 0; i < spec.size(); ++i) {
      const auto& hat = r.counterpart->flows[i];
      const auto& bar = r.solution.flows[i];
      const double removed = throughput(hat) - throughput(bar);
      if (!close(removed, *r.epsilon * throughput(hat))) {
        issues.push_back("commodity " + std::to_string(i + 1) +
                         ": removed rate is not epsilon times the counterpart throughput");
      }
      r.deletion.push_back(check_deletion(spec.network, hat, bar, *r.epsilon));
    }
  }
  if (r.algorithm == Algorithm::kPassM) {
    double emax = 0.0;
    double emin = 1.0;
    for (std::size_t i = 0; i < spec.size(); ++i) {
      const double before = throughput(r.counterpart->flows[i]);
      const double e = before > 0.0 ? (before - throughput(r.solution.flows[i])) / before : 0.0;
      emax = std::max(emax, e);
      emin = std::min(emin, e);
    }
    if (!r.epsilon_max || !close(*r.epsilon_max, emax) || !r.epsilon_min ||
        !close(*r.epsilon_min, emin)) {
      issues.push_back("recorded epsilon_max/epsilon_min differ from the deleted fractions");
    }
    r.epsilon_max = emax;
    r.epsilon_min = emin;
  }
  for (auto& msg : check_guarantees(spec, r, tol)) issues.push_back(std::move(msg));
  return issues;
}

}  // namespace delayflow
