#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "delayflow/delayflow.hpp"

namespace {

using namespace delayflow;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitVerifyFailed = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

Network load_network(const std::string& topo) {
  if (topo == "ec2") return builtin_ec2();
  try {
    return load_topology(read_file(topo));
  } catch (const ParseError& e) {
    throw ParseError(0, topo + ": " + e.what());
  }
}

struct SolveArgs {
  std::string algo;
  std::optional<double> eps;
  std::string topo = "ec2";
  std::string problem;
  std::string out = "-";
};

int cmd_solve(const SolveArgs& a) {
  const Algorithm algo = parse_algorithm(a.algo);
  if (a.eps && !(*a.eps > 0.0 && *a.eps < 1.0)) {
    throw std::invalid_argument("--eps must lie in (0, 1)");
  }
  if (algo == Algorithm::kPass && !a.eps) throw std::invalid_argument("--algo pass needs --eps");
  ProblemSpec spec = parse_problem(read_file(a.problem), load_network(a.topo));
  SolveReport report;
  try {
    switch (algo) {
      case Algorithm::kPass: report = pass(spec, *a.eps); break;
      case Algorithm::kPassM: report = pass_m(spec); break;
      case Algorithm::kPassT:
        report = pass_t(spec);
        if (a.eps) attach_lambda(spec, report, *a.eps);
        break;
      case Algorithm::kGreedy: report = greedy(spec); break;
      case Algorithm::kExact: report = exact_time_expanded(spec); break;
    }
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  }
  write_output(a.out, report_to_json(spec, report).dump(2) + "\n");
  if (report.infeasible) {
    std::cerr << "infeasible: " << report.note << "\n";
    return kExitInfeasible;
  }
  return kExitOk;
}

int cmd_verify(const std::string& path) {
  const LoadedReport loaded = report_from_json(detail::parse_json(read_file(path)));
  const auto issues = verify_report(loaded.spec, loaded.report, verification_tolerance());
  if (issues.empty()) {
    std::cout << "ok: " << algorithm_name(loaded.report.algorithm) << " report verified\n";
    return kExitOk;
  }
  for (const auto& msg : issues) std::cerr << "FAIL: " << msg << "\n";
  return kExitVerifyFailed;
}

int cmd_experiment(const std::string& name, const std::string& out, unsigned workers) {
  const auto rows = run_experiment(name, workers);
  write_output(out, experiment_csv(rows));
  return kExitOk;
}

int cmd_gen(std::uint64_t seed, const std::string& prefix) {
  const ProblemSpec spec = random_instance(seed);
  write_output(prefix + ".topo", serialize_topology(spec.network));
  write_output(prefix + ".json", problem_to_json(spec).dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-commodity flow under maximum-delay constraints"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Run one algorithm and write a JSON report");
  s->add_option("--algo", solve.algo, "pass | pass-m | pass-t | greedy | exact")->required();
  s->add_option("--eps", solve.eps, "Deletion ratio in (0, 1); pass-t uses it for lambda");
  s->add_option("--topo", solve.topo, "Topology file, or 'ec2' for the built-in network");
  s->add_option("--problem", solve.problem, "Problem JSON file")->required();
  s->add_option("--out", solve.out, "Report path ('-' for stdout)");

  std::string report_path;
  auto* v = app.add_subcommand("verify", "Re-check every certificate in a report");
  v->add_option("report", report_path, "Report JSON file")->required();

  std::string exp_name;
  std::string exp_out = "-";
  unsigned workers = 0;
  auto* x = app.add_subcommand("experiment", "Run a built-in EC2 sweep and write CSV");
  x->add_option("name", exp_name, "tcdm-eps | tcdm-rate | dcum-eps | utility-weights")->required();
  x->add_option("--out", exp_out, "CSV path ('-' for stdout)");
  x->add_option("--workers", workers, "Worker threads (0 = all cores)");

  std::uint64_t seed = 1;
  std::string gen_out;
  auto* g = app.add_subcommand("gen", "Write a random instance as <out>.topo and <out>.json");
  g->add_option("--seed", seed, "Generator seed");
  g->add_option("--out", gen_out, "Output path prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*s) return cmd_solve(solve);
    if (*v) return cmd_verify(report_path);
    if (*x) return cmd_experiment(exp_name, exp_out, workers);
    if (*g) return cmd_gen(seed, gen_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
