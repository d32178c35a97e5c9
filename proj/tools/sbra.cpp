// sbra: run, sweep and compare slotted random-access control policies, and
// run the oracle property suites.
//
// Usage:
//   sbra run <scenario> [--policy L] [--rate R] [--seed S] [--slots N] [--out F] [--trace F]
//   sbra sweep <scenario> [--seed S] [--slots N] [--out F] [--threads T]
//   sbra compare <scenario> --policies a,b,c [--seed S] [--slots N] [--out F]
//   sbra oracle-check [--count N] [--step g] [--dp-instances M] [--maxweight-instances K]

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "sbra/experiments.hpp"
#include "sbra/scenario.hpp"

namespace {

struct Common {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> slots;
  std::string out;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("scenario", c.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Override the scenario's seed list with one seed");
  cmd->add_option("--slots", c.slots, "Override run.slots (warmup default rescales)");
  cmd->add_option("--out", c.out, "CSV output path (default: run.output, else stdout)");
  cmd->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
}

sbra::ScenarioConfig load(const Common& c) {
  sbra::ScenarioConfig cfg = sbra::parse_scenario(c.scenario);
  if (c.seed) cfg.seeds = {*c.seed};
  if (c.slots) cfg.slots = *c.slots;
  sbra::validate_scenario(cfg);
  return cfg;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("{}: cannot open output for writing", path));
  f << text;
  if (!f) throw std::runtime_error(fmt::format("{}: write failed", path));
}

void print_summary(const std::vector<sbra::SweepRow>& rows) {
  for (const auto& r : rows) {
    const auto& m = r.report;
    std::cerr << fmt::format("{:<20} rate={:<6} seed={:<4} delay={:>12} s  thr={:.4f}  energy/slot={:.4f}  {}\n",
                             r.policy, r.rate, r.seed,
                             m.delay_seconds ? fmt::format("{:.6g}", *m.delay_seconds) : std::string("-"),
                             m.throughput, m.energy_per_slot, sbra::to_string(m.stability));
  }
}

int cmd_run(const Common& c, const std::string& policy_label, std::optional<double> rate,
            const std::string& trace_path) {
  sbra::ScenarioConfig cfg = load(c);
  const sbra::Network network = sbra::build_network(cfg);
  const sbra::PolicyEntry& entry =
      policy_label.empty() ? cfg.policies.front() : sbra::find_policy(cfg, policy_label);
  const double r = rate ? *rate : (cfg.rates.empty() ? 0.0 : cfg.rates.front());
  sbra::RunConfig rc = sbra::make_run_config(cfg, entry, r, cfg.seeds.front(), network);
  rc.keep_trace = !trace_path.empty();
  const sbra::RunResult result = sbra::run(network, rc);

  std::vector<sbra::SweepRow> rows{{entry.label, r, rc.seed, result.report}};
  print_summary(rows);
  const auto& m = result.report;
  for (int s = 0; s < network.session_count(); ++s) {
    const auto& sm = m.sessions[s];
    std::cerr << fmt::format("  session {}: offered={:.4f} thr={:.4f} backlog={:.3f} delay_slots={} utility={}\n", s,
                             sm.offered, sm.throughput, sm.mean_path_backlog,
                             sm.delay_slots ? fmt::format("{:.6g}", *sm.delay_slots) : std::string("-"),
                             sm.log_utility ? fmt::format("{:.6g}", *sm.log_utility) : std::string("-"));
  }
  cfg.rates = {r};
  cfg.seeds = {rc.seed};
  std::ostringstream csv;
  sbra::write_sweep_csv(csv, cfg, rows);
  emit(c.out.empty() ? cfg.output : c.out, csv.str());
  if (!trace_path.empty()) {
    std::ostringstream trace;
    sbra::write_trace_csv(trace, result.trace);
    emit(trace_path, trace.str());
  }
  return 0;
}

int cmd_sweep(const Common& c, const std::vector<std::string>& policies) {
  const sbra::ScenarioConfig cfg = load(c);
  const auto rows = sbra::cmd_sweep(cfg, {policies, c.threads});
  print_summary(rows);
  std::ostringstream csv;
  sbra::write_sweep_csv(csv, cfg, rows);
  emit(c.out.empty() ? cfg.output : c.out, csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slotted random-access simulator with state-based probability control"};
  app.require_subcommand(1);

  Common run_opts, sweep_opts, compare_opts;
  std::string policy_label, trace_path;
  std::optional<double> run_rate;
  auto* run = app.add_subcommand("run", "Single simulation of one policy at one rate");
  add_common(run, run_opts);
  run->add_option("--policy", policy_label, "Policy label (default: first)");
  run->add_option("--rate", run_rate, "Arrival rate (default: first in run.rates)");
  run->add_option("--trace", trace_path, "Write the per-slot trace CSV here");

  auto* sweep = app.add_subcommand("sweep", "All policies x rates x seeds");
  add_common(sweep, sweep_opts);

  std::vector<std::string> compare_policies;
  auto* compare = app.add_subcommand("compare", "Selected policies x rates x seeds");
  add_common(compare, compare_opts);
  compare->add_option("--policies", compare_policies, "Comma-separated policy labels")
      ->required()
      ->delimiter(',');

  sbra::OracleCheckOptions oracle_opts;
  auto* oracle = app.add_subcommand("oracle-check", "Closed-form, DP-dominance and max-weight property suites");
  oracle->add_option("--count", oracle_opts.count, "Closed-form tuples");
  oracle->add_option("--step", oracle_opts.step, "Grid step g");
  oracle->add_option("--dp-instances", oracle_opts.dp_instances, "Random tiny DP instances");
  oracle->add_option("--maxweight-instances", oracle_opts.maxweight_instances, "Random max-weight cases");
  oracle->add_option("--seed", oracle_opts.seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_opts, policy_label, run_rate, trace_path);
    if (*sweep) return cmd_sweep(sweep_opts, {});
    if (*compare) return cmd_sweep(compare_opts, compare_policies);
    if (*oracle) {
      const auto report = sbra::cmd_oracle_check(oracle_opts);
      for (const auto& line : report.lines) std::cout << line << '\n';
      std::cout << (report.passed ? "oracle-check: PASS" : "oracle-check: FAIL") << '\n';
      return report.passed ? 0 : 1;
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
  return 0;
}
