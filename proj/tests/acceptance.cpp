// Acceptance suite: one PASS/FAIL line per criterion, with supporting numbers
// indented underneath. Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "invariants.hpp"
#include "sbra/controllers.hpp"
#include "sbra/experiments.hpp"
#include "sbra/scenario.hpp"

using namespace sbra;

namespace {

const std::filesystem::path kScenarios = SBRA_SCENARIO_DIR;
const std::filesystem::path kGolden = SBRA_GOLDEN_DIR;

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;
  void note(std::string s) { details.push_back(std::move(s)); }
  void require(bool ok, std::string what) {
    if (!ok) {
      pass = false;
      details.push_back("violated: " + what);
    }
  }
};

int failures = 0;

template <class F>
void criterion(int id, std::string_view title, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    body(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.note(fmt::format("exception: {}", e.what()));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!out.pass) ++failures;
  std::cout << fmt::format("{} criterion {}: {} ({:.1f} s)\n", out.pass ? "PASS" : "FAIL", id, title, secs);
  for (const auto& d : out.details) std::cout << "    " << d << '\n';
  std::cout.flush();
}

double mean_metric(const std::vector<SweepRow>& rows, std::string_view policy, double rate,
                   std::optional<double> MetricsReport::*field) {
  const auto v = mean_of(rows, policy, rate, [field](const MetricsReport& m) { return m.*field; });
  return v ? *v : std::numeric_limits<double>::infinity();
}

double mean_energy(const std::vector<SweepRow>& rows, std::string_view policy, double rate) {
  return *mean_of(rows, policy, rate, [](const MetricsReport& m) { return std::optional(m.energy_per_slot); });
}

bool all_seeds_stable(const std::vector<SweepRow>& rows, std::string_view policy, double rate) {
  bool any = false;
  for (const auto& r : rows) {
    if (r.policy != policy || r.rate != rate) continue;
    any = true;
    if (r.report.stability != Stability::stable) return false;
  }
  return any;
}

std::string sweep_csv(const ScenarioConfig& cfg) {
  std::ostringstream out;
  write_sweep_csv(out, cfg, cmd_sweep(cfg));
  return out.str();
}

struct GoldenCase {
  const char* scenario;
  const char* policy;
  double rate;
  std::int64_t slots;
  const char* file;
};

// Same path as `sbra run <scenario> --policy P --rate R --slots N --trace F`.
std::string trace_csv(const GoldenCase& g) {
  ScenarioConfig cfg = parse_scenario(kScenarios / g.scenario);
  cfg.slots = g.slots;
  validate_scenario(cfg);
  const Network net = build_network(cfg);
  RunConfig rc = make_run_config(cfg, find_policy(cfg, g.policy), g.rate, cfg.seeds.front(), net);
  rc.keep_trace = true;
  std::ostringstream out;
  write_trace_csv(out, run(net, rc).trace);
  return out.str();
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("{}: cannot read", p.string()));
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

int main() {
  criterion(1, "closed form matches the grid argmax within 2g (1000 tuples, g = 1e-3)", [](Outcome& o) {
    OracleCheckOptions opt;
    opt.count = 1000;
    opt.step = 1e-3;
    opt.dp_instances = 0;
    opt.maxweight_instances = 0;
    const auto rep = cmd_oracle_check(opt);
    for (const auto& l : rep.lines) {
      if (l.find("closed-form") != std::string::npos) o.note(l);
    }
    o.require(rep.passed, "closed-form agreement");
  });

  criterion(2, "DP dominance over myopic, static and always-transmit (100 instances, 1e-9)", [](Outcome& o) {
    OracleCheckOptions opt;
    opt.count = 0;
    opt.dp_instances = 100;
    opt.maxweight_instances = 0;
    const auto rep = cmd_oracle_check(opt);
    for (const auto& l : rep.lines) {
      if (l.find("dp") != std::string::npos) o.note(l);
    }
    o.require(rep.passed, "dp dominance");
  });

  criterion(3, "single-link delay/energy trends (1e5 slots, 5 seeds)", [](Outcome& o) {
    const ScenarioConfig cfg = parse_scenario(kScenarios / "table2.scn");
    o.require(cfg.slots == 100000 && cfg.seeds.size() == 5, "scenario runs 1e5 slots x 5 seeds");
    const auto rows = cmd_sweep(cfg);
    o.note("rate   delay d1 (s)   delay d2 (s)   energy d1   energy d2");
    std::map<std::string, std::vector<double>> delays;
    for (double r : cfg.rates) {
      const double d1 = mean_metric(rows, "delta1", r, &MetricsReport::delay_seconds);
      const double d2 = mean_metric(rows, "delta2", r, &MetricsReport::delay_seconds);
      const double e1 = mean_energy(rows, "delta1", r);
      const double e2 = mean_energy(rows, "delta2", r);
      o.note(fmt::format("{:<6} {:<14.6g} {:<14.6g} {:<11.4f} {:.4f}", r, d1, d2, e1, e2));
      o.require(d2 < d1, fmt::format("(a) delay d2 < d1 at r={}", r));
      o.require(e2 > e1, fmt::format("(b) energy d2 > d1 at r={}", r));
      if (r != 0.7) {
        delays["delta1"].push_back(d1);
        delays["delta2"].push_back(d2);
      }
    }
    for (const auto& [label, series] : delays) {
      for (std::size_t i = 1; i < series.size(); ++i) {
        o.require(series[i] >= series[i - 1], fmt::format("(c) {} delay nondecreasing in rate", label));
      }
    }
    const double d03 = mean_metric(rows, "delta1", 0.3, &MetricsReport::delay_seconds);
    o.require(d03 >= 0.004 && d03 <= 0.1, fmt::format("(d) r=0.3 d1 delay {} in [0.004, 0.1] s", d03));
  });

  criterion(4, "multi-hop policy ordering (1e5 slots, 5 seeds)", [](Outcome& o) {
    const ScenarioConfig cfg = parse_scenario(kScenarios / "fig2_compare.scn");
    const Network net = build_network(cfg);
    o.require(net.topology().node_count() == 10 && net.topology().link_count() == 12 && net.session_count() == 4,
              "10 nodes, 12 links, 4 sessions");
    o.require(cfg.slots == 100000 && cfg.seeds.size() == 5 && cfg.channel_update_interval == 10,
              "1e5 slots, 5 seeds, U = 10");
    for (const auto& e : cfg.policies) o.require(e.policy.params.update_interval == 3, "K = 3");
    const auto rows = cmd_sweep(cfg);
    const std::vector<std::string> policies{"queue-based", "linear-sbra", "square-sbra", "exponential-sbra"};
    std::map<std::string, double> max_stable;
    std::string header = "rate    ";
    for (const auto& p : policies) header += fmt::format("{:>18}", p);
    o.note(header + "   (mean delay, slots; * = some seed unstable)");
    for (double r : cfg.rates) {
      std::string line = fmt::format("{:<8}", r);
      for (const auto& p : policies) {
        const bool stable = all_seeds_stable(rows, p, r);
        if (stable) max_stable[p] = std::max(max_stable[p], r);
        line += fmt::format("{:>17.6g}{}", mean_metric(rows, p, r, &MetricsReport::delay_slots), stable ? ' ' : '*');
      }
      o.note(line);
    }
    const double low = *std::min_element(cfg.rates.begin(), cfg.rates.end());
    const double lin = mean_metric(rows, "linear-sbra", low, &MetricsReport::delay_slots);
    const double sq = mean_metric(rows, "square-sbra", low, &MetricsReport::delay_slots);
    const double ex = mean_metric(rows, "exponential-sbra", low, &MetricsReport::delay_slots);
    o.note(fmt::format("(a) at r={}: linear {:.6g} vs square {:.6g}, exponential {:.6g}", low, lin, sq, ex));
    o.require(lin <= sq && lin <= ex, "(a) linear-SBRA delay lowest among SBRA at the lowest rate");
    std::string ms = "(b) max all-seed-stable rate:";
    for (const auto& p : policies) ms += fmt::format(" {}={}", p, max_stable.count(p) ? max_stable[p] : 0.0);
    o.note(ms);
    for (const auto& p : policies) {
      if (p == "exponential-sbra") continue;
      o.require(max_stable["exponential-sbra"] > max_stable[p], "(b) exponential-SBRA tolerates the highest rate vs " + p);
    }
  });

  criterion(5, "conservation and safety over 1e6 randomized steps", [](Outcome& o) {
    const testing::SafetyReport rep = testing::check_random_steps(20240601, 1000000);
    o.note(fmt::format("{} steps, {} violations", rep.steps, rep.violations));
    for (const auto& s : rep.first) o.note(s);
    o.require(rep.steps == 1000000 && rep.violations == 0, "zero violations");
  });

  criterion(6, "algebraic invariances (scale, shift <= 1e-12, sigma = 0 reduction on 1e4 tuples)", [](Outcome& o) {
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst_scale = 0.0, worst_shift = 0.0;
    for (int trial = 0; trial < 2000; ++trial) {
      const testing::RandomCase c = testing::random_case(rng);
      const Network& net = c.network;
      QueueMatrix q(net);
      std::vector<double> w(static_cast<std::size_t>(net.pair_count()));
      for (PairId p = 0; p < net.pair_count(); ++p) {
        q.set(p, rng() % 3 == 0 ? 0 : 1 + static_cast<Backlog>(rng() % 20));
        w[p] = q[p] > 0 ? 20.0 * unit(rng) : 0.0;
      }
      const double k = 0.01 + 100.0 * unit(rng);
      const double shift = 50.0 * unit(rng);
      std::vector<double> scaled(w), shifted(w);
      for (double& x : scaled) x *= k;
      for (double& x : shifted) x += shift;
      for (bool exclude : {false, true}) {
        for (Transform t : {Transform::linear, Transform::square}) {
          const auto a = sbra_probabilities(net, w, q, t, exclude);
          const auto b = sbra_probabilities(net, scaled, q, t, exclude);
          for (std::size_t i = 0; i < a.size(); ++i) worst_scale = std::max(worst_scale, std::abs(a[i] - b[i]));
        }
        const auto a = sbra_probabilities(net, w, q, Transform::exponential, exclude);
        const auto b = sbra_probabilities(net, shifted, q, Transform::exponential, exclude);
        for (std::size_t i = 0; i < a.size(); ++i) worst_shift = std::max(worst_shift, std::abs(a[i] - b[i]));
      }
    }
    o.note(fmt::format("max |linear/square(w) - (k w)| = {:.3g}; max |exp(w) - exp(w + s)| = {:.3g}", worst_scale,
                       worst_shift));
    o.require(worst_scale <= 1e-12, "scale invariance");
    o.require(worst_shift <= 1e-12, "shift invariance");

    int tuples = 0, mismatches = 0;
    for (int c = 1; c <= 5; ++c) {
      for (int xi = 0; xi < 40; ++xi) {
        for (int ei = 0; ei < 50; ++ei) {
          const double x = 0.25 * xi;
          const double ed = 0.1 + 0.2 * ei;
          ++tuples;
          if (single_hop_probability(x, c, 0.0, 1.0, ed) != single_link_probability(x, c, 1.0, ed)) ++mismatches;
        }
      }
    }
    o.note(fmt::format("sigma = 0 reduction: {} tuples, {} mismatches", tuples, mismatches));
    o.require(tuples == 10000 && mismatches == 0, "single-hop at sigma = 0 equals single-link exactly");
  });

  criterion(7, "determinism: byte-identical CSV reruns and golden traces", [](Outcome& o) {
    for (const char* name : {"table2.scn", "multihop10.scn"}) {
      const ScenarioConfig cfg = parse_scenario(kScenarios / name);
      const std::string a = sweep_csv(cfg);
      const std::string b = sweep_csv(cfg);
      o.note(fmt::format("{}: {} bytes, reruns {}", name, a.size(), a == b ? "identical" : "DIFFER"));
      o.require(a == b, fmt::format("{} rerun byte-identical", name));
    }
    const GoldenCase cases[] = {
        {"single_link.scn", "single-link", 0.3, 2000, "single_link_trace.csv"},
        {"multihop10.scn", "linear-sbra", 0.1, 400, "multihop10_trace.csv"},
        {"fig2_compare.scn", "exponential-sbra", 0.14, 400, "fig2_exponential_trace.csv"},
    };
    for (const auto& g : cases) {
      const std::string got = trace_csv(g);
      const std::string want = read_file(kGolden / g.file);
      o.note(fmt::format("{}: {} bytes, {}", g.file, got.size(), got == want ? "matches" : "DIFFERS"));
      o.require(got == want, fmt::format("golden trace {}", g.file));
    }
  });

  std::cout << (failures ? fmt::format("{} criteria failed\n", failures) : std::string("all criteria passed\n"));
  return failures ? 1 : 0;
}
