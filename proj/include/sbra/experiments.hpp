// Command implementations behind the `sbra` tool: rate sweeps, policy
// comparisons, CSV emission and the oracle property suites.
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sbra/dp_oracle.hpp"
#include "sbra/engine.hpp"
#include "sbra/scenario.hpp"
#include "sbra/stochastic.hpp"

namespace sbra {

struct SweepRow {
  std::string policy;
  double rate = 0.0;
  std::uint64_t seed = 0;
  MetricsReport report;
};

struct SweepOptions {
  std::vector<std::string> policies;  // labels; empty selects all
  unsigned threads = 0;               // 0 = hardware concurrency
};

// Runs every (policy, rate, seed) point. Rows come back sorted by
// (policy, rate, seed) regardless of thread scheduling.
std::vector<SweepRow> cmd_sweep(const ScenarioConfig& config, const SweepOptions& options = {});

// Header comment block echoing the config, one row per point, then mean and
// stddev rows per (policy, rate) group flagged in the `summary` column.
void write_sweep_csv(std::ostream& out, const ScenarioConfig& config, std::span<const SweepRow> rows);

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows);

// Mean over seeds of a per-row optional metric; rows without a value are
// skipped. Returns nothing when no row has one.
std::optional<double> mean_of(std::span<const SweepRow> rows, std::string_view policy, double rate,
                              const std::function<std::optional<double>(const MetricsReport&)>& metric);

using ClosedForm = std::function<double(double served_window, int rate, double sigma, double energy,
                                        double delta)>;

struct OracleCheckOptions {
  int count = 1000;  // closed-form tuples
  double step = 1e-3;
  int dp_instances = 100;
  int maxweight_instances = 200;
  std::uint64_t seed = 1;
  ClosedForm closed_form = single_hop_probability;
};

struct OracleCheckReport {
  bool passed = true;
  std::vector<std::string> lines;
};

OracleCheckReport cmd_oracle_check(const OracleCheckOptions& options);

// Random single-hop instance with H <= 5 and B <= 5.
oracle::TinyInstance random_tiny_instance(RngStream& rng);

}  // namespace sbra
