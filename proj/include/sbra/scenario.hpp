// Scenario files: INI-style key/value text with sections for topology,
// sessions, channel, run control and one or more labelled policies. See
// scenarios/README.md for the schema.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sbra/controllers.hpp"
#include "sbra/engine.hpp"
#include "sbra/net_model.hpp"

namespace sbra {

inline constexpr int kSchemaVersion = 1;

// Thrown for every scenario problem; the message starts with the offending
// key ("section.key: ...").
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PolicyEntry {
  std::string label;
  Policy policy;
  // When set, delta = delta_per_rate / (window * rate) at each sweep rate.
  std::optional<double> delta_per_rate;
};

struct ScenarioConfig {
  int schema_version = kSchemaVersion;
  TopologySpec topology;
  std::vector<Session> sessions;
  std::vector<PolicyEntry> policies;  // sorted by label
  std::vector<double> rates;
  std::int64_t slots = 0;
  std::optional<std::int64_t> warmup;  // defaults to 10% of slots
  std::vector<std::uint64_t> seeds{1};
  double channel_scale = kUnitMeanRayleighScale;
  int channel_update_interval = 10;
  double slot_seconds = kDefaultSlotSeconds;
  StabilityRule stability;
  std::string output;
  // Every key/value as read, in file order, for CSV provenance.
  std::vector<std::pair<std::string, std::string>> echo;

  std::int64_t effective_warmup() const { return warmup ? *warmup : slots / 10; }
};

ScenarioConfig parse_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario_text(std::string_view text);

// Re-checks cross-field invariants (after CLI overrides).
void validate_scenario(const ScenarioConfig& config);

Network build_network(const ScenarioConfig& config);

const PolicyEntry& find_policy(const ScenarioConfig& config, std::string_view label);

// Concrete run for one (policy, rate, seed) point.
RunConfig make_run_config(const ScenarioConfig& config, const PolicyEntry& entry, double rate,
                          std::uint64_t seed, const Network& network);

}  // namespace sbra
