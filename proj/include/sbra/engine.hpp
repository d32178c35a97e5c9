// Slotted simulation loop and metric accounting.
//
// One slot, in order:
//   1. Poisson arrivals are drawn for every session (enqueued at the end of
//      the slot, so they are first eligible in the next slot).
//   2. Channel rates refresh when t is a multiple of the update interval.
//   3. Probabilities recompute when t is a multiple of K, from the slot-start
//      backlogs; pairs with empty queues are forced to zero every slot.
//   4. Each node draws one categorical sample over its non-empty pairs
//      (probabilities rescaled if they sum above one) or stays idle.
//   5. Collisions are resolved at the receivers.
//   6. A successful attempt moves min(q, c) packets to the next hop, or to
//      the destination on the last hop.
//   7. Controller windows, collision estimates and metrics are updated.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sbra/controllers.hpp"
#include "sbra/net_model.hpp"
#include "sbra/stochastic.hpp"

namespace sbra {

// Default slot duration in seconds.
inline constexpr double kDefaultSlotSeconds = 0.005;

struct StreamSet {
  std::vector<RngStream> channel;  // per link
  std::vector<RngStream> arrival;  // per session
  std::vector<RngStream> mac;      // per node

  static StreamSet make(std::uint64_t seed, const Network& network);
};

struct NetworkState {
  NetworkState(const Network& network, const Policy& policy, double channel_scale,
               int channel_update_interval);

  std::int64_t slot = 0;
  QueueMatrix queues;
  ChannelProcess channel;
  ControllerMemory memory;
};

struct Attempt {
  NodeId node = 0;
  LinkId link = 0;
  SessionId session = 0;
  PairId pair = 0;
  bool collided = false;
  Backlog served = 0;
};

struct SlotOutcome {
  std::int64_t slot = 0;
  std::vector<Attempt> attempts;
  std::vector<Backlog> arrivals;      // per session
  std::vector<Backlog> delivered;     // per session
  std::vector<double> probabilities;  // per pair, effective this slot
  double energy_spent = 0.0;
};

// Collision flags aligned with `attempts`. An attempt on link l fails iff
// another attempting node is rx(l) or a neighbor of rx(l). Throws
// std::invalid_argument when one node appears twice.
std::vector<bool> resolve_collisions(std::span<const Attempt> attempts, const Topology& topology);

// Advances `state` by one slot.
SlotOutcome step(NetworkState& state, const Policy& policy, const Network& network,
                 StreamSet& streams, std::span<const double> arrival_rates);

// Same slot with the per-session arrival counts given instead of drawn.
SlotOutcome step_with_arrivals(NetworkState& state, const Policy& policy, const Network& network,
                               StreamSet& streams, std::span<const Backlog> arrivals);

enum class Stability { stable, unstable, inconclusive };
std::string_view to_string(Stability s);

struct StabilityRule {
  double growth_ratio = 2.0;   // last-quarter mean vs second-quarter mean
  double floor = 50.0;         // absolute last-quarter mean threshold, packets
  std::size_t min_length = 8;  // shorter series are inconclusive
};

// Unstable iff mean(last quarter) > ratio * mean(second quarter) and
// mean(last quarter) > floor.
Stability stability_verdict(std::span<const Backlog> series, const StabilityRule& rule = {});

struct SessionMetrics {
  double throughput = 0.0;  // delivered packets per slot
  double offered = 0.0;     // arrivals per slot
  double mean_path_backlog = 0.0;
  std::optional<double> delay_slots;
  std::optional<double> delay_seconds;
  double mean_windowed_rate = 0.0;  // delivered over the last N slots
  std::optional<double> log_utility;
};

struct LinkMetrics {
  std::int64_t attempts = 0;
  std::int64_t collisions = 0;
  double utilization = 0.0;  // successful attempts per slot
  std::optional<double> collision_rate;
};

struct MetricsReport {
  std::int64_t measured_slots = 0;
  std::vector<SessionMetrics> sessions;
  std::vector<LinkMetrics> links;
  double throughput = 0.0;
  std::optional<double> delay_slots;  // network-wide Little's-law delay
  std::optional<double> delay_seconds;
  double total_energy = 0.0;
  double energy_per_slot = 0.0;
  std::optional<double> collision_rate;
  std::optional<double> network_utility;
  std::vector<Stability> queue_stability;  // per pair
  Stability stability = Stability::inconclusive;
};

// Consumes slot outcomes in order. Slots before `warmup` only feed the
// stability series.
class MetricsAccumulator {
 public:
  MetricsAccumulator(const Network& network, std::int64_t warmup, int window);

  void record(const SlotOutcome& outcome, const QueueMatrix& end_of_slot);

  std::int64_t measured_slots() const { return measured_; }
  std::span<const Backlog> backlog_series(PairId p) const { return series_.at(static_cast<std::size_t>(p)); }

 private:
  friend MetricsReport compute_metrics(const MetricsAccumulator&, const Network&, double,
                                       const StabilityRule&);

  std::int64_t warmup_;
  std::int64_t measured_ = 0;
  std::vector<std::int64_t> arrivals_;
  std::vector<std::int64_t> delivered_;
  std::vector<double> backlog_sum_;
  std::vector<SlidingSum> delivered_window_;
  std::vector<double> windowed_rate_sum_;
  std::vector<std::int64_t> link_attempts_;
  std::vector<std::int64_t> link_collisions_;
  std::vector<std::int64_t> link_successes_;
  double energy_ = 0.0;
  std::vector<std::vector<Backlog>> series_;
  std::vector<SessionId> pair_session_;
};

// Little's-law delay: mean path backlog / throughput, absent at zero
// throughput.
MetricsReport compute_metrics(const MetricsAccumulator& acc, const Network& network,
                              double slot_seconds, const StabilityRule& rule = {});

struct RunConfig {
  Policy policy;
  std::vector<double> arrival_rates;  // per session
  std::int64_t slots = 0;
  std::int64_t warmup = 0;
  std::uint64_t seed = 1;
  double channel_scale = kUnitMeanRayleighScale;
  int channel_update_interval = 10;
  double slot_seconds = kDefaultSlotSeconds;
  StabilityRule stability;
  bool keep_trace = false;
};

struct TraceRow {
  std::int64_t slot = 0;
  LinkId link = 0;
  SessionId session = 0;
  Backlog backlog = 0;  // slot start
  int rate = 0;
  double probability = 0.0;
  bool attempted = false;
  bool collided = false;
  Backlog served = 0;
};

struct RunResult {
  MetricsReport report;
  std::vector<TraceRow> trace;
};

RunResult run(const Network& network, const RunConfig& config);

}  // namespace sbra
