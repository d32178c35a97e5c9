#include "sbra/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/core.h>

namespace sbra {

StreamSet StreamSet::make(std::uint64_t seed, const Network& network) {
  StreamSet s;
  const auto& topo = network.topology();
  for (int l = 0; l < topo.link_count(); ++l) s.channel.emplace_back(seed, StreamKind::channel, l);
  for (int i = 0; i < network.session_count(); ++i) s.arrival.emplace_back(seed, StreamKind::arrival, i);
  for (int n = 0; n < topo.node_count(); ++n) s.mac.emplace_back(seed, StreamKind::mac_decision, n);
  return s;
}

NetworkState::NetworkState(const Network& network, const Policy& policy, double channel_scale,
                           int channel_update_interval)
    : queues(network),
      channel(network.topology().link_count(), channel_scale, channel_update_interval),
      memory(network, policy.params) {}

std::vector<bool> resolve_collisions(std::span<const Attempt> attempts, const Topology& topology) {
  std::vector<bool> collided(attempts.size(), false);
  for (std::size_t i = 0; i < attempts.size(); ++i) {
    for (std::size_t j = i + 1; j < attempts.size(); ++j) {
      if (attempts[i].node == attempts[j].node) {
        throw std::invalid_argument(fmt::format("node {} attempted twice in one slot", attempts[i].node));
      }
    }
  }
  for (std::size_t i = 0; i < attempts.size(); ++i) {
    const NodeId rx = topology.link(attempts[i].link).rx;
    for (std::size_t j = 0; j < attempts.size() && !collided[i]; ++j) {
      if (j == i) continue;
      const NodeId other = attempts[j].node;
      if (other == rx || topology.are_neighbors(rx, other)) collided[i] = true;
    }
  }
  return collided;
}

SlotOutcome step(NetworkState& state, const Policy& policy, const Network& network,
                 StreamSet& streams, std::span<const double> arrival_rates) {
  if (static_cast<int>(arrival_rates.size()) != network.session_count()) {
    throw std::invalid_argument("one arrival rate per session is required");
  }
  std::vector<Backlog> arrivals(static_cast<std::size_t>(network.session_count()));
  for (int s = 0; s < network.session_count(); ++s) {
    arrivals[s] = poisson_arrivals(streams.arrival[s], arrival_rates[s]);
  }
  return step_with_arrivals(state, policy, network, streams, arrivals);
}

SlotOutcome step_with_arrivals(NetworkState& state, const Policy& policy, const Network& network,
                               StreamSet& streams, std::span<const Backlog> arrivals) {
  const Topology& topo = network.topology();
  const int pair_count = network.pair_count();
  if (static_cast<int>(arrivals.size()) != network.session_count()) {
    throw std::invalid_argument("one arrival count per session is required");
  }
  for (Backlog a : arrivals) {
    if (a < 0) throw std::invalid_argument("arrival counts must be >= 0");
  }
  if (static_cast<int>(state.memory.probability.size()) != pair_count ||
      static_cast<int>(state.queues.values().size()) != pair_count) {
    throw std::logic_error("network state does not match the network layout");
  }

  SlotOutcome out;
  out.slot = state.slot;
  const std::int64_t t = state.slot;

  out.arrivals.assign(arrivals.begin(), arrivals.end());

  const std::span<const int> rates = state.channel.channel_at(streams.channel, t);

  if (t % policy.params.update_interval == 0) {
    state.memory.probability = compute_probabilities(policy, network, state.queues, rates, state.memory);
  }

  const std::vector<Backlog> start(state.queues.values().begin(), state.queues.values().end());
  out.probabilities.assign(static_cast<std::size_t>(pair_count), 0.0);
  for (PairId p = 0; p < pair_count; ++p) {
    if (start[p] > 0) out.probabilities[p] = state.memory.probability[p];
  }

  for (NodeId n = 0; n < topo.node_count(); ++n) {
    const double u = streams.mac[n].uniform();
    double total = 0.0;
    for (PairId p : network.node_pairs(n)) total += out.probabilities[p];
    if (total > 1.0) {
      for (PairId p : network.node_pairs(n)) out.probabilities[p] /= total;
    }
    double cumulative = 0.0;
    std::optional<PairId> chosen;
    std::optional<PairId> last_candidate;
    for (PairId p : network.node_pairs(n)) {
      if (out.probabilities[p] <= 0.0) continue;
      last_candidate = p;
      cumulative += out.probabilities[p];
      if (u < cumulative) {
        chosen = p;
        break;
      }
    }
    // Normalized mass is one; rounding must not leave a sliver of idle time.
    if (!chosen && total > 1.0) chosen = last_candidate;
    if (chosen) {
      const FlowPair& fp = network.pair(*chosen);
      out.attempts.push_back({n, fp.link, fp.session, *chosen, false, 0});
    }
  }

  const std::vector<bool> collided = resolve_collisions(out.attempts, topo);
  out.delivered.assign(static_cast<std::size_t>(network.session_count()), 0);
  std::vector<std::int64_t> link_served(static_cast<std::size_t>(topo.link_count()), 0);
  std::vector<AttemptOutcome> link_outcome(static_cast<std::size_t>(topo.link_count()),
                                           AttemptOutcome::no_attempt);
  for (std::size_t i = 0; i < out.attempts.size(); ++i) {
    Attempt& a = out.attempts[i];
    a.collided = collided[i];
    link_outcome[a.link] = a.collided ? AttemptOutcome::collided : AttemptOutcome::success;
    if (a.collided) continue;
    a.served = std::min<Backlog>(start[a.pair], rates[a.link]);
    if (a.served == 0) continue;
    state.queues.add(a.pair, -a.served);
    if (auto next = network.next_pair(a.pair)) {
      state.queues.add(*next, a.served);
    } else {
      out.delivered[a.session] += a.served;
    }
    link_served[a.link] += a.served;
  }

  ControllerMemory& mem = state.memory;
  for (LinkId l = 0; l < topo.link_count(); ++l) {
    mem.served[l].push(link_served[l]);
    mem.attempts[l].push(link_outcome[l] == AttemptOutcome::no_attempt ? 0 : 1);
    mem.sigma[l] = estimate_collision(mem.sigma[l], link_outcome[l], policy.params.ema_lambda);
  }
  out.energy_spent = policy.params.energy * static_cast<double>(out.attempts.size());

  for (int s = 0; s < network.session_count(); ++s) {
    if (out.arrivals[s] > 0) state.queues.add(network.session_pairs(s).front(), out.arrivals[s]);
  }
  ++state.slot;
  return out;
}

std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Stability stability_verdict(std::span<const Backlog> series, const StabilityRule& rule) {
  const std::size_t n = series.size();
  if (n < std::max<std::size_t>(rule.min_length, 4)) return Stability::inconclusive;
  auto mean = [&](std::size_t lo, std::size_t hi) {
    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) sum += static_cast<double>(series[i]);
    return sum / static_cast<double>(hi - lo);
  };
  const double second = mean(n / 4, n / 2);
  const double last = mean(3 * n / 4, n);
  return (last > rule.growth_ratio * second && last > rule.floor) ? Stability::unstable
                                                                 : Stability::stable;
}

MetricsAccumulator::MetricsAccumulator(const Network& network, std::int64_t warmup, int window)
    : warmup_(warmup),
      arrivals_(static_cast<std::size_t>(network.session_count()), 0),
      delivered_(arrivals_.size(), 0),
      backlog_sum_(arrivals_.size(), 0.0),
      delivered_window_(arrivals_.size(), SlidingSum(window)),
      windowed_rate_sum_(arrivals_.size(), 0.0),
      link_attempts_(static_cast<std::size_t>(network.topology().link_count()), 0),
      link_collisions_(link_attempts_.size(), 0),
      link_successes_(link_attempts_.size(), 0),
      series_(static_cast<std::size_t>(network.pair_count())) {
  for (const FlowPair& fp : network.pairs()) pair_session_.push_back(fp.session);
}

void MetricsAccumulator::record(const SlotOutcome& outcome, const QueueMatrix& end_of_slot) {
  for (std::size_t p = 0; p < series_.size(); ++p) series_[p].push_back(end_of_slot[static_cast<PairId>(p)]);
  for (std::size_t s = 0; s < delivered_window_.size(); ++s) delivered_window_[s].push(outcome.delivered[s]);
  if (outcome.slot < warmup_) return;
  ++measured_;
  for (std::size_t s = 0; s < arrivals_.size(); ++s) {
    arrivals_[s] += outcome.arrivals[s];
    delivered_[s] += outcome.delivered[s];
    windowed_rate_sum_[s] += static_cast<double>(delivered_window_[s].sum());
  }
  for (std::size_t p = 0; p < series_.size(); ++p) {
    backlog_sum_[pair_session_[p]] += static_cast<double>(end_of_slot[static_cast<PairId>(p)]);
  }
  for (const Attempt& a : outcome.attempts) {
    ++link_attempts_[a.link];
    if (a.collided) {
      ++link_collisions_[a.link];
    } else {
      ++link_successes_[a.link];
    }
  }
  energy_ += outcome.energy_spent;
}

MetricsReport compute_metrics(const MetricsAccumulator& acc, const Network& network,
                              double slot_seconds, const StabilityRule& rule) {
  MetricsReport r;
  r.measured_slots = acc.measured_;
  const double slots = static_cast<double>(acc.measured_);
  double total_backlog = 0.0;
  double log_sum = 0.0;
  bool utility_defined = network.session_count() > 0;
  for (int s = 0; s < network.session_count(); ++s) {
    SessionMetrics m;
    if (acc.measured_ > 0) {
      m.throughput = static_cast<double>(acc.delivered_[s]) / slots;
      m.offered = static_cast<double>(acc.arrivals_[s]) / slots;
      m.mean_path_backlog = acc.backlog_sum_[s] / slots;
      m.mean_windowed_rate = acc.windowed_rate_sum_[s] / slots;
    }
    if (m.throughput > 0.0) {
      m.delay_slots = m.mean_path_backlog / m.throughput;
      m.delay_seconds = *m.delay_slots * slot_seconds;
    }
    if (m.mean_windowed_rate > 0.0) {
      m.log_utility = std::log(m.mean_windowed_rate);
      log_sum += *m.log_utility;
    } else {
      utility_defined = false;
    }
    r.throughput += m.throughput;
    total_backlog += m.mean_path_backlog;
    r.sessions.push_back(m);
  }
  if (utility_defined) r.network_utility = log_sum;
  if (r.throughput > 0.0) {
    r.delay_slots = total_backlog / r.throughput;
    r.delay_seconds = *r.delay_slots * slot_seconds;
  }

  std::int64_t attempts = 0;
  std::int64_t collisions = 0;
  for (std::size_t l = 0; l < acc.link_attempts_.size(); ++l) {
    LinkMetrics lm;
    lm.attempts = acc.link_attempts_[l];
    lm.collisions = acc.link_collisions_[l];
    if (acc.measured_ > 0) lm.utilization = static_cast<double>(acc.link_successes_[l]) / slots;
    if (lm.attempts > 0) lm.collision_rate = static_cast<double>(lm.collisions) / static_cast<double>(lm.attempts);
    attempts += lm.attempts;
    collisions += lm.collisions;
    r.links.push_back(lm);
  }
  if (attempts > 0) r.collision_rate = static_cast<double>(collisions) / static_cast<double>(attempts);
  r.total_energy = acc.energy_;
  if (acc.measured_ > 0) r.energy_per_slot = acc.energy_ / slots;

  bool any_unstable = false;
  bool any_inconclusive = acc.series_.empty() && acc.measured_ == 0;
  for (const auto& series : acc.series_) {
    const Stability v = stability_verdict(series, rule);
    any_unstable |= v == Stability::unstable;
    any_inconclusive |= v == Stability::inconclusive;
    r.queue_stability.push_back(v);
  }
  r.stability = any_unstable ? Stability::unstable
                : any_inconclusive ? Stability::inconclusive
                                   : Stability::stable;
  return r;
}

RunResult run(const Network& network, const RunConfig& config) {
  validate_policy(config.policy, network);
  if (static_cast<int>(config.arrival_rates.size()) != network.session_count()) {
    throw std::invalid_argument(fmt::format("expected {} arrival rates, got {}",
                                            network.session_count(), config.arrival_rates.size()));
  }
  if (config.slots < 0) throw std::invalid_argument("slots must be >= 0");
  if (config.warmup < 0 || (config.slots > 0 && config.warmup >= config.slots)) {
    throw std::invalid_argument(fmt::format("warmup must be in [0, slots), got {}", config.warmup));
  }

  NetworkState state(network, config.policy, config.channel_scale, config.channel_update_interval);
  StreamSet streams = StreamSet::make(config.seed, network);
  MetricsAccumulator acc(network, config.warmup, config.policy.params.window);
  RunResult result;
  std::vector<Backlog> start;
  for (std::int64_t t = 0; t < config.slots; ++t) {
    if (config.keep_trace) start.assign(state.queues.values().begin(), state.queues.values().end());
    const SlotOutcome outcome = step(state, config.policy, network, streams, config.arrival_rates);
    acc.record(outcome, state.queues);
    if (!config.keep_trace) continue;
    const auto rates = state.channel.rates();
    for (PairId p = 0; p < network.pair_count(); ++p) {
      const FlowPair& fp = network.pair(p);
      TraceRow row{outcome.slot, fp.link, fp.session, start[p], rates[fp.link],
                   outcome.probabilities[p], false, false, 0};
      for (const Attempt& a : outcome.attempts) {
        if (a.pair != p) continue;
        row.attempted = true;
        row.collided = a.collided;
        row.served = a.served;
      }
      result.trace.push_back(row);
    }
  }
  result.report = compute_metrics(acc, network, config.slot_seconds, config.stability);
  return result;
}

}  // namespace sbra
