#include "sbra/controllers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include <fmt/core.h>

namespace sbra {

namespace {

constexpr std::array<std::pair<PolicyKind, std::string_view>, 8> kPolicyNames{{
    {PolicyKind::static_fixed, "static-fixed"},
    {PolicyKind::propfair_static, "propfair-static"},
    {PolicyKind::queue_based, "queue-based"},
    {PolicyKind::linear_sbra, "linear-sbra"},
    {PolicyKind::square_sbra, "square-sbra"},
    {PolicyKind::exponential_sbra, "exponential-sbra"},
    {PolicyKind::single_link_optimal, "single-link-optimal"},
    {PolicyKind::single_hop_optimal, "single-hop-optimal"},
}};

double apply_transform(double w, Transform t) {
  switch (t) {
    case Transform::linear: return w;
    case Transform::square: return w * w;
    case Transform::exponential: return std::exp(w);
  }
  return w;
}

bool uses_delta(PolicyKind k) {
  return k == PolicyKind::single_link_optimal || k == PolicyKind::single_hop_optimal;
}

}  // namespace

std::string_view to_string(PolicyKind kind) {
  for (auto [k, name] : kPolicyNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<PolicyKind> parse_policy_kind(std::string_view name) {
  for (auto [k, n] : kPolicyNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

void validate_policy(const Policy& policy, const Network& network) {
  const PolicyParams& p = policy.params;
  if (!(p.energy > 0.0) || !std::isfinite(p.energy)) {
    throw std::invalid_argument(fmt::format("energy must be > 0, got {}", p.energy));
  }
  if (!(p.delta >= 0.0) || !std::isfinite(p.delta)) {
    throw std::invalid_argument(fmt::format("delta must be >= 0, got {}", p.delta));
  }
  if (uses_delta(policy.kind) && p.delta == 0.0) {
    throw std::invalid_argument("delta must be > 0 for closed-form policies (1/(e*delta) unbounded)");
  }
  if (p.window < 1) throw std::invalid_argument(fmt::format("window must be >= 1, got {}", p.window));
  if (p.update_interval < 1) {
    throw std::invalid_argument(fmt::format("update_interval must be >= 1, got {}", p.update_interval));
  }
  if (!(p.ema_lambda > 0.0 && p.ema_lambda <= 1.0)) {
    throw std::invalid_argument(fmt::format("ema_lambda must be in (0, 1], got {}", p.ema_lambda));
  }
  if (policy.kind == PolicyKind::static_fixed || policy.kind == PolicyKind::propfair_static) {
    const int links = network.topology().link_count();
    if (!p.static_weights.empty() && static_cast<int>(p.static_weights.size()) != links) {
      throw std::invalid_argument(fmt::format("static_weights needs {} entries, got {}", links,
                                              p.static_weights.size()));
    }
    for (double w : p.static_weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw std::invalid_argument(fmt::format("static_weights must be >= 0, got {}", w));
      }
      if (policy.kind == PolicyKind::static_fixed && w > 1.0) {
        throw std::invalid_argument(
            fmt::format("static_weights are probabilities for static-fixed, got {}", w));
      }
    }
  }
}

SlidingSum::SlidingSum(int window) : ring_(static_cast<std::size_t>(std::max(window, 1)), 0) {}

void SlidingSum::push(std::int64_t value) {
  sum_ += value - ring_[head_];
  ring_[head_] = value;
  head_ = (head_ + 1) % ring_.size();
}

ControllerMemory::ControllerMemory(const Network& network, const PolicyParams& params)
    : served(static_cast<std::size_t>(network.topology().link_count()), SlidingSum(params.window)),
      attempts(static_cast<std::size_t>(network.topology().link_count()), SlidingSum(params.window)),
      sigma(static_cast<std::size_t>(network.topology().link_count()), 0.0),
      probability(static_cast<std::size_t>(network.pair_count()), 0.0) {}

double project_unit(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("project_unit: non-finite input");
  return std::min(std::max(x, 0.0), 1.0);
}

double single_link_probability(double served_window, int rate, double energy, double delta) {
  return single_hop_probability(served_window, rate, 0.0, energy, delta);
}

double single_hop_probability(double served_window, int rate, double sigma, double energy,
                              double delta) {
  if (rate < 0) throw std::invalid_argument(fmt::format("channel rate must be >= 0, got {}", rate));
  if (!(sigma >= 0.0 && sigma < 1.0)) {
    throw std::invalid_argument(fmt::format("collision estimate must be in [0, 1), got {}", sigma));
  }
  if (!(energy * delta > 0.0)) throw std::invalid_argument("e*delta must be > 0");
  if (rate == 0) return 0.0;
  return project_unit(1.0 / (energy * delta) - served_window / (rate * (1.0 - sigma)));
}

double estimate_collision(double sigma_prev, AttemptOutcome outcome, double lambda) {
  switch (outcome) {
    case AttemptOutcome::no_attempt: return sigma_prev;
    case AttemptOutcome::success: return (1.0 - lambda) * sigma_prev;
    case AttemptOutcome::collided: return (1.0 - lambda) * sigma_prev + lambda;
  }
  return sigma_prev;
}

double link_weight(const Network& network, const QueueMatrix& queues, std::span<const int> channel,
                   SessionId s, LinkId l, WeightMode mode) {
  const double dq = static_cast<double>(std::max<Backlog>(differential_backlog(network, queues, s, l), 0));
  if (mode == WeightMode::queue_only) return dq;
  return dq * channel[static_cast<std::size_t>(l)];
}

std::vector<double> sbra_probabilities(const Network& network, std::span<const double> weights,
                                       const QueueMatrix& queues, Transform transform,
                                       bool exclude_idle) {
  if (static_cast<int>(weights.size()) != network.pair_count()) {
    throw std::invalid_argument("one weight per (link, session) pair is required");
  }
  for (double w : weights) {
    if (!(w >= 0.0) || std::isnan(w)) throw std::invalid_argument(fmt::format("negative weight {}", w));
  }
  const Topology& topo = network.topology();
  std::vector<double> out(weights.size(), 0.0);
  for (PairId p = 0; p < network.pair_count(); ++p) {
    if (queues[p] <= 0) continue;
    const LinkId l = network.pair(p).link;
    double shift = 0.0;
    if (transform == Transform::exponential) {
      shift = -std::numeric_limits<double>::infinity();
      for (LinkId k : topo.interference(l)) {
        for (PairId q : network.link_pairs(k)) {
          if (!exclude_idle || queues[q] > 0) shift = std::max(shift, weights[q]);
        }
      }
    }
    double denom = 0.0;
    for (LinkId k : topo.interference(l)) {
      for (PairId q : network.link_pairs(k)) {
        if (!exclude_idle || queues[q] > 0) denom += apply_transform(weights[q] - shift, transform);
      }
    }
    if (denom > 0.0) out[p] = apply_transform(weights[p] - shift, transform) / denom;
  }
  return out;
}

std::vector<double> compute_probabilities(const Policy& policy, const Network& network,
                                          const QueueMatrix& queues, std::span<const int> channel,
                                          const ControllerMemory& memory) {
  const PolicyParams& prm = policy.params;
  const int n = network.pair_count();
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  auto static_weight = [&](LinkId l) {
    return prm.static_weights.empty() ? 1.0 : prm.static_weights[static_cast<std::size_t>(l)];
  };
  auto sbra = [&](WeightMode mode, Transform transform) {
    std::vector<double> w(static_cast<std::size_t>(n));
    for (PairId p = 0; p < n; ++p) {
      const FlowPair& fp = network.pair(p);
      w[p] = link_weight(network, queues, channel, fp.session, fp.link, mode);
    }
    return sbra_probabilities(network, w, queues, transform, prm.exclude_idle);
  };

  switch (policy.kind) {
    case PolicyKind::static_fixed:
      for (PairId p = 0; p < n; ++p) {
        if (queues[p] > 0) out[p] = static_weight(network.pair(p).link);
      }
      return out;
    case PolicyKind::propfair_static: {
      std::vector<double> w(static_cast<std::size_t>(n));
      for (PairId p = 0; p < n; ++p) w[p] = static_weight(network.pair(p).link);
      return sbra_probabilities(network, w, queues, Transform::linear, prm.exclude_idle);
    }
    case PolicyKind::queue_based: return sbra(WeightMode::queue_only, Transform::linear);
    case PolicyKind::linear_sbra: return sbra(WeightMode::state, Transform::linear);
    case PolicyKind::square_sbra: return sbra(WeightMode::state, Transform::square);
    case PolicyKind::exponential_sbra: return sbra(WeightMode::state, Transform::exponential);
    case PolicyKind::single_link_optimal:
    case PolicyKind::single_hop_optimal:
      for (PairId p = 0; p < n; ++p) {
        if (queues[p] <= 0) continue;
        const LinkId l = network.pair(p).link;
        const int c = channel[static_cast<std::size_t>(l)];
        const double sigma = policy.kind == PolicyKind::single_hop_optimal ? memory.sigma[l] : 0.0;
        out[p] = single_hop_probability(memory.served_window(l), c, sigma, prm.energy, prm.delta);
      }
      return out;
  }
  return out;
}

}  // namespace sbra
