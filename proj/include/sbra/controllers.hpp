// Transmission-probability control rules: closed-form single-link and
// single-hop optima, static proportional-fair weights, and the state-based
// random access (SBRA) family.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sbra/net_model.hpp"

namespace sbra {

enum class PolicyKind {
  static_fixed,
  propfair_static,
  queue_based,
  linear_sbra,
  square_sbra,
  exponential_sbra,
  single_link_optimal,
  single_hop_optimal,
};

std::string_view to_string(PolicyKind kind);
std::optional<PolicyKind> parse_policy_kind(std::string_view name);

struct PolicyParams {
  double delta = 0.0;          // energy cost coefficient
  double energy = 1.0;         // energy per transmission attempt
  int window = 10;             // served/energy window length N, slots
  int update_interval = 3;     // probability recompute period K, slots
  double ema_lambda = 0.1;     // collision estimator step
  // SBRA denominators normally sum every pair on the interfering links,
  // idle ones included (they matter only for the exponential transform,
  // where an idle pair still contributes exp(0)). Set to drop them.
  bool exclude_idle = false;
  // Per-link weights. propfair-static uses them as proportional-fair
  // weights; static-fixed uses them directly as attempt probabilities.
  std::vector<double> static_weights;
};

struct Policy {
  PolicyKind kind = PolicyKind::linear_sbra;
  PolicyParams params;
};

// Throws std::invalid_argument naming the offending parameter.
void validate_policy(const Policy& policy, const Network& network);

enum class Transform { linear, square, exponential };
enum class WeightMode { state, queue_only };

// Sum of the last `window` pushed integers.
class SlidingSum {
 public:
  explicit SlidingSum(int window = 1);
  void push(std::int64_t value);
  std::int64_t sum() const { return sum_; }
  int window() const { return static_cast<int>(ring_.size()); }

 private:
  std::vector<std::int64_t> ring_;
  std::size_t head_ = 0;
  std::int64_t sum_ = 0;
};

enum class AttemptOutcome { no_attempt, success, collided };

struct ControllerMemory {
  ControllerMemory() = default;
  ControllerMemory(const Network& network, const PolicyParams& params);

  std::vector<SlidingSum> served;    // X_l: packets delivered over the link
  std::vector<SlidingSum> attempts;  // Y_l / e: attempts over the link
  std::vector<double> sigma;         // per-link collision estimate in [0, 1)
  std::vector<double> probability;   // per-pair, held between recomputes

  double served_window(LinkId l) const { return static_cast<double>(served[l].sum()); }
  double energy_window(LinkId l, double energy) const {
    return energy * static_cast<double>(attempts[l].sum());
  }
};

double project_unit(double x);

// proj(1/(e*delta) - X/c); zero when c == 0.
double single_link_probability(double served_window, int rate, double energy, double delta);

// proj(1/(e*delta) - X/(c*(1-sigma))); zero when c == 0.
double single_hop_probability(double served_window, int rate, double sigma, double energy,
                              double delta);

// Exponential moving average of the collision indicator over the link's own
// attempts; unchanged when the link did not attempt.
double estimate_collision(double sigma_prev, AttemptOutcome outcome, double lambda);

// state: max(dq, 0) * c_l ; queue_only: max(dq, 0).
double link_weight(const Network& network, const QueueMatrix& queues, std::span<const int> channel,
                   SessionId s, LinkId l, WeightMode mode);

// f(w_l^s) / sum of f(w_k^s') over the pairs on links k interfering with l.
// Pairs with empty queues get probability 0; with exclude_idle they are also
// left out of every denominator. Exponential evaluation is shifted by the
// largest weight in each denominator set.
std::vector<double> sbra_probabilities(const Network& network, std::span<const double> weights,
                                       const QueueMatrix& queues, Transform transform,
                                       bool exclude_idle = false);

// Per-pair probabilities for `policy` given the slot-start state.
std::vector<double> compute_probabilities(const Policy& policy, const Network& network,
                                          const QueueMatrix& queues, std::span<const int> channel,
                                          const ControllerMemory& memory);

}  // namespace sbra
