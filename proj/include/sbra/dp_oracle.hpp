// Brute-force baselines used to certify the controllers: grid search over
// the one-slot objective, finite-horizon backward induction on the linear
// cost, exact policy evaluation, and exhaustive max-weight scheduling.
//
// Tiny instances are single-hop cliques: 1..3 links, one session per link,
// every pair of links mutually interfering, so an attempt succeeds iff no
// other link attempts in the same slot.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sbra/net_model.hpp"

namespace sbra::oracle {

struct Distribution {
  std::vector<int> values;
  std::vector<double> probs;
};

struct TinyInstance {
  int horizon = 1;      // H <= 8
  int buffer_cap = 4;   // B <= 8; backlogs are truncated at B
  double grid_step = 0.25;
  int links = 1;
  Distribution channel{{1}, {1.0}};
  Distribution arrivals{{0}, {1.0}};
  std::vector<double> alpha{1.0};  // per link: reward per served packet
  std::vector<double> beta{0.0};   // per link: cost per queued packet
  double delta = 1.0;
  double energy = 1.0;
  std::vector<int> initial_backlog{0};
};

// Throws std::invalid_argument / std::length_error when the instance is
// malformed or exceeds the size bounds.
void validate(const TinyInstance& instance);

// Probability grid {0, g, 2g, ..., 1}.
std::vector<double> probability_grid(double step);

// argmax over the grid of log(p c (1 - sigma) + X) - delta e p.
double grid_argmax_myopic(int rate, double served_window, double sigma, double energy,
                          double delta, double step);

struct DecisionContext {
  int slot = 0;
  std::span<const int> backlog;
  std::span<const int> channel;
  std::span<const int> served_window;  // per link, over the policy's window
};

struct TinyPolicy {
  std::function<std::vector<double>(const DecisionContext&)> decide;
  int window = 0;  // slots of served history the policy reads
};

class DpSolution {
 public:
  double value = 0.0;

  // Optimal per-link probabilities at (slot, backlog, channel).
  std::vector<double> action(int slot, std::span<const int> backlog, std::span<const int> channel) const;
  // The returned policy refers to this solution, which must outlive it.
  TinyPolicy as_policy() const;

 private:
  friend DpSolution dp_optimal_cost(const TinyInstance&);
  TinyInstance instance_;
  std::vector<int> channel_index_;  // value -> index in the channel support
  std::vector<std::vector<double>> table_;
  std::size_t state_count_ = 0;
  std::size_t channel_combos_ = 0;
};

// Minimal expected total cost sum_t [sum_l (-alpha x_l + beta q_l) + delta e attempts].
DpSolution dp_optimal_cost(const TinyInstance& instance);

// Exact expected cost of `policy` by propagating the full state distribution.
double exact_policy_cost(const TinyInstance& instance, const TinyPolicy& policy);

// Single-link closed form applied per link, X summed over the
// last `window` slots.
TinyPolicy myopic_policy(const TinyInstance& instance, int window);
TinyPolicy static_policy(int links, double probability);

struct Schedule {
  std::vector<PairId> activations;
  double value = 0.0;
};

// True when no two links in `links` share a transmitter or destroy each
// other's reception.
bool conflict_free(std::span<const LinkId> links, const Topology& topology);

// Exhaustive max-weight activation over conflict-free link subsets (<= 14
// links), using each link's heaviest pair.
Schedule maxweight_schedule(std::span<const double> weights, const Network& network);

}  // namespace sbra::oracle
