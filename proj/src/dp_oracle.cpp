#include "sbra/dp_oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include <fmt/core.h>

#include "sbra/controllers.hpp"
#include "sbra/engine.hpp"

namespace sbra::oracle {

namespace {

constexpr std::size_t kMaxStates = 1'000'000;
constexpr double kMaxWork = 2e9;

void validate_distribution(const Distribution& d, const char* name) {
  if (d.values.empty() || d.values.size() != d.probs.size()) {
    throw std::invalid_argument(fmt::format("{} distribution needs matching non-empty support", name));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    if (d.values[i] < 0) throw std::invalid_argument(fmt::format("{} support must be >= 0", name));
    if (!(d.probs[i] >= 0.0)) throw std::invalid_argument(fmt::format("{} probabilities must be >= 0", name));
    sum += d.probs[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument(fmt::format("{} distribution sums to {}, not 1", name, sum));
  }
  std::vector<int> sorted = d.values;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument(fmt::format("{} support has duplicate values", name));
  }
}

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

// Mixed-radix digits of `index` in base `radix`, `n` digits, least
// significant first.
void decode(std::size_t index, std::size_t radix, int n, std::vector<int>& out) {
  out.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out[i] = static_cast<int>(index % radix);
    index /= radix;
  }
}

std::size_t encode(std::span<const int> digits, std::size_t radix) {
  std::size_t index = 0;
  for (std::size_t i = digits.size(); i-- > 0;) index = index * radix + static_cast<std::size_t>(digits[i]);
  return index;
}

// One slot of the clique dynamics for a fixed channel realization and
// action: calls visit(prob, stage_cost, served) per attempt pattern.
template <typename Visit>
void for_each_pattern(const TinyInstance& inst, std::span<const int> backlog,
                      std::span<const int> channel, std::span<const double> p, Visit&& visit) {
  const int n = inst.links;
  std::vector<int> served(static_cast<std::size_t>(n));
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    double prob = 1.0;
    for (int l = 0; l < n; ++l) prob *= (mask >> l & 1u) ? p[l] : 1.0 - p[l];
    if (prob == 0.0) continue;
    const int attempts = std::popcount(mask);
    double cost = inst.delta * inst.energy * attempts;
    for (int l = 0; l < n; ++l) {
      served[l] = (attempts == 1 && (mask >> l & 1u)) ? std::min(backlog[l], channel[l]) : 0;
      cost += -inst.alpha[l] * served[l] + inst.beta[l] * backlog[l];
    }
    visit(prob, cost, std::span<const int>(served));
  }
}

// Calls visit(prob, next_backlog) over joint arrivals.
template <typename Visit>
void for_each_arrival(const TinyInstance& inst, std::span<const int> backlog,
                      std::span<const int> served, Visit&& visit) {
  const int n = inst.links;
  const std::size_t support = inst.arrivals.values.size();
  const std::size_t combos = ipow(support, n);
  std::vector<int> digits;
  std::vector<int> next(static_cast<std::size_t>(n));
  for (std::size_t a = 0; a < combos; ++a) {
    decode(a, support, n, digits);
    double prob = 1.0;
    for (int l = 0; l < n; ++l) {
      prob *= inst.arrivals.probs[digits[l]];
      next[l] = std::min(backlog[l] - served[l] + inst.arrivals.values[digits[l]], inst.buffer_cap);
    }
    if (prob == 0.0) continue;
    visit(prob, std::span<const int>(next));
  }
}

}  // namespace

void validate(const TinyInstance& inst) {
  if (inst.horizon < 0 || inst.horizon > 8) {
    throw std::length_error(fmt::format("horizon {} outside [0, 8]", inst.horizon));
  }
  if (inst.buffer_cap < 0 || inst.buffer_cap > 8) {
    throw std::length_error(fmt::format("buffer cap {} outside [0, 8]", inst.buffer_cap));
  }
  if (inst.links < 1 || inst.links > 3) {
    throw std::length_error(fmt::format("tiny instances support 1..3 links, got {}", inst.links));
  }
  if (!(inst.grid_step > 0.0 && inst.grid_step <= 1.0)) {
    throw std::invalid_argument(fmt::format("grid step must be in (0, 1], got {}", inst.grid_step));
  }
  validate_distribution(inst.channel, "channel");
  validate_distribution(inst.arrivals, "arrival");
  const auto n = static_cast<std::size_t>(inst.links);
  if (inst.alpha.size() != n || inst.beta.size() != n || inst.initial_backlog.size() != n) {
    throw std::invalid_argument("alpha, beta and initial_backlog need one entry per link");
  }
  for (int q : inst.initial_backlog) {
    if (q < 0 || q > inst.buffer_cap) throw std::invalid_argument("initial backlog outside [0, B]");
  }
  if (!(inst.energy > 0.0) || !(inst.delta >= 0.0)) {
    throw std::invalid_argument("energy must be > 0 and delta >= 0");
  }
  const std::size_t states = ipow(static_cast<std::size_t>(inst.buffer_cap) + 1, inst.links);
  if (states > kMaxStates) throw std::length_error(fmt::format("{} states exceed the bound", states));
  const double work = static_cast<double>(inst.horizon) * static_cast<double>(states) *
                      std::pow(static_cast<double>(inst.channel.values.size()), inst.links) *
                      std::pow(std::floor(1.0 / inst.grid_step + 1e-9) + 2.0, inst.links) *
                      std::pow(2.0 * static_cast<double>(inst.arrivals.values.size()), inst.links);
  if (work > kMaxWork) throw std::length_error("instance exceeds the enumeration budget");
}

std::vector<double> probability_grid(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw std::invalid_argument("grid step must be in (0, 1]");
  const auto count = static_cast<long>(std::floor(1.0 / step + 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(count) + 2);
  for (long i = 0; i <= count; ++i) grid.push_back(std::min(static_cast<double>(i) * step, 1.0));
  if (grid.back() < 1.0) grid.push_back(1.0);
  return grid;
}

double grid_argmax_myopic(int rate, double served_window, double sigma, double energy,
                          double delta, double step) {
  if (rate < 1) throw std::invalid_argument("grid search needs c >= 1");
  if (!(served_window >= 0.0)) throw std::invalid_argument("X must be >= 0");
  if (!(sigma >= 0.0 && sigma < 1.0)) throw std::invalid_argument("sigma must be in [0, 1)");
  const double effective = rate * (1.0 - sigma);
  double best = -std::numeric_limits<double>::infinity();
  double best_p = 0.0;
  for (double p : probability_grid(step)) {
    const double inner = p * effective + served_window;
    const double value = inner > 0.0 ? std::log(inner) - delta * energy * p
                                     : -std::numeric_limits<double>::infinity();
    if (value > best) {
      best = value;
      best_p = p;
    }
  }
  return best_p;
}

DpSolution dp_optimal_cost(const TinyInstance& inst) {
  validate(inst);
  const int n = inst.links;
  const std::size_t radix = static_cast<std::size_t>(inst.buffer_cap) + 1;
  const std::size_t states = ipow(radix, n);
  const std::size_t csupport = inst.channel.values.size();
  const std::size_t combos = ipow(csupport, n);
  const std::vector<double> grid = probability_grid(inst.grid_step);

  DpSolution sol;
  sol.instance_ = inst;
  sol.state_count_ = states;
  sol.channel_combos_ = combos;
  const int max_value = *std::max_element(inst.channel.values.begin(), inst.channel.values.end());
  sol.channel_index_.assign(static_cast<std::size_t>(max_value) + 1, -1);
  for (std::size_t i = 0; i < csupport; ++i) sol.channel_index_[inst.channel.values[i]] = static_cast<int>(i);
  sol.table_.assign(static_cast<std::size_t>(inst.horizon),
                    std::vector<double>(states * combos * static_cast<std::size_t>(n), 0.0));

  std::vector<double> next_value(states, 0.0);
  std::vector<double> value(states, 0.0);
  std::vector<int> q, cdigits, c(static_cast<std::size_t>(n)), choice;
  std::vector<double> p(static_cast<std::size_t>(n));

  for (int t = inst.horizon - 1; t >= 0; --t) {
    for (std::size_t s = 0; s < states; ++s) {
      decode(s, radix, n, q);
      double expected = 0.0;
      for (std::size_t cc = 0; cc < combos; ++cc) {
        decode(cc, csupport, n, cdigits);
        double cprob = 1.0;
        for (int l = 0; l < n; ++l) {
          c[l] = inst.channel.values[cdigits[l]];
          cprob *= inst.channel.probs[cdigits[l]];
        }
        // Enumerate grid actions; links with empty queues only take p = 0.
        std::vector<std::size_t> sizes(static_cast<std::size_t>(n));
        std::size_t actions = 1;
        for (int l = 0; l < n; ++l) {
          sizes[l] = q[l] > 0 ? grid.size() : 1;
          actions *= sizes[l];
        }
        double best = std::numeric_limits<double>::infinity();
        std::vector<double> best_p(static_cast<std::size_t>(n), 0.0);
        for (std::size_t a = 0; a < actions; ++a) {
          std::size_t rest = a;
          for (int l = 0; l < n; ++l) {
            p[l] = grid[rest % sizes[l]];
            rest /= sizes[l];
          }
          double cost = 0.0;
          for_each_pattern(inst, q, c, p, [&](double prob, double stage, std::span<const int> served) {
            double future = 0.0;
            for_each_arrival(inst, q, served, [&](double aprob, std::span<const int> next) {
              future += aprob * next_value[encode(next, radix)];
            });
            cost += prob * (stage + future);
          });
          if (cost < best) {
            best = cost;
            best_p = p;
          }
        }
        expected += cprob * best;
        std::copy(best_p.begin(), best_p.end(),
                  sol.table_[t].begin() + static_cast<std::ptrdiff_t>((s * combos + cc) * n));
      }
      value[s] = expected;
    }
    std::swap(value, next_value);
  }
  sol.value = inst.horizon == 0 ? 0.0 : next_value[encode(inst.initial_backlog, radix)];
  return sol;
}

std::vector<double> DpSolution::action(int slot, std::span<const int> backlog,
                                       std::span<const int> channel) const {
  const int n = instance_.links;
  if (slot < 0 || slot >= instance_.horizon) throw std::out_of_range("slot outside the horizon");
  std::vector<int> cdigits(static_cast<std::size_t>(n));
  for (int l = 0; l < n; ++l) {
    const int v = channel[l];
    if (v < 0 || v >= static_cast<int>(channel_index_.size()) || channel_index_[v] < 0) {
      throw std::out_of_range(fmt::format("channel value {} outside the support", v));
    }
    cdigits[l] = channel_index_[v];
  }
  const std::size_t s = encode(backlog, static_cast<std::size_t>(instance_.buffer_cap) + 1);
  const std::size_t cc = encode(cdigits, instance_.channel.values.size());
  const auto begin = table_[slot].begin() + static_cast<std::ptrdiff_t>((s * channel_combos_ + cc) * n);
  return {begin, begin + n};
}

TinyPolicy DpSolution::as_policy() const {
  return {[this](const DecisionContext& ctx) { return action(ctx.slot, ctx.backlog, ctx.channel); }, 0};
}

double exact_policy_cost(const TinyInstance& inst, const TinyPolicy& policy) {
  validate(inst);
  if (!policy.decide) throw std::invalid_argument("policy has no decision rule");
  if (policy.window < 0) throw std::invalid_argument("policy window must be >= 0");
  const int n = inst.links;
  const auto un = static_cast<std::size_t>(n);
  // Key layout: backlog, then either per-link window sums (window covers
  // the whole horizon) or the last `window` served vectors, oldest first.
  const bool sums_only = policy.window >= inst.horizon;
  const std::size_t history = policy.window == 0 ? 0 : (sums_only ? un : un * policy.window);

  std::map<std::vector<int>, double> dist;
  {
    std::vector<int> key(inst.initial_backlog);
    key.resize(un + history, 0);
    dist[key] = 1.0;
  }
  const std::size_t csupport = inst.channel.values.size();
  const std::size_t combos = ipow(csupport, n);
  std::vector<int> cdigits, c(un), window_sum(un);
  double total = 0.0;

  for (int t = 0; t < inst.horizon; ++t) {
    std::map<std::vector<int>, double> next_dist;
    for (const auto& [key, mass] : dist) {
      const std::span<const int> q(key.data(), un);
      for (int l = 0; l < n; ++l) {
        window_sum[l] = 0;
        if (sums_only) {
          if (history) window_sum[l] = key[un + l];
        } else {
          for (int w = 0; w < policy.window; ++w) window_sum[l] += key[un + w * un + l];
        }
      }
      for (std::size_t cc = 0; cc < combos; ++cc) {
        decode(cc, csupport, n, cdigits);
        double cprob = 1.0;
        for (int l = 0; l < n; ++l) {
          c[l] = inst.channel.values[cdigits[l]];
          cprob *= inst.channel.probs[cdigits[l]];
        }
        if (cprob == 0.0) continue;
        std::vector<double> p = policy.decide({t, q, c, window_sum});
        if (p.size() != un) throw std::invalid_argument("policy returned the wrong number of links");
        for (int l = 0; l < n; ++l) {
          if (!(p[l] >= 0.0 && p[l] <= 1.0)) {
            throw std::invalid_argument(fmt::format("policy probability {} outside [0, 1]", p[l]));
          }
          if (q[l] == 0) p[l] = 0.0;
        }
        for_each_pattern(inst, q, c, p, [&](double prob, double stage, std::span<const int> served) {
          const double branch = mass * cprob * prob;
          total += branch * stage;
          for_each_arrival(inst, q, served, [&](double aprob, std::span<const int> next) {
            std::vector<int> nkey(next.begin(), next.end());
            nkey.resize(un + history, 0);
            if (sums_only && history) {
              for (int l = 0; l < n; ++l) nkey[un + l] = key[un + l] + served[l];
            } else if (history) {
              // Drop the oldest vector, append this slot's.
              for (std::size_t i = 0; i + un < history; ++i) nkey[un + i] = key[un + un + i];
              for (int l = 0; l < n; ++l) nkey[un + history - un + l] = served[l];
            }
            next_dist[std::move(nkey)] += branch * aprob;
          });
        });
      }
    }
    dist = std::move(next_dist);
  }
  return total;
}

TinyPolicy myopic_policy(const TinyInstance& instance, int window) {
  const double energy = instance.energy;
  const double delta = instance.delta;
  return {[energy, delta](const DecisionContext& ctx) {
            std::vector<double> p(ctx.backlog.size(), 0.0);
            for (std::size_t l = 0; l < p.size(); ++l) {
              if (ctx.backlog[l] > 0) {
                p[l] = single_link_probability(ctx.served_window[l], ctx.channel[l], energy, delta);
              }
            }
            return p;
          },
          window};
}

TinyPolicy static_policy(int links, double probability) {
  return {[links, probability](const DecisionContext&) {
            return std::vector<double>(static_cast<std::size_t>(links), probability);
          },
          0};
}

bool conflict_free(std::span<const LinkId> links, const Topology& topology) {
  std::vector<Attempt> attempts;
  for (LinkId l : links) {
    const Link& ln = topology.link(l);
    for (const Attempt& a : attempts) {
      if (a.node == ln.tx) return false;
    }
    attempts.push_back({ln.tx, l, 0, 0, false, 0});
  }
  const auto collided = resolve_collisions(attempts, topology);
  return std::none_of(collided.begin(), collided.end(), [](bool b) { return b; });
}

Schedule maxweight_schedule(std::span<const double> weights, const Network& network) {
  const Topology& topo = network.topology();
  if (topo.link_count() > 14) {
    throw std::length_error(fmt::format("exhaustive max-weight supports <= 14 links, got {}", topo.link_count()));
  }
  if (static_cast<int>(weights.size()) != network.pair_count()) {
    throw std::invalid_argument("one weight per (link, session) pair is required");
  }
  std::vector<LinkId> cand;
  std::vector<PairId> best_pair;
  std::vector<double> best_weight;
  for (LinkId l = 0; l < topo.link_count(); ++l) {
    double w = 0.0;
    PairId chosen = -1;
    for (PairId p : network.link_pairs(l)) {
      if (weights[p] < 0.0) throw std::invalid_argument("weights must be >= 0");
      if (weights[p] > w) {
        w = weights[p];
        chosen = p;
      }
    }
    if (chosen >= 0) {
      cand.push_back(l);
      best_pair.push_back(chosen);
      best_weight.push_back(w);
    }
  }
  const std::size_t m = cand.size();
  std::vector<std::uint32_t> conflicts(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const LinkId two[2] = {cand[i], cand[j]};
      if (!conflict_free(two, topo)) {
        conflicts[i] |= 1u << j;
        conflicts[j] |= 1u << i;
      }
    }
  }
  Schedule best;
  std::uint32_t best_mask = 0;
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    bool ok = true;
    double value = 0.0;
    for (std::size_t i = 0; i < m && ok; ++i) {
      if (!(mask >> i & 1u)) continue;
      if (conflicts[i] & mask) ok = false;
      value += best_weight[i];
    }
    if (ok && value > best.value) {
      best.value = value;
      best_mask = mask;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (best_mask >> i & 1u) best.activations.push_back(best_pair[i]);
  }
  std::sort(best.activations.begin(), best.activations.end());
  return best;
}

}  // namespace sbra::oracle
