#include "sbra/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include <fmt/core.h>

#include "sbra/controllers.hpp"

namespace sbra {

namespace {

std::string num(double v) { return fmt::format("{:.10g}", v); }
std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

struct Job {
  const PolicyEntry* entry;
  double rate;
  std::uint64_t seed;
};

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
  bool present = false;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  m.present = true;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

}  // namespace

std::vector<SweepRow> cmd_sweep(const ScenarioConfig& config, const SweepOptions& options) {
  validate_scenario(config);
  const Network network = build_network(config);

  std::vector<const PolicyEntry*> selected;
  if (options.policies.empty()) {
    for (const PolicyEntry& e : config.policies) selected.push_back(&e);
  } else {
    for (const std::string& label : options.policies) selected.push_back(&find_policy(config, label));
    std::sort(selected.begin(), selected.end(),
              [](const PolicyEntry* a, const PolicyEntry* b) { return a->label < b->label; });
    selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
  }
  std::vector<double> rates = config.rates;
  std::sort(rates.begin(), rates.end());
  std::vector<std::uint64_t> seeds = config.seeds;
  std::sort(seeds.begin(), seeds.end());

  std::vector<Job> jobs;
  for (const PolicyEntry* e : selected) {
    for (double r : rates) {
      for (std::uint64_t s : seeds) jobs.push_back({e, r, s});
    }
  }
  // Build every run config up front so errors surface before any work.
  std::vector<RunConfig> configs;
  configs.reserve(jobs.size());
  for (const Job& j : jobs) configs.push_back(make_run_config(config, *j.entry, j.rate, j.seed, network));

  std::vector<SweepRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        rows[i] = {jobs[i].entry->label, jobs[i].rate, jobs[i].seed, run(network, configs[i]).report};
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(jobs.size(), 1)));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);
  return rows;
}

void write_sweep_csv(std::ostream& out, const ScenarioConfig& config, std::span<const SweepRow> rows) {
  for (const auto& [key, value] : config.echo) out << "# " << key << " = " << value << '\n';
  out << "# effective.slots = " << config.slots << '\n';
  out << "# effective.warmup = " << config.effective_warmup() << '\n';
  out << "policy,rate,seed,slots,mean_delay_slots,mean_delay_sec,throughput,energy_per_slot,"
         "collision_rate,stable,summary\n";

  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    while (j < rows.size() && rows[j].policy == rows[i].policy && rows[j].rate == rows[i].rate) ++j;
    std::vector<double> delay, delay_sec, thr, energy, coll;
    int stable = 0;
    for (std::size_t k = i; k < j; ++k) {
      const MetricsReport& r = rows[k].report;
      out << rows[k].policy << ',' << fmt::format("{}", rows[k].rate) << ',' << rows[k].seed << ','
          << config.slots << ',' << opt_num(r.delay_slots) << ',' << opt_num(r.delay_seconds) << ','
          << num(r.throughput) << ',' << num(r.energy_per_slot) << ',' << opt_num(r.collision_rate)
          << ',' << to_string(r.stability) << ",seed\n";
      if (r.delay_slots) delay.push_back(*r.delay_slots);
      if (r.delay_seconds) delay_sec.push_back(*r.delay_seconds);
      thr.push_back(r.throughput);
      energy.push_back(r.energy_per_slot);
      if (r.collision_rate) coll.push_back(*r.collision_rate);
      stable += r.stability == Stability::stable ? 1 : 0;
    }
    const Moments md = moments(delay), ms = moments(delay_sec), mt = moments(thr),
                  me = moments(energy), mc = moments(coll);
    const double stable_fraction = static_cast<double>(stable) / static_cast<double>(j - i);
    auto cell = [](const Moments& m, bool sd) { return m.present ? num(sd ? m.stddev : m.mean) : std::string(); };
    for (bool sd : {false, true}) {
      out << rows[i].policy << ',' << fmt::format("{}", rows[i].rate) << ",," << config.slots << ','
          << cell(md, sd) << ',' << cell(ms, sd) << ',' << cell(mt, sd) << ',' << cell(me, sd) << ','
          << cell(mc, sd) << ',' << (sd ? std::string() : num(stable_fraction)) << ','
          << (sd ? "stddev" : "mean") << '\n';
    }
    i = j;
  }
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows) {
  out << "slot,link,session,q,c,p,attempted,collided,served\n";
  for (const TraceRow& r : rows) {
    out << r.slot << ',' << r.link << ',' << r.session << ',' << r.backlog << ',' << r.rate << ','
        << num(r.probability) << ',' << (r.attempted ? 1 : 0) << ',' << (r.collided ? 1 : 0) << ','
        << r.served << '\n';
  }
}

std::optional<double> mean_of(std::span<const SweepRow> rows, std::string_view policy, double rate,
                              const std::function<std::optional<double>(const MetricsReport&)>& metric) {
  double sum = 0.0;
  int n = 0;
  for (const SweepRow& r : rows) {
    if (r.policy != policy || r.rate != rate) continue;
    if (auto v = metric(r.report)) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

oracle::TinyInstance random_tiny_instance(RngStream& rng) {
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(hi - lo + 1)); };
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  auto distribution = [&](std::vector<int> support) {
    oracle::Distribution d;
    d.values = std::move(support);
    double total = 0.0;
    for (std::size_t i = 0; i < d.values.size(); ++i) {
      d.probs.push_back(0.05 + rng.uniform());
      total += d.probs.back();
    }
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < d.probs.size(); ++i) {
      d.probs[i] /= total;
      acc += d.probs[i];
    }
    d.probs.back() = 1.0 - acc;
    return d;
  };
  oracle::TinyInstance inst;
  inst.links = pick(1, 2);
  inst.horizon = pick(1, 5);
  inst.buffer_cap = pick(1, inst.links == 1 ? 5 : 4);
  inst.grid_step = inst.links == 1 ? 0.1 : 0.25;
  inst.channel = distribution({0, 1, 2});
  inst.arrivals = distribution({0, 1, 2});
  inst.alpha.clear();
  inst.beta.clear();
  inst.initial_backlog.clear();
  for (int l = 0; l < inst.links; ++l) {
    inst.alpha.push_back(uniform(0.0, 2.0));
    inst.beta.push_back(uniform(0.0, 1.0));
    inst.initial_backlog.push_back(pick(0, inst.buffer_cap));
  }
  inst.delta = uniform(0.05, 2.0);
  inst.energy = 1.0;
  return inst;
}

namespace {

struct RandomMaxWeightCase {
  Network network;
  std::vector<double> weights;
};

RandomMaxWeightCase random_maxweight_case(RngStream& rng) {
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(hi - lo + 1)); };
  TopologySpec spec;
  spec.node_count = pick(3, 8);
  for (int n = 0; n < spec.node_count; ++n) spec.positions.push_back({3.0 * rng.uniform(), 3.0 * rng.uniform()});
  spec.radius = 1.3;
  Topology probe = build_topology(spec);
  std::vector<std::pair<NodeId, NodeId>> candidates;
  for (NodeId a = 0; a < spec.node_count; ++a) {
    for (NodeId b : probe.neighbors(a)) candidates.emplace_back(a, b);
  }
  const int want = std::min<int>(pick(1, 6), static_cast<int>(candidates.size()));
  for (int i = 0; i < want; ++i) {
    const std::size_t k = i + rng.next_u64() % (candidates.size() - i);
    std::swap(candidates[i], candidates[k]);
    spec.links.push_back({i, candidates[i].first, candidates[i].second});
  }
  Topology topo = build_topology(spec);
  std::vector<Session> sessions;
  for (const Link& ln : topo.links()) {
    const int copies = pick(1, 2);
    for (int c = 0; c < copies; ++c) {
      sessions.push_back({static_cast<SessionId>(sessions.size()), ln.tx, ln.rx, {ln.id}});
    }
  }
  Network network(std::move(topo), std::move(sessions));
  std::vector<double> weights;
  for (int p = 0; p < network.pair_count(); ++p) weights.push_back(static_cast<double>(pick(0, 6)));
  return {std::move(network), std::move(weights)};
}

// Independent enumeration over every subset of pairs.
double brute_force_maxweight(const Network& network, std::span<const double> weights) {
  const Topology& topo = network.topology();
  const int n = network.pair_count();
  double best = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    bool ok = true;
    double value = 0.0;
    for (int a = 0; a < n && ok; ++a) {
      if (!(mask >> a & 1u)) continue;
      value += weights[a];
      const Link& la = topo.link(network.pair(a).link);
      for (int b = 0; b < n && ok; ++b) {
        if (b == a || !(mask >> b & 1u)) continue;
        const Link& lb = topo.link(network.pair(b).link);
        if (la.tx == lb.tx || lb.tx == la.rx || topo.are_neighbors(la.rx, lb.tx)) ok = false;
      }
    }
    if (ok) best = std::max(best, value);
  }
  return best;
}

}  // namespace

OracleCheckReport cmd_oracle_check(const OracleCheckOptions& options) {
  OracleCheckReport report;
  if (options.count < 0 || options.dp_instances < 0 || options.maxweight_instances < 0) {
    throw std::invalid_argument("oracle-check counts must be >= 0");
  }
  if (!(options.step > 0.0 && options.step <= 1e-3)) {
    throw std::invalid_argument("oracle-check grid step must be in (0, 1e-3]");
  }
  if (options.count == 0 && options.dp_instances == 0 && options.maxweight_instances == 0) {
    report.lines.push_back("warning: zero tuples requested; nothing checked (vacuous pass)");
    return report;
  }

  // Closed form vs grid argmax of the one-slot objective.
  {
    RngStream rng(options.seed, StreamKind::oracle, 1);
    int failures = 0;
    for (int i = 0; i < options.count; ++i) {
      const int c = 1 + static_cast<int>(rng.next_u64() % 5);
      const double x = 10.0 * rng.uniform();
      const double sigma = 0.9 * rng.uniform();
      const double edelta = 0.1 + 9.9 * rng.uniform();
      const double grid = oracle::grid_argmax_myopic(c, x, sigma, 1.0, edelta, options.step);
      const double closed = options.closed_form(x, c, sigma, 1.0, edelta);
      if (!(std::abs(grid - closed) <= 2.0 * options.step)) {
        ++failures;
        if (failures <= 10) {
          report.lines.push_back(fmt::format(
              "FAIL closed-form tuple c={} X={:.17g} sigma={:.17g} e*delta={:.17g}: grid={} closed={}", c, x,
              sigma, edelta, grid, closed));
        }
      }
    }
    report.passed &= failures == 0;
    report.lines.push_back(fmt::format("{} closed-form agreement: {} tuples, {} failures",
                                       failures ? "FAIL" : "PASS", options.count, failures));
  }

  // DP dominance.
  {
    RngStream rng(options.seed, StreamKind::oracle, 2);
    int failures = 0;
    for (int i = 0; i < options.dp_instances; ++i) {
      const oracle::TinyInstance inst = random_tiny_instance(rng);
      const oracle::DpSolution dp = oracle::dp_optimal_cost(inst);
      const double static_p = rng.uniform();
      const std::pair<const char*, oracle::TinyPolicy> policies[] = {
          {"myopic", oracle::myopic_policy(inst, 10)},
          {"static", oracle::static_policy(inst.links, static_p)},
          {"always-transmit", oracle::static_policy(inst.links, 1.0)},
      };
      for (const auto& [name, policy] : policies) {
        const double cost = oracle::exact_policy_cost(inst, policy);
        if (cost < dp.value - 1e-9) {
          ++failures;
          report.lines.push_back(fmt::format("FAIL dp dominance instance {} policy {}: cost {:.17g} < dp {:.17g}",
                                             i, name, cost, dp.value));
        }
      }
      const double self = oracle::exact_policy_cost(inst, dp.as_policy());
      if (std::abs(self - dp.value) > 1e-9) {
        ++failures;
        report.lines.push_back(fmt::format("FAIL dp consistency instance {}: policy cost {:.17g} vs dp {:.17g}",
                                           i, self, dp.value));
      }
    }
    report.passed &= failures == 0;
    report.lines.push_back(fmt::format("{} dp dominance: {} instances, {} violations",
                                       failures ? "FAIL" : "PASS", options.dp_instances, failures));
  }

  // Max-weight exhaustive search vs independent subset enumeration.
  {
    RngStream rng(options.seed, StreamKind::oracle, 3);
    int failures = 0;
    for (int i = 0; i < options.maxweight_instances; ++i) {
      const RandomMaxWeightCase mw = random_maxweight_case(rng);
      const oracle::Schedule sched = oracle::maxweight_schedule(mw.weights, mw.network);
      std::vector<LinkId> links;
      double value = 0.0;
      for (PairId p : sched.activations) {
        links.push_back(mw.network.pair(p).link);
        value += mw.weights[p];
      }
      const double expected = brute_force_maxweight(mw.network, mw.weights);
      if (!oracle::conflict_free(links, mw.network.topology()) || value != sched.value ||
          sched.value != expected) {
        ++failures;
        report.lines.push_back(fmt::format("FAIL max-weight instance {}: value {} vs exhaustive {}", i,
                                           sched.value, expected));
      }
    }
    report.passed &= failures == 0;
    report.lines.push_back(fmt::format("{} max-weight exhaustive: {} instances, {} failures",
                                       failures ? "FAIL" : "PASS", options.maxweight_instances, failures));
  }
  return report;
}

}  // namespace sbra
