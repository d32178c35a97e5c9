#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "helpers.hpp"
#include "sbra/controllers.hpp"

using namespace sbra;

namespace {

// Star: node 0 transmits to nodes 1..n, one single-hop session per link, so
// every pair of links shares a transmitter.
Network star(int n) {
  std::vector<Link> links;
  std::vector<std::pair<int, int>> nbrs;
  std::vector<std::vector<int>> paths;
  for (int i = 0; i < n; ++i) {
    links.push_back({i, 0, i + 1});
    nbrs.emplace_back(0, i + 1);
    paths.push_back({i});
  }
  return testing::network(testing::topology(n + 1, links, nbrs), paths);
}

QueueMatrix full(const Network& net, Backlog v = 1) {
  QueueMatrix q(net);
  for (PairId p = 0; p < net.pair_count(); ++p) q.set(p, v);
  return q;
}

constexpr Transform kTransforms[] = {Transform::linear, Transform::square, Transform::exponential};

}  // namespace

TEST_CASE("projection onto [0, 1]") {
  CHECK(project_unit(0.5) == 0.5);
  CHECK(project_unit(-3.0) == 0.0);
  CHECK(project_unit(7.0) == 1.0);
  CHECK_THROWS(project_unit(std::numeric_limits<double>::quiet_NaN()));
  CHECK_THROWS(project_unit(std::numeric_limits<double>::infinity()));
}

TEST_CASE("single-link closed form") {
  CHECK(single_link_probability(0.0, 1, 1.0, 2.0) == 0.5);
  CHECK(single_link_probability(1.0, 2, 1.0, 1.0) == 0.5);
  CHECK(single_link_probability(5.0, 1, 1.0, 0.5) == 0.0);
  CHECK(single_link_probability(0.0, 0, 1.0, 0.5) == 0.0);
  CHECK(single_link_probability(0.0, 3, 1.0, 0.01) == 1.0);
  CHECK_THROWS(single_link_probability(0.0, 1, 1.0, 0.0));
}

TEST_CASE("single-hop closed form") {
  CHECK(single_hop_probability(0.3, 1, 0.5, 1.0, 2.0) == 0.0);
  CHECK_THROWS(single_hop_probability(0.0, 1, 1.0, 1.0, 1.0));
  CHECK_THROWS(single_hop_probability(0.0, 1, -0.1, 1.0, 1.0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> x(0.0, 10.0), ed(0.1, 10.0);
  for (int i = 0; i < 500; ++i) {
    const double X = x(rng), e = ed(rng);
    const int c = 1 + static_cast<int>(rng() % 5);
    CHECK(single_hop_probability(X, c, 0.0, 1.0, e) == single_link_probability(X, c, 1.0, e));
    double prev = 2.0;
    for (int k = 0; k <= 9; ++k) {
      const double p = single_hop_probability(X, c, k / 10.0, 1.0, e);
      CHECK(p <= prev);
      prev = p;
    }
  }
}

TEST_CASE("collision estimate") {
  CHECK(estimate_collision(0.0, AttemptOutcome::success, 0.1) == 0.0);
  CHECK(estimate_collision(0.0, AttemptOutcome::collided, 0.1) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(estimate_collision(0.37, AttemptOutcome::no_attempt, 0.1) == 0.37);
  double s = 0.0;
  for (int n = 1; n <= 300; ++n) {
    s = estimate_collision(s, AttemptOutcome::collided, 0.1);
    CHECK(s == doctest::Approx(1.0 - std::pow(0.9, n)).epsilon(1e-12));
    CHECK(s < 1.0);
  }
}

TEST_CASE("link weights") {
  const Network net = testing::line(3);
  QueueMatrix q(net);
  q.set(0, 5);
  q.set(1, 2);
  const std::vector<int> c{2, 2};
  CHECK(link_weight(net, q, c, 0, 0, WeightMode::state) == 6.0);
  CHECK(link_weight(net, q, c, 0, 0, WeightMode::queue_only) == 3.0);
  q.set(0, 1);
  q.set(1, 3);
  CHECK(link_weight(net, q, c, 0, 0, WeightMode::state) == 0.0);
  CHECK(link_weight(net, q, c, 0, 0, WeightMode::queue_only) == 0.0);
  q.set(0, 9);
  const std::vector<int> fade{0, 2};
  CHECK(link_weight(net, q, fade, 0, 0, WeightMode::state) == 0.0);
}

TEST_CASE("SBRA transforms on a weight-2 link with two weight-1 interferers") {
  const Network net = star(3);
  const QueueMatrix q = full(net);
  const std::vector<double> w{2.0, 1.0, 1.0};
  CHECK(sbra_probabilities(net, w, q, Transform::linear)[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(sbra_probabilities(net, w, q, Transform::square)[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  const double e = std::exp(1.0);
  const double expected = std::exp(2.0) / (std::exp(2.0) + 2.0 * e);
  CHECK(sbra_probabilities(net, w, q, Transform::exponential)[0] == doctest::Approx(expected).epsilon(1e-15));
  CHECK(expected == doctest::Approx(e / (e + 2.0)).epsilon(1e-15));
  CHECK(expected == doctest::Approx(0.5761).epsilon(1e-4));
}

TEST_CASE("equal weights in a clique split evenly") {
  for (int n = 1; n <= 6; ++n) {
    const Network net = star(n);
    const QueueMatrix q = full(net);
    const std::vector<double> w(static_cast<std::size_t>(n), 3.5);
    for (Transform t : kTransforms) {
      for (double p : sbra_probabilities(net, w, q, t)) CHECK(p == doctest::Approx(1.0 / n).epsilon(1e-14));
    }
  }
}

TEST_CASE("empty queues and zero weights give zero probability") {
  const Network net = star(3);
  const QueueMatrix empty(net);
  const std::vector<double> zero(3, 0.0);
  for (Transform t : kTransforms) {
    for (double p : sbra_probabilities(net, zero, empty, t)) CHECK(p == 0.0);
    for (double p : sbra_probabilities(net, zero, full(net), Transform::linear)) CHECK(p == 0.0);
  }
  CHECK_THROWS(sbra_probabilities(net, std::vector<double>{1.0, -1.0, 0.0}, full(net), Transform::linear));
  CHECK_THROWS(sbra_probabilities(net, std::vector<double>{1.0}, full(net), Transform::linear));
}

TEST_CASE("idle pairs in exponential denominators") {
  const Network net = star(2);
  QueueMatrix q(net);
  q.set(0, 4);
  const std::vector<double> w{1.0, 0.0};
  const double e = std::exp(1.0);
  CHECK(sbra_probabilities(net, w, q, Transform::exponential)[0] == doctest::Approx(e / (e + 1.0)).epsilon(1e-15));
  CHECK(sbra_probabilities(net, w, q, Transform::exponential)[1] == 0.0);
  CHECK(sbra_probabilities(net, w, q, Transform::exponential, true)[0] == 1.0);
  CHECK(sbra_probabilities(net, w, q, Transform::linear)[0] == 1.0);
  CHECK(sbra_probabilities(net, w, q, Transform::linear, true)[0] == 1.0);
}

TEST_CASE("SBRA invariances and monotonicity on random networks") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> weight(0.0, 6.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5);
    // Random tree of links among n+1 nodes, each link its own session.
    std::vector<Link> links;
    std::vector<std::pair<int, int>> nbrs;
    std::vector<std::vector<int>> paths;
    for (int i = 1; i <= n; ++i) {
      const int parent = static_cast<int>(rng() % i);
      nbrs.emplace_back(parent, i);
      if (rng() % 2) {
        links.push_back({i - 1, parent, i});
      } else {
        links.push_back({i - 1, i, parent});
      }
      paths.push_back({i - 1});
    }
    const Network net = testing::network(testing::topology(n + 1, links, nbrs), paths);
    QueueMatrix q(net);
    std::vector<double> w(static_cast<std::size_t>(n));
    for (PairId p = 0; p < n; ++p) {
      q.set(p, rng() % 4 == 0 ? 0 : 1 + static_cast<Backlog>(rng() % 9));
      w[p] = q[p] > 0 ? weight(rng) : 0.0;
    }
    const double scale = 0.1 + weight(rng);
    const double shift = weight(rng);
    std::vector<double> scaled(w);
    for (double& x : scaled) x *= scale;
    for (Transform t : {Transform::linear, Transform::square}) {
      const auto a = sbra_probabilities(net, w, q, t);
      const auto b = sbra_probabilities(net, scaled, q, t);
      for (PairId p = 0; p < n; ++p) CHECK(a[p] == doctest::Approx(b[p]).epsilon(1e-12));
    }
    {
      std::vector<double> plus(w);
      for (double& x : plus) x += shift;
      const auto a = sbra_probabilities(net, w, q, Transform::exponential);
      const auto b = sbra_probabilities(net, plus, q, Transform::exponential);
      for (PairId p = 0; p < n; ++p) CHECK(std::abs(a[p] - b[p]) <= 1e-12);
    }
    for (Transform t : kTransforms) {
      const auto base = sbra_probabilities(net, w, q, t);
      for (PairId p = 0; p < n; ++p) {
        CHECK((base[p] >= 0.0 && base[p] <= 1.0));
        if (q[p] == 0) CHECK(base[p] == 0.0);
      }
      const PairId target = static_cast<PairId>(rng() % n);
      if (q[target] == 0) continue;
      std::vector<double> raised(w);
      raised[target] += 1.0 + weight(rng);
      const auto up = sbra_probabilities(net, raised, q, t);
      CHECK(up[target] >= base[target] - 1e-15);
      for (PairId p = 0; p < n; ++p) {
        if (p == target) continue;
        const auto& set = net.topology().interference(net.pair(p).link);
        if (std::find(set.begin(), set.end(), net.pair(target).link) != set.end()) {
          CHECK(up[p] <= base[p] + 1e-15);
        }
      }
    }
  }
}

TEST_CASE("policy dispatch") {
  const Network net = star(2);
  QueueMatrix q(net);
  q.set(0, 3);
  const std::vector<int> c{2, 1};
  Policy pol;
  ControllerMemory mem(net, pol.params);

  pol.kind = PolicyKind::static_fixed;
  pol.params.static_weights = {0.3, 0.6};
  auto p = compute_probabilities(pol, net, q, c, mem);
  CHECK(p[0] == 0.3);
  CHECK(p[1] == 0.0);

  pol.kind = PolicyKind::propfair_static;
  pol.params.static_weights = {1.0, 3.0};
  p = compute_probabilities(pol, net, q, c, mem);
  CHECK(p[0] == doctest::Approx(0.25));

  pol.kind = PolicyKind::queue_based;
  p = compute_probabilities(pol, net, q, c, mem);
  CHECK(p[0] == 1.0);

  pol.kind = PolicyKind::single_hop_optimal;
  pol.params.delta = 1.0;
  mem.sigma[0] = 0.5;
  mem.served[0].push(1);
  // 1 - 1 / (2 * 0.5) with the collision estimate, 1 - 1/2 without it.
  p = compute_probabilities(pol, net, q, c, mem);
  CHECK(p[0] == 0.0);
  CHECK(p[1] == 0.0);

  pol.kind = PolicyKind::single_link_optimal;
  p = compute_probabilities(pol, net, q, c, mem);
  CHECK(p[0] == 0.5);
}

TEST_CASE("policy validation and names") {
  const Network net = star(2);
  Policy pol;
  pol.kind = PolicyKind::single_link_optimal;
  CHECK_THROWS(validate_policy(pol, net));
  pol.params.delta = 1.0;
  CHECK_NOTHROW(validate_policy(pol, net));
  pol.kind = PolicyKind::static_fixed;
  pol.params.static_weights = {0.5, 1.5};
  CHECK_THROWS(validate_policy(pol, net));
  pol.params.static_weights = {0.5};
  CHECK_THROWS(validate_policy(pol, net));
  for (auto k : {PolicyKind::static_fixed, PolicyKind::propfair_static, PolicyKind::queue_based,
                 PolicyKind::linear_sbra, PolicyKind::square_sbra, PolicyKind::exponential_sbra,
                 PolicyKind::single_link_optimal, PolicyKind::single_hop_optimal}) {
    CHECK(parse_policy_kind(to_string(k)) == k);
  }
  CHECK_FALSE(parse_policy_kind("cubic-sbra").has_value());
}
