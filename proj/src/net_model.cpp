#include "sbra/net_model.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

#include <fmt/core.h>

namespace sbra {

namespace {

void check_node(int node_count, NodeId n, const char* what) {
  if (n < 0 || n >= node_count) {
    throw std::invalid_argument(fmt::format("{} node {} out of range [0, {})", what, n, node_count));
  }
}

std::vector<std::vector<NodeId>> neighbors_from_spec(const TopologySpec& spec) {
  std::vector<std::set<NodeId>> sets(static_cast<std::size_t>(spec.node_count));
  if (spec.radius) {
    if (static_cast<int>(spec.positions.size()) != spec.node_count) {
      throw std::invalid_argument(fmt::format("expected {} positions, got {}", spec.node_count,
                                              spec.positions.size()));
    }
    if (*spec.radius < 0.0) throw std::invalid_argument("neighbor radius must be nonnegative");
    const double r2 = *spec.radius * *spec.radius;
    for (int a = 0; a < spec.node_count; ++a) {
      for (int b = a + 1; b < spec.node_count; ++b) {
        const double dx = spec.positions[a].x - spec.positions[b].x;
        const double dy = spec.positions[a].y - spec.positions[b].y;
        if (dx * dx + dy * dy <= r2 + 1e-12) {
          sets[a].insert(b);
          sets[b].insert(a);
        }
      }
    }
  } else {
    // Explicit lists are directed entries that must come in symmetric pairs.
    std::set<std::pair<NodeId, NodeId>> directed;
    for (auto [a, b] : spec.neighbor_pairs) {
      check_node(spec.node_count, a, "neighbor");
      check_node(spec.node_count, b, "neighbor");
      if (a == b) throw std::invalid_argument(fmt::format("node {} listed as its own neighbor", a));
      directed.emplace(a, b);
    }
    for (auto [a, b] : directed) {
      if (!directed.contains({b, a})) {
        throw std::invalid_argument(
            fmt::format("asymmetric neighbor list: {} -> {} without {} -> {}", a, b, b, a));
      }
      sets[a].insert(b);
    }
  }
  std::vector<std::vector<NodeId>> out;
  out.reserve(sets.size());
  for (auto& s : sets) out.emplace_back(s.begin(), s.end());
  return out;
}

}  // namespace

Topology::Topology(int node_count, std::vector<Link> links,
                   std::vector<std::vector<NodeId>> neighbors)
    : node_count_(node_count), links_(std::move(links)), neighbors_(std::move(neighbors)) {
  if (node_count_ <= 0) throw std::invalid_argument("node_count must be positive");
  if (static_cast<int>(neighbors_.size()) != node_count_) {
    throw std::invalid_argument("neighbor table size does not match node_count");
  }
  for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
  for (NodeId a = 0; a < node_count_; ++a) {
    for (NodeId b : neighbors_[a]) {
      check_node(node_count_, b, "neighbor");
      if (b == a) throw std::invalid_argument(fmt::format("node {} listed as its own neighbor", a));
      if (!std::binary_search(neighbors_[b].begin(), neighbors_[b].end(), a)) {
        throw std::invalid_argument(
            fmt::format("asymmetric neighbor list: {} -> {} without {} -> {}", a, b, b, a));
      }
    }
  }
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const Link& ln = links_[i];
    if (ln.id != static_cast<LinkId>(i)) {
      throw std::invalid_argument(fmt::format("link ids must be 0..L-1 in order, got {} at {}", ln.id, i));
    }
    check_node(node_count_, ln.tx, "link tx");
    check_node(node_count_, ln.rx, "link rx");
    if (ln.tx == ln.rx) throw std::invalid_argument(fmt::format("link {} is a self-loop", ln.id));
    if (!are_neighbors(ln.tx, ln.rx)) {
      throw std::invalid_argument(
          fmt::format("link {} joins non-neighbors {} and {}", ln.id, ln.tx, ln.rx));
    }
  }
  outgoing_.resize(static_cast<std::size_t>(node_count_));
  for (const Link& ln : links_) outgoing_[ln.tx].push_back(ln.id);
  interference_.reserve(links_.size());
  for (const Link& ln : links_) interference_.push_back(interference_set(*this, ln.id));
}

const Link& Topology::link(LinkId l) const {
  if (l < 0 || l >= link_count()) throw std::out_of_range(fmt::format("unknown link id {}", l));
  return links_[l];
}

std::span<const NodeId> Topology::neighbors(NodeId n) const {
  return neighbors_.at(static_cast<std::size_t>(n));
}

bool Topology::are_neighbors(NodeId a, NodeId b) const {
  const auto& nb = neighbors_.at(static_cast<std::size_t>(a));
  return std::binary_search(nb.begin(), nb.end(), b);
}

std::span<const LinkId> Topology::interference(LinkId l) const {
  return interference_.at(static_cast<std::size_t>(l));
}

std::span<const LinkId> Topology::outgoing(NodeId n) const {
  return outgoing_.at(static_cast<std::size_t>(n));
}

Topology build_topology(const TopologySpec& spec) {
  if (spec.node_count <= 0) throw std::invalid_argument("node_count must be positive");
  std::vector<Link> links = spec.links;
  std::sort(links.begin(), links.end(), [](const Link& a, const Link& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < links.size(); ++i) {
    if (links[i].id == links[i - 1].id) {
      throw std::invalid_argument(fmt::format("duplicate link id {}", links[i].id));
    }
  }
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (links[i].id != static_cast<LinkId>(i)) {
      throw std::invalid_argument(
          fmt::format("link ids must be contiguous from 0; missing id {}", i));
    }
  }
  return Topology(spec.node_count, std::move(links), neighbors_from_spec(spec));
}

std::vector<LinkId> interference_set(const Topology& topology, LinkId l) {
  const Link& self = topology.link(l);
  std::vector<LinkId> out;
  for (const Link& k : topology.links()) {
    const bool hit = k.id == l || topology.are_neighbors(k.rx, self.tx) || k.rx == self.tx ||
                     k.tx == self.tx;
    if (hit) out.push_back(k.id);
  }
  return out;
}

void validate_session(const Topology& topology, const Session& session) {
  if (session.path.empty()) {
    throw std::invalid_argument(fmt::format("session {} has an empty path", session.id));
  }
  std::set<LinkId> seen;
  for (LinkId l : session.path) {
    if (l < 0 || l >= topology.link_count()) {
      throw std::invalid_argument(fmt::format("session {} references unknown link {}", session.id, l));
    }
    if (!seen.insert(l).second) {
      throw std::invalid_argument(fmt::format("session {} visits link {} twice", session.id, l));
    }
  }
  for (std::size_t k = 0; k + 1 < session.path.size(); ++k) {
    if (topology.link(session.path[k]).rx != topology.link(session.path[k + 1]).tx) {
      throw std::invalid_argument(fmt::format("session {} path breaks between links {} and {}",
                                              session.id, session.path[k], session.path[k + 1]));
    }
  }
  if (topology.link(session.path.front()).tx != session.source) {
    throw std::invalid_argument(fmt::format("session {} path does not start at source {}",
                                            session.id, session.source));
  }
  if (topology.link(session.path.back()).rx != session.destination) {
    throw std::invalid_argument(fmt::format("session {} path does not end at destination {}",
                                            session.id, session.destination));
  }
}

Network::Network(Topology topology, std::vector<Session> sessions)
    : topology_(std::move(topology)), sessions_(std::move(sessions)) {
  for (std::size_t i = 0; i < sessions_.size(); ++i) {
    if (sessions_[i].id != static_cast<SessionId>(i)) {
      throw std::invalid_argument(
          fmt::format("session ids must be 0..S-1 in order, got {} at {}", sessions_[i].id, i));
    }
    validate_session(topology_, sessions_[i]);
  }
  by_session_.resize(sessions_.size());
  by_link_.resize(static_cast<std::size_t>(topology_.link_count()));
  by_node_.resize(static_cast<std::size_t>(topology_.node_count()));
  for (const Session& s : sessions_) {
    for (std::size_t hop = 0; hop < s.path.size(); ++hop) {
      const auto id = static_cast<PairId>(pairs_.size());
      pairs_.push_back({s.path[hop], s.id, static_cast<int>(hop)});
      index_[{s.path[hop], s.id}] = id;
      by_session_[s.id].push_back(id);
    }
  }
  // by_link_ is filled in session order, so each list is sorted by session.
  for (const FlowPair& fp : pairs_) {
    const PairId id = index_.at({fp.link, fp.session});
    by_link_[fp.link].push_back(id);
  }
  for (const Link& ln : topology_.links()) {
    for (PairId p : by_link_[ln.id]) by_node_[ln.tx].push_back(p);
  }
}

const Session& Network::session(SessionId s) const {
  if (s < 0 || s >= session_count()) throw std::out_of_range(fmt::format("unknown session id {}", s));
  return sessions_[s];
}

std::optional<PairId> Network::find_pair(LinkId l, SessionId s) const {
  auto it = index_.find({l, s});
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const PairId> Network::session_pairs(SessionId s) const {
  return by_session_.at(static_cast<std::size_t>(s));
}

std::span<const PairId> Network::link_pairs(LinkId l) const {
  return by_link_.at(static_cast<std::size_t>(l));
}

std::span<const PairId> Network::node_pairs(NodeId n) const {
  return by_node_.at(static_cast<std::size_t>(n));
}

std::optional<PairId> Network::next_pair(PairId p) const {
  const FlowPair& fp = pair(p);
  const auto& chain = by_session_[fp.session];
  if (fp.hop + 1 >= static_cast<int>(chain.size())) return std::nullopt;
  return chain[fp.hop + 1];
}

Backlog QueueMatrix::at(const Network& network, LinkId l, SessionId s) const {
  auto p = network.find_pair(l, s);
  if (!p) throw std::invalid_argument(fmt::format("session {} does not traverse link {}", s, l));
  return backlog_.at(static_cast<std::size_t>(*p));
}

void QueueMatrix::set(PairId p, Backlog value) {
  if (value < 0) throw std::invalid_argument(fmt::format("negative backlog {} for pair {}", value, p));
  backlog_.at(static_cast<std::size_t>(p)) = value;
}

void QueueMatrix::add(PairId p, Backlog delta) {
  auto& b = backlog_.at(static_cast<std::size_t>(p));
  if (b + delta < 0) {
    throw std::logic_error(fmt::format("backlog of pair {} would become negative", p));
  }
  b += delta;
}

Backlog QueueMatrix::total() const {
  return std::accumulate(backlog_.begin(), backlog_.end(), Backlog{0});
}

Backlog differential_backlog(const Network& network, const QueueMatrix& queues, SessionId s,
                             LinkId l) {
  auto p = network.find_pair(l, s);
  if (!p) throw std::invalid_argument(fmt::format("session {} does not traverse link {}", s, l));
  auto next = network.next_pair(*p);
  return queues[*p] - (next ? queues[*next] : 0);
}

}  // namespace sbra
