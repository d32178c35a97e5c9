// Static network description for the slotted random-access simulator:
// nodes, directed links, neighborhoods, interference sets and the
// (link, session) queue layout.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace sbra {

using NodeId = int;
using LinkId = int;
using SessionId = int;
using PairId = int;
using Backlog = std::int64_t;

struct Link {
  LinkId id = 0;
  NodeId tx = 0;
  NodeId rx = 0;
};

struct Position {
  double x = 0.0;
  double y = 0.0;
};

// Either an explicit undirected neighbor list or a unit-disk rule over node
// positions. Exactly one of the two should be populated.
struct TopologySpec {
  int node_count = 0;
  std::vector<Link> links;
  std::vector<std::pair<NodeId, NodeId>> neighbor_pairs;
  std::vector<Position> positions;
  std::optional<double> radius;
};

class Topology {
 public:
  Topology(int node_count, std::vector<Link> links, std::vector<std::vector<NodeId>> neighbors);

  int node_count() const { return node_count_; }
  int link_count() const { return static_cast<int>(links_.size()); }
  const Link& link(LinkId l) const;
  std::span<const Link> links() const { return links_; }

  // Sorted neighbor ids of `n`.
  std::span<const NodeId> neighbors(NodeId n) const;
  bool are_neighbors(NodeId a, NodeId b) const;

  // Sorted link ids whose reception a transmission on `l` can destroy,
  // always including `l` itself.
  std::span<const LinkId> interference(LinkId l) const;

  // Links transmitted by node `n`, ascending.
  std::span<const LinkId> outgoing(NodeId n) const;

 private:
  int node_count_;
  std::vector<Link> links_;
  std::vector<std::vector<NodeId>> neighbors_;
  std::vector<std::vector<LinkId>> interference_;
  std::vector<std::vector<LinkId>> outgoing_;
};

// Validates the spec and derives interference sets. Throws
// std::invalid_argument on asymmetric neighbor lists, links between
// non-neighbors, self-loops, out-of-range endpoints or duplicate link ids.
Topology build_topology(const TopologySpec& spec);

// l interferes with k when tx(l) is heard by rx(k), when tx(l) is rx(k)
// (half-duplex), or when both links share a transmitter. Always contains l.
std::vector<LinkId> interference_set(const Topology& topology, LinkId l);

struct Session {
  SessionId id = 0;
  NodeId source = 0;
  NodeId destination = 0;
  std::vector<LinkId> path;
};

// A (link, session) pair that owns a queue.
struct FlowPair {
  LinkId link = 0;
  SessionId session = 0;
  int hop = 0;  // position of `link` on the session path
};

// Topology plus sessions plus the derived queue layout. Immutable once built.
class Network {
 public:
  Network(Topology topology, std::vector<Session> sessions);

  const Topology& topology() const { return topology_; }
  std::span<const Session> sessions() const { return sessions_; }
  const Session& session(SessionId s) const;
  int session_count() const { return static_cast<int>(sessions_.size()); }

  std::span<const FlowPair> pairs() const { return pairs_; }
  int pair_count() const { return static_cast<int>(pairs_.size()); }
  const FlowPair& pair(PairId p) const { return pairs_.at(static_cast<std::size_t>(p)); }

  std::optional<PairId> find_pair(LinkId l, SessionId s) const;
  // Pairs of session s ordered along its path.
  std::span<const PairId> session_pairs(SessionId s) const;
  // Pairs carried by link l, ordered by session id.
  std::span<const PairId> link_pairs(LinkId l) const;
  // Pairs whose link is transmitted by node n.
  std::span<const PairId> node_pairs(NodeId n) const;
  // Successor pair along the session path; nullopt at the last hop.
  std::optional<PairId> next_pair(PairId p) const;

 private:
  Topology topology_;
  std::vector<Session> sessions_;
  std::vector<FlowPair> pairs_;
  std::map<std::pair<LinkId, SessionId>, PairId> index_;
  std::vector<std::vector<PairId>> by_session_;
  std::vector<std::vector<PairId>> by_link_;
  std::vector<std::vector<PairId>> by_node_;
};

// Session path chaining and endpoint checks. Throws std::invalid_argument.
void validate_session(const Topology& topology, const Session& session);

// Nonnegative backlog per (link, session) pair of a Network.
class QueueMatrix {
 public:
  QueueMatrix() = default;
  explicit QueueMatrix(const Network& network) : backlog_(network.pairs().size(), 0) {}

  Backlog operator[](PairId p) const { return backlog_[static_cast<std::size_t>(p)]; }
  Backlog at(const Network& network, LinkId l, SessionId s) const;
  void set(PairId p, Backlog value);
  void add(PairId p, Backlog delta);

  std::span<const Backlog> values() const { return backlog_; }
  Backlog total() const;

  bool operator==(const QueueMatrix&) const = default;

 private:
  std::vector<Backlog> backlog_;
};

// q_l^s minus the backlog of the same session at the next link on its path
// (zero past the last link). May be negative.
Backlog differential_backlog(const Network& network, const QueueMatrix& queues, SessionId s,
                             LinkId l);

}  // namespace sbra
