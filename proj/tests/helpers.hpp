#pragma once

#include <utility>
#include <vector>

#include "sbra/net_model.hpp"

namespace testing {

inline sbra::Topology topology(int nodes, std::vector<sbra::Link> links,
                               std::vector<std::pair<int, int>> neighbors) {
  sbra::TopologySpec spec;
  spec.node_count = nodes;
  spec.links = std::move(links);
  for (auto [a, b] : neighbors) {
    spec.neighbor_pairs.emplace_back(a, b);
    spec.neighbor_pairs.emplace_back(b, a);
  }
  return sbra::build_topology(spec);
}

// Sessions given as link paths; source and destination are derived.
inline sbra::Network network(sbra::Topology topo, const std::vector<std::vector<int>>& paths) {
  std::vector<sbra::Session> sessions;
  for (std::size_t s = 0; s < paths.size(); ++s) {
    sbra::Session session;
    session.id = static_cast<int>(s);
    session.path = paths[s];
    session.source = topo.link(paths[s].front()).tx;
    session.destination = topo.link(paths[s].back()).rx;
    sessions.push_back(session);
  }
  return sbra::Network(std::move(topo), std::move(sessions));
}

// Directed line 0 -> 1 -> ... -> n-1 with one session along it.
inline sbra::Network line(int nodes) {
  std::vector<sbra::Link> links;
  std::vector<std::pair<int, int>> nbrs;
  std::vector<int> path;
  for (int i = 0; i + 1 < nodes; ++i) {
    links.push_back({i, i, i + 1});
    nbrs.emplace_back(i, i + 1);
    path.push_back(i);
  }
  return network(topology(nodes, links, nbrs), {path});
}

}  // namespace testing
