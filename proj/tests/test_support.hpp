#pragma once

// Shared builders and independent brute-force oracles for the test suites.
// Oracles work from the raw document specs (parent maps, edge lists), never
// through the library's derived topology, so they stay independent of the
// code paths they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <vector>

#include "stormcrew/grid.hpp"
#include "stormcrew/gridgen.hpp"
#include "stormcrew/rng.hpp"

namespace sctest {

using namespace stormcrew;

// A single-circuit grid from (id, parent, is_device, customers) tuples, with
// one road node per grid node, chained 1 minute apart in listing order, plus
// road node 0 as depot.
inline GridDocument doc_from_nodes(const std::vector<GridNodeSpec>& nodes) {
  GridDocument doc;
  CircuitSpec cs;
  cs.id = 0;
  cs.nodes = nodes;
  doc.circuits.push_back(cs);
  doc.road_nodes.push_back({0, 0.0, 0.0});
  RoadId prev = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const RoadId rid = 100 + static_cast<RoadId>(i);
    doc.road_nodes.push_back({rid, static_cast<double>(i + 1), 0.0});
    doc.road_edges.push_back({prev, rid, 1.0});
    doc.pole_map.push_back({nodes[i].id, rid});
    prev = rid;
  }
  return doc;
}

// Chain substation(device) -> 1 -> 2 -> ... -> n, devices at the listed
// positions (1-based within the chain), `customers` on every non-device node.
inline GridDocument chain_doc(int n, const std::set<int>& device_positions,
                              int customers) {
  std::vector<GridNodeSpec> nodes;
  nodes.push_back({0, -1, true, 0});
  for (int i = 1; i <= n; ++i) {
    const bool dev = device_positions.count(i) != 0;
    nodes.push_back({i, i - 1, dev, dev ? 0 : customers});
  }
  return doc_from_nodes(nodes);
}

// Random single-circuit spec: a uniform recursive tree with random devices
// and customer counts. Returned as raw specs for oracle use.
inline std::vector<GridNodeSpec> random_circuit_nodes(int n_lines, double device_prob,
                                                      int max_customers, Rng& rng) {
  std::vector<GridNodeSpec> nodes;
  nodes.push_back({0, -1, true, 0});
  for (int i = 1; i <= n_lines; ++i) {
    GridNodeSpec spec;
    spec.id = i;
    spec.parent = static_cast<int>(uniform_index(rng, i));
    spec.is_device = uniform01(rng) < device_prob;
    spec.customers =
        spec.is_device ? 0 : static_cast<int>(uniform_index(rng, max_customers + 1));
    nodes.push_back(spec);
  }
  return nodes;
}

// ---------------------------------------------------------------------------
// Brute-force outage oracle on raw node specs.
// ---------------------------------------------------------------------------

struct OutageOracle {
  std::map<NodeId, NodeId> parent;
  std::map<NodeId, bool> device;
  std::map<NodeId, int> customers;
  NodeId root = -1;

  explicit OutageOracle(const std::vector<GridNodeSpec>& nodes) {
    for (const auto& n : nodes) {
      parent[n.id] = n.parent;
      device[n.id] = n.is_device;
      customers[n.id] = n.customers;
      if (n.parent == -1) root = n.id;
    }
    device[root] = true;
  }

  // Device opened by a fault on `line`: nearest device at or above the parent.
  NodeId opened_device(LineId line) const {
    NodeId cur = parent.at(line);
    while (!device.at(cur)) cur = parent.at(cur);
    return cur;
  }

  bool node_out(NodeId id, const std::vector<LineId>& faults) const {
    std::set<NodeId> open;
    for (LineId f : faults) open.insert(opened_device(f));
    // Walk the ancestry; out iff any strict ancestor device is open.
    for (NodeId cur = parent.at(id); cur != -1; cur = parent.at(cur))
      if (open.count(cur)) return true;
    return false;
  }

  long long customers_out(const std::vector<LineId>& faults) const {
    long long total = 0;
    for (const auto& [id, n] : customers)
      if (node_out(id, faults)) total += n;
    return total;
  }
};

// Exhaustive shortest path by DFS over simple paths (small graphs only).
inline double brute_shortest(const std::vector<RoadNodeSpec>& nodes,
                             const std::vector<RoadEdgeSpec>& edges, RoadId from,
                             RoadId to) {
  std::map<RoadId, std::vector<std::pair<RoadId, double>>> adj;
  for (const auto& e : edges) {
    adj[e.from].push_back({e.to, e.minutes});
    adj[e.to].push_back({e.from, e.minutes});
  }
  (void)nodes;
  double best = std::numeric_limits<double>::infinity();
  std::set<RoadId> visited;
  std::function<void(RoadId, double)> dfs = [&](RoadId at, double acc) {
    if (acc >= best) return;
    if (at == to) {
      best = acc;
      return;
    }
    visited.insert(at);
    for (const auto& [next, w] : adj[at])
      if (!visited.count(next)) dfs(next, acc + w);
    visited.erase(at);
  };
  dfs(from, 0.0);
  return best;
}

}  // namespace sctest
