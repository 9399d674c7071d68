#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "stormcrew/errors.hpp"

namespace stormcrew {

// Grid node ids are globally unique across circuits. The power line feeding
// node i shares the id i, so "line id" and "fed node id" are interchangeable;
// substation roots have no feeding line.
using NodeId = int;
using LineId = NodeId;
using RoadId = int;
// A segment is keyed by the protective device at its head. The substation
// root counts as a device, so every line belongs to exactly one segment.
using SegmentId = NodeId;

// ---------------------------------------------------------------------------
// Input document (mirrors the on-disk JSON schema, see README).
// ---------------------------------------------------------------------------

struct GridNodeSpec {
  NodeId id = -1;
  NodeId parent = -1;  // -1 marks the substation root
  bool is_device = false;
  int customers = 0;
};

struct CircuitSpec {
  int id = -1;
  std::vector<GridNodeSpec> nodes;
};

struct RoadNodeSpec {
  RoadId id = -1;
  double x = 0.0;
  double y = 0.0;
};

struct RoadEdgeSpec {
  RoadId from = -1;
  RoadId to = -1;
  double minutes = 0.0;
};

struct PoleMapSpec {
  NodeId grid_node = -1;
  RoadId road_node = -1;
};

struct GridDocument {
  std::vector<CircuitSpec> circuits;
  std::vector<RoadNodeSpec> road_nodes;
  std::vector<RoadEdgeSpec> road_edges;
  std::vector<PoleMapSpec> pole_map;

  static GridDocument from_json_text(const std::string& text);
  static GridDocument load(const std::string& path);
  std::string to_json_text() const;
  void save(const std::string& path) const;
};

// ---------------------------------------------------------------------------
// Derived topology (per circuit)
// ---------------------------------------------------------------------------

// The topology sets the rest of the library routes and reasons with:
//   upstream_device[i]    first protective device strictly above node i
//                         (roots count as devices; the root maps to -1)
//   segment_of[d]         lines whose fault trips device d
//   outage_set[i]         lines whose fault blacks out node i (Q)
//   downstream_segments[i] segments headed strictly inside i's subtree (W)
struct TopologyIndex {
  std::map<NodeId, NodeId> upstream_device;
  std::map<SegmentId, std::vector<LineId>> segment_of;
  std::map<NodeId, std::vector<LineId>> outage_set;
  std::map<NodeId, std::vector<SegmentId>> downstream_segments;
};

class Circuit {
 public:
  Circuit(const CircuitSpec& spec);

  int id() const { return id_; }
  int node_count() const { return static_cast<int>(ids_.size()); }
  int line_count() const { return node_count() - 1; }
  NodeId root() const { return ids_[root_]; }
  const std::vector<NodeId>& node_ids() const { return ids_; }

  bool has_node(NodeId id) const { return index_.count(id) != 0; }
  bool is_device(NodeId id) const { return device_[at(id)]; }
  int customers(NodeId id) const { return customers_[at(id)]; }
  NodeId parent(NodeId id) const;
  long long total_customers() const { return subtree_customers_[root_]; }

  // First protective device strictly upstream of `id`; the root for top-level
  // nodes, -1 for the root itself.
  NodeId upstream_device(NodeId id) const;
  SegmentId segment_of_line(LineId line) const { return upstream_device(line); }

  // Devices from the root down to (and including) `device`.
  std::vector<NodeId> device_chain(NodeId device) const;

  std::vector<SegmentId> segment_ids() const;
  bool has_segment(SegmentId seg) const { return segments_.count(seg) != 0; }
  const std::vector<LineId>& segment_lines(SegmentId seg) const;
  long long segment_customers(SegmentId seg) const;

  // true iff `ancestor` lies strictly above `node` on the path to the root.
  bool is_strict_ancestor(NodeId ancestor, NodeId node) const;

  TopologyIndex derive_topology() const;

  // Customers without power when exactly `faults` are faulted and each fault
  // opens its first upstream protective device.
  long long affected_customers(const std::vector<LineId>& faults) const;

  struct Propagation {
    std::vector<NodeId> open_devices;          // sorted, deduplicated
    std::map<NodeId, bool> node_out;           // every node of the circuit
    long long customers_out = 0;
  };
  Propagation propagate(const std::vector<LineId>& faults) const;

  // Internal index helpers exposed for the hot paths in other modules.
  int at(NodeId id) const;
  const std::vector<NodeId>& children(NodeId id) const;

 private:
  void validate_tree(const CircuitSpec& spec);
  void build_index();

  int id_;
  std::vector<NodeId> ids_;               // index -> global id
  std::unordered_map<NodeId, int> index_; // global id -> index
  std::vector<int> parent_;               // index of parent, -1 at root
  std::vector<bool> device_;
  std::vector<int> customers_;
  std::vector<std::vector<NodeId>> children_ids_;
  int root_ = -1;

  std::vector<int> feed_device_;          // index of upstream device, -1 at root
  std::vector<int> tin_, tout_;           // Euler intervals, subtree tests
  std::vector<int> order_;                // node indices in tin order
  std::vector<long long> subtree_customers_;
  std::map<SegmentId, std::vector<LineId>> segments_;
};

// ---------------------------------------------------------------------------
// Road network
// ---------------------------------------------------------------------------

class RoadNetwork {
 public:
  RoadNetwork(const std::vector<RoadNodeSpec>& nodes,
              const std::vector<RoadEdgeSpec>& edges);

  int node_count() const { return static_cast<int>(ids_.size()); }
  bool has_node(RoadId id) const { return index_.count(id) != 0; }
  const std::vector<RoadId>& node_ids() const { return ids_; }
  double x(RoadId id) const { return xs_[at(id)]; }
  double y(RoadId id) const { return ys_[at(id)]; }
  int edge_count() const { return edge_count_; }

  // Shortest travel time in minutes; symmetric, zero iff i == j.
  double shortest_minutes(RoadId from, RoadId to) const;

  // Distance from a point to the closest point of a polyline, in coordinate
  // units. Used by the storm prior kernel.
  static double point_to_polyline(double px, double py,
                                  const std::vector<std::pair<double, double>>& line);

 private:
  int at(RoadId id) const;
  const std::vector<double>& row(int source) const;

  std::vector<RoadId> ids_;
  std::unordered_map<RoadId, int> index_;
  std::vector<double> xs_, ys_;
  std::vector<std::vector<std::pair<int, double>>> adj_;
  int edge_count_ = 0;

  // Per-source Dijkstra results, filled on demand. Guarded so a Grid can be
  // shared by concurrent episode runs.
  mutable std::mutex cache_mutex_;
  mutable std::unordered_map<int, std::vector<double>> cache_;
};

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

class Grid {
 public:
  explicit Grid(const GridDocument& doc);

  const std::vector<Circuit>& circuits() const { return circuits_; }
  const Circuit& circuit(int id) const;
  const RoadNetwork& road() const { return road_; }

  bool has_line(LineId line) const;
  // Circuit owning the given node/line id.
  const Circuit& circuit_of(NodeId id) const;
  RoadId pole_of(NodeId grid_node) const;
  // Road node the truck drives to when visiting a segment: the pole of the
  // protective device heading it.
  RoadId segment_pole(SegmentId seg) const { return pole_of(seg); }

  long long total_customers() const;
  int total_lines() const;
  std::vector<LineId> all_lines() const;  // ascending id

  // Customers out across the whole grid for a fault set spanning circuits.
  long long affected_customers(const std::vector<LineId>& faults) const;

  double shortest_travel_time(RoadId from, RoadId to) const {
    return road_.shortest_minutes(from, to);
  }

 private:
  std::vector<Circuit> circuits_;
  RoadNetwork road_;
  std::unordered_map<NodeId, int> circuit_of_node_;
  std::unordered_map<NodeId, RoadId> pole_;
};

// Validates the document and derives all topology; throws DocumentError
// subclasses naming the offending element.
Grid build_grid(const GridDocument& doc);

}  // namespace stormcrew
