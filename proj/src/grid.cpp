#include "stormcrew/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

#include "json.hpp"

namespace stormcrew {

namespace {

std::string describe(const char* what, int circuit, NodeId node) {
  std::ostringstream os;
  os << what << " (circuit " << circuit << ", node " << node << ")";
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Circuit
// ---------------------------------------------------------------------------

Circuit::Circuit(const CircuitSpec& spec) : id_(spec.id) {
  validate_tree(spec);
  build_index();
}

void Circuit::validate_tree(const CircuitSpec& spec) {
  if (spec.nodes.empty())
    throw DocumentError("circuit " + std::to_string(spec.id) + " has no nodes");

  ids_.reserve(spec.nodes.size());
  for (const auto& n : spec.nodes) {
    if (index_.count(n.id))
      throw DocumentError(describe("duplicate node id", id_, n.id));
    index_[n.id] = static_cast<int>(ids_.size());
    ids_.push_back(n.id);
  }

  parent_.assign(ids_.size(), -1);
  device_.assign(ids_.size(), false);
  customers_.assign(ids_.size(), 0);
  for (const auto& n : spec.nodes) {
    const int i = index_[n.id];
    device_[i] = n.is_device;
    if (n.customers < 0)
      throw DocumentError(describe("negative customer count", id_, n.id));
    if (n.is_device && n.customers != 0)
      throw DocumentError(describe("customers attached to a device node", id_, n.id));
    customers_[i] = n.customers;
    if (n.parent == -1) {
      if (root_ != -1)
        throw MultipleRoots(describe("second root", id_, n.id));
      root_ = i;
    } else {
      auto it = index_.find(n.parent);
      if (it == index_.end())
        throw DocumentError(describe("unknown parent", id_, n.id));
      parent_[i] = it->second;
    }
  }
  if (root_ == -1)
    throw CycleInCircuit("circuit " + std::to_string(id_) + " has no root");
  if (customers_[root_] != 0)
    throw DocumentError(describe("customers attached to the substation root", id_,
                                 ids_[root_]));
  // The substation root always acts as a protective device.
  device_[root_] = true;

  // Walk parent chains; any node that fails to reach the root sits on a cycle.
  std::vector<int> state(ids_.size(), 0);  // 0 new, 1 on path, 2 done
  for (std::size_t start = 0; start < ids_.size(); ++start) {
    if (state[start] == 2) continue;
    std::vector<int> path;
    int cur = static_cast<int>(start);
    while (cur != -1 && state[cur] == 0) {
      state[cur] = 1;
      path.push_back(cur);
      cur = parent_[cur];
    }
    if (cur != -1 && state[cur] == 1)
      throw CycleInCircuit(describe("parent cycle through", id_, ids_[cur]));
    for (int i : path) state[i] = 2;
  }
}

void Circuit::build_index() {
  const int n = node_count();
  children_ids_.assign(n, {});
  std::vector<std::vector<int>> kids(n);
  for (int i = 0; i < n; ++i)
    if (parent_[i] != -1) kids[parent_[i]].push_back(i);
  // Deterministic traversal: children ordered by ascending node id.
  for (auto& k : kids)
    std::sort(k.begin(), k.end(), [&](int a, int b) { return ids_[a] < ids_[b]; });
  for (int i = 0; i < n; ++i)
    for (int c : kids[i]) children_ids_[i].push_back(ids_[c]);

  tin_.assign(n, -1);
  tout_.assign(n, -1);
  order_.clear();
  order_.reserve(n);
  feed_device_.assign(n, -1);
  subtree_customers_.assign(n, 0);

  // Iterative DFS from the root; tin/tout index into `order_`.
  std::vector<std::pair<int, std::size_t>> stack;  // (node index, next child)
  stack.emplace_back(root_, 0);
  tin_[root_] = 0;
  order_.push_back(root_);
  while (!stack.empty()) {
    auto& [i, next] = stack.back();
    if (next == 0 && i != root_) {
      const int p = parent_[i];
      feed_device_[i] = device_[p] ? p : feed_device_[p];
    }
    if (next < kids[i].size()) {
      const int c = kids[i][next++];
      tin_[c] = static_cast<int>(order_.size());
      order_.push_back(c);
      stack.emplace_back(c, 0);
    } else {
      tout_[i] = static_cast<int>(order_.size());
      stack.pop_back();
    }
  }

  for (int k = n - 1; k >= 0; --k) {
    const int i = order_[k];
    subtree_customers_[i] = customers_[i];
    for (int c : kids[i]) subtree_customers_[i] += subtree_customers_[c];
  }

  // Lines grouped by the first upstream device.
  for (int i = 0; i < n; ++i) {
    if (i == root_) continue;
    segments_[ids_[feed_device_[i]]].push_back(ids_[i]);
  }
  for (auto& [dev, lines] : segments_) std::sort(lines.begin(), lines.end());
}

int Circuit::at(NodeId id) const {
  auto it = index_.find(id);
  if (it == index_.end())
    throw UnknownLine(describe("unknown node", id_, id));
  return it->second;
}

NodeId Circuit::parent(NodeId id) const {
  const int p = parent_[at(id)];
  return p == -1 ? -1 : ids_[p];
}

const std::vector<NodeId>& Circuit::children(NodeId id) const {
  return children_ids_[at(id)];
}

NodeId Circuit::upstream_device(NodeId id) const {
  const int i = at(id);
  if (i == root_) return -1;
  return ids_[feed_device_[i]];
}

std::vector<NodeId> Circuit::device_chain(NodeId device) const {
  std::vector<NodeId> chain;
  NodeId cur = device;
  while (cur != -1) {
    chain.push_back(cur);
    cur = upstream_device(cur);
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

std::vector<SegmentId> Circuit::segment_ids() const {
  std::vector<SegmentId> out;
  out.reserve(segments_.size());
  for (const auto& [dev, lines] : segments_) out.push_back(dev);
  return out;
}

const std::vector<LineId>& Circuit::segment_lines(SegmentId seg) const {
  auto it = segments_.find(seg);
  if (it == segments_.end())
    throw UnknownLine(describe("unknown segment", id_, seg));
  return it->second;
}

long long Circuit::segment_customers(SegmentId seg) const {
  long long total = 0;
  for (LineId line : segment_lines(seg)) total += customers_[at(line)];
  return total;
}

bool Circuit::is_strict_ancestor(NodeId ancestor, NodeId node) const {
  const int a = at(ancestor);
  const int b = at(node);
  return a != b && tin_[a] < tin_[b] && tin_[b] < tout_[a];
}

TopologyIndex Circuit::derive_topology() const {
  TopologyIndex t;
  for (NodeId id : ids_) {
    t.upstream_device[id] = upstream_device(id);
  }
  t.segment_of = segments_;

  // Q: walk the device chain above each node, collecting the chain segments.
  for (NodeId id : ids_) {
    std::vector<LineId>& q = t.outage_set[id];
    NodeId dev = upstream_device(id);
    while (dev != -1) {
      auto it = segments_.find(dev);
      if (it != segments_.end())
        q.insert(q.end(), it->second.begin(), it->second.end());
      dev = upstream_device(dev);
    }
    std::sort(q.begin(), q.end());
  }

  // W: segments headed at or below each node, excluding the node's own segment.
  for (NodeId id : ids_) {
    std::vector<SegmentId>& w = t.downstream_segments[id];
    for (const auto& [dev, lines] : segments_) {
      if (dev == id || is_strict_ancestor(id, dev)) w.push_back(dev);
    }
  }
  return t;
}

long long Circuit::affected_customers(const std::vector<LineId>& faults) const {
  if (faults.empty()) return 0;
  std::vector<int> open;
  open.reserve(faults.size());
  for (LineId f : faults) {
    const int i = at(f);
    if (i == root_)
      throw UnknownLine(describe("root has no feeding line", id_, f));
    open.push_back(feed_device_[i]);
  }
  std::sort(open.begin(), open.end());
  open.erase(std::unique(open.begin(), open.end()), open.end());

  // Only topmost open devices contribute; devices have no customers of their
  // own, so subtree totals count exactly the nodes below them.
  long long out = 0;
  for (int d : open) {
    bool topmost = true;
    for (int up = feed_device_[d]; up != -1; up = feed_device_[up]) {
      if (std::binary_search(open.begin(), open.end(), up)) {
        topmost = false;
        break;
      }
    }
    if (topmost) out += subtree_customers_[d];
  }
  return out;
}

Circuit::Propagation Circuit::propagate(const std::vector<LineId>& faults) const {
  Propagation out;
  std::vector<int> open;  // device node indices
  for (LineId f : faults) {
    const int i = at(f);
    if (i == root_)
      throw UnknownLine(describe("root has no feeding line", id_, f));
    open.push_back(at(upstream_device(f)));
  }
  std::sort(open.begin(), open.end());
  open.erase(std::unique(open.begin(), open.end()), open.end());

  std::vector<char> is_open(node_count(), 0);
  for (int d : open) is_open[d] = 1;

  std::vector<char> node_down(node_count(), 0);
  for (int d : open) {
    // Devices under an open ancestor device are already blacked out.
    bool topmost = true;
    for (int up = feed_device_[d]; up != -1; up = feed_device_[up]) {
      if (is_open[up]) {
        topmost = false;
        break;
      }
    }
    if (!topmost) continue;
    for (int k = tin_[d] + 1; k < tout_[d]; ++k) node_down[order_[k]] = 1;
  }

  for (int i = 0; i < node_count(); ++i) {
    out.node_out[ids_[i]] = node_down[i] != 0;
    if (node_down[i]) out.customers_out += customers_[i];
  }
  for (int d : open) out.open_devices.push_back(ids_[d]);
  std::sort(out.open_devices.begin(), out.open_devices.end());
  return out;
}

// ---------------------------------------------------------------------------
// RoadNetwork
// ---------------------------------------------------------------------------

RoadNetwork::RoadNetwork(const std::vector<RoadNodeSpec>& nodes,
                         const std::vector<RoadEdgeSpec>& edges) {
  if (nodes.empty()) throw DocumentError("road network has no nodes");
  for (const auto& n : nodes) {
    if (index_.count(n.id))
      throw DocumentError("duplicate road node " + std::to_string(n.id));
    index_[n.id] = static_cast<int>(ids_.size());
    ids_.push_back(n.id);
    xs_.push_back(n.x);
    ys_.push_back(n.y);
  }
  adj_.assign(ids_.size(), {});
  for (const auto& e : edges) {
    auto fi = index_.find(e.from);
    auto ti = index_.find(e.to);
    if (fi == index_.end() || ti == index_.end())
      throw DocumentError("road edge references unknown node " +
                          std::to_string(fi == index_.end() ? e.from : e.to));
    if (e.minutes < 0)
      throw DocumentError("negative travel time on edge " + std::to_string(e.from) +
                          "-" + std::to_string(e.to));
    if (e.from == e.to) continue;
    adj_[fi->second].emplace_back(ti->second, e.minutes);
    adj_[ti->second].emplace_back(fi->second, e.minutes);
    ++edge_count_;
  }

  // Connectivity is a construction invariant (DisconnectedRoad otherwise).
  std::vector<char> seen(ids_.size(), 0);
  std::queue<int> bfs;
  bfs.push(0);
  seen[0] = 1;
  while (!bfs.empty()) {
    const int u = bfs.front();
    bfs.pop();
    for (const auto& [v, w] : adj_[u])
      if (!seen[v]) {
        seen[v] = 1;
        bfs.push(v);
      }
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i])
      throw DisconnectedRoad("road node " + std::to_string(ids_[i]) +
                             " is unreachable from node " + std::to_string(ids_[0]));
}

int RoadNetwork::at(RoadId id) const {
  auto it = index_.find(id);
  if (it == index_.end())
    throw Unreachable("unknown road node " + std::to_string(id));
  return it->second;
}

const std::vector<double>& RoadNetwork::row(int source) const {
  std::scoped_lock lock(cache_mutex_);
  auto it = cache_.find(source);
  if (it != cache_.end()) return it->second;

  std::vector<double> dist(ids_.size(), std::numeric_limits<double>::infinity());
  dist[source] = 0.0;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (const auto& [v, w] : adj_[u]) {
      const double nd = d + w;
      if (nd < dist[v]) {
        dist[v] = nd;
        heap.emplace(nd, v);
      }
    }
  }
  return cache_.emplace(source, std::move(dist)).first->second;
}

double RoadNetwork::shortest_minutes(RoadId from, RoadId to) const {
  const int s = at(from);
  const int t = at(to);
  if (s == t) return 0.0;
  const double d = row(s)[t];
  if (!std::isfinite(d))
    throw Unreachable("no road path from " + std::to_string(from) + " to " +
                      std::to_string(to));
  return d;
}

double RoadNetwork::point_to_polyline(
    double px, double py, const std::vector<std::pair<double, double>>& line) {
  if (line.empty()) return std::numeric_limits<double>::infinity();
  auto seg_dist = [&](std::pair<double, double> a, std::pair<double, double> b) {
    const double vx = b.first - a.first, vy = b.second - a.second;
    const double wx = px - a.first, wy = py - a.second;
    const double vv = vx * vx + vy * vy;
    double t = vv > 0 ? (wx * vx + wy * vy) / vv : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - (a.first + t * vx), dy = py - (a.second + t * vy);
    return std::sqrt(dx * dx + dy * dy);
  };
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < line.size(); ++i)
    best = std::min(best, seg_dist(line[i], line[i + 1]));
  if (line.size() == 1) {
    const double dx = px - line[0].first, dy = py - line[0].second;
    best = std::sqrt(dx * dx + dy * dy);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

Grid::Grid(const GridDocument& doc)
    : road_(doc.road_nodes, doc.road_edges) {
  circuits_.reserve(doc.circuits.size());
  std::map<int, bool> circuit_ids;
  for (const auto& cs : doc.circuits) {
    if (circuit_ids.count(cs.id))
      throw DocumentError("duplicate circuit id " + std::to_string(cs.id));
    circuit_ids[cs.id] = true;
    circuits_.emplace_back(cs);
    const int idx = static_cast<int>(circuits_.size()) - 1;
    for (NodeId id : circuits_.back().node_ids()) {
      if (circuit_of_node_.count(id))
        throw DocumentError("grid node id " + std::to_string(id) +
                            " appears in more than one circuit");
      circuit_of_node_[id] = idx;
    }
  }

  for (const auto& pm : doc.pole_map) {
    if (!circuit_of_node_.count(pm.grid_node))
      throw UnmappedGridNode("pole map references unknown grid node " +
                             std::to_string(pm.grid_node));
    if (!road_.has_node(pm.road_node))
      throw DocumentError("pole map references unknown road node " +
                          std::to_string(pm.road_node));
    if (pole_.count(pm.grid_node))
      throw DocumentError("grid node " + std::to_string(pm.grid_node) +
                          " mapped to more than one pole");
    pole_[pm.grid_node] = pm.road_node;
  }
  for (const auto& [node, idx] : circuit_of_node_) {
    (void)idx;
    if (!pole_.count(node))
      throw UnmappedGridNode("grid node " + std::to_string(node) +
                             " has no pole mapping");
  }
}

const Circuit& Grid::circuit(int id) const {
  for (const auto& c : circuits_)
    if (c.id() == id) return c;
  throw UnknownLine("unknown circuit " + std::to_string(id));
}

bool Grid::has_line(LineId line) const {
  auto it = circuit_of_node_.find(line);
  if (it == circuit_of_node_.end()) return false;
  return circuits_[it->second].root() != line;
}

const Circuit& Grid::circuit_of(NodeId id) const {
  auto it = circuit_of_node_.find(id);
  if (it == circuit_of_node_.end())
    throw UnknownLine("unknown grid node " + std::to_string(id));
  return circuits_[it->second];
}

RoadId Grid::pole_of(NodeId grid_node) const {
  auto it = pole_.find(grid_node);
  if (it == pole_.end())
    throw UnmappedGridNode("grid node " + std::to_string(grid_node) +
                           " has no pole mapping");
  return it->second;
}

long long Grid::total_customers() const {
  long long total = 0;
  for (const auto& c : circuits_) total += c.total_customers();
  return total;
}

int Grid::total_lines() const {
  int total = 0;
  for (const auto& c : circuits_) total += c.line_count();
  return total;
}

std::vector<LineId> Grid::all_lines() const {
  std::vector<LineId> lines;
  lines.reserve(total_lines());
  for (const auto& c : circuits_)
    for (NodeId id : c.node_ids())
      if (id != c.root()) lines.push_back(id);
  std::sort(lines.begin(), lines.end());
  return lines;
}

long long Grid::affected_customers(const std::vector<LineId>& faults) const {
  std::map<int, std::vector<LineId>> per_circuit;
  for (LineId f : faults) {
    const Circuit& c = circuit_of(f);
    per_circuit[c.id()].push_back(f);
  }
  long long total = 0;
  for (const auto& [cid, fl] : per_circuit)
    total += circuit(cid).affected_customers(fl);
  return total;
}

Grid build_grid(const GridDocument& doc) { return Grid(doc); }

// ---------------------------------------------------------------------------
// Document I/O
// ---------------------------------------------------------------------------

GridDocument GridDocument::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  GridDocument doc;
  for (const auto& cj : j.at("circuits")) {
    CircuitSpec cs;
    cs.id = cj.at("id").get<int>();
    for (const auto& nj : cj.at("nodes")) {
      GridNodeSpec n;
      n.id = nj.at("id").get<int>();
      n.parent = nj.at("parent").get<int>();
      n.is_device = nj.at("is_device").get<bool>();
      n.customers = nj.at("customers").get<int>();
      cs.nodes.push_back(n);
    }
    doc.circuits.push_back(std::move(cs));
  }
  const auto& rj = j.at("road");
  for (const auto& nj : rj.at("nodes")) {
    RoadNodeSpec n;
    n.id = nj.at("id").get<int>();
    n.x = nj.value("x", 0.0);
    n.y = nj.value("y", 0.0);
    doc.road_nodes.push_back(n);
  }
  for (const auto& ej : rj.at("edges")) {
    RoadEdgeSpec e;
    e.from = ej.at("from").get<int>();
    e.to = ej.at("to").get<int>();
    e.minutes = ej.at("minutes").get<double>();
    doc.road_edges.push_back(e);
  }
  for (const auto& pj : j.at("pole_map")) {
    PoleMapSpec p;
    p.grid_node = pj.at("grid_node").get<int>();
    p.road_node = pj.at("road_node").get<int>();
    doc.pole_map.push_back(p);
  }
  return doc;
}

GridDocument GridDocument::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DocumentError("cannot open grid file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string GridDocument::to_json_text() const {
  nlohmann::json j;
  j["circuits"] = nlohmann::json::array();
  for (const auto& cs : circuits) {
    nlohmann::json cj;
    cj["id"] = cs.id;
    cj["nodes"] = nlohmann::json::array();
    for (const auto& n : cs.nodes) {
      cj["nodes"].push_back({{"id", n.id},
                             {"parent", n.parent},
                             {"is_device", n.is_device},
                             {"customers", n.customers}});
    }
    j["circuits"].push_back(std::move(cj));
  }
  j["road"]["nodes"] = nlohmann::json::array();
  for (const auto& n : road_nodes)
    j["road"]["nodes"].push_back({{"id", n.id}, {"x", n.x}, {"y", n.y}});
  j["road"]["edges"] = nlohmann::json::array();
  for (const auto& e : road_edges)
    j["road"]["edges"].push_back(
        {{"from", e.from}, {"to", e.to}, {"minutes", e.minutes}});
  j["pole_map"] = nlohmann::json::array();
  for (const auto& p : pole_map)
    j["pole_map"].push_back(
        {{"grid_node", p.grid_node}, {"road_node", p.road_node}});
  return j.dump(2);
}

void GridDocument::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DocumentError("cannot write grid file " + path);
  out << to_json_text() << "\n";
}

}  // namespace stormcrew
