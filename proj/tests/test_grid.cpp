#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "test_support.hpp"

using namespace stormcrew;
using namespace sctest;

TEST_CASE("smallest tree builds and segments correctly") {
  // root(device) -> a -> b, b is a transformer with 5 customers.
  std::vector<GridNodeSpec> nodes = {
      {0, -1, true, 0}, {1, 0, false, 0}, {2, 1, false, 5}};
  const Grid grid = build_grid(doc_from_nodes(nodes));
  const Circuit& c = grid.circuits().front();
  CHECK(c.segment_ids() == std::vector<SegmentId>{0});
  CHECK(c.segment_lines(0) == std::vector<LineId>{1, 2});
  CHECK(c.total_customers() == 5);
}

TEST_CASE("parent cycle is rejected") {
  std::vector<GridNodeSpec> nodes = {
      {0, -1, true, 0}, {1, 2, false, 0}, {2, 1, false, 3}};
  CHECK_THROWS_AS(build_grid(doc_from_nodes(nodes)), CycleInCircuit);
}

TEST_CASE("two roots are rejected") {
  std::vector<GridNodeSpec> nodes = {
      {0, -1, true, 0}, {1, -1, true, 0}, {2, 1, false, 3}};
  CHECK_THROWS_AS(build_grid(doc_from_nodes(nodes)), MultipleRoots);
}

TEST_CASE("missing pole mapping is rejected") {
  std::vector<GridNodeSpec> nodes = {{0, -1, true, 0}, {1, 0, false, 2}};
  GridDocument doc = doc_from_nodes(nodes);
  doc.pole_map.pop_back();
  CHECK_THROWS_AS(build_grid(doc), UnmappedGridNode);
}

TEST_CASE("disconnected road is rejected") {
  std::vector<GridNodeSpec> nodes = {{0, -1, true, 0}, {1, 0, false, 2}};
  GridDocument doc = doc_from_nodes(nodes);
  doc.road_nodes.push_back({999, 50.0, 50.0});  // no edges to it
  CHECK_THROWS_AS(build_grid(doc), DisconnectedRoad);
}

TEST_CASE("paper-scale circuit statistics load") {
  GridGenParams params;
  params.circuits = 1;
  params.devices_per_circuit = 41;
  params.lines_per_circuit = 724;
  params.customers_per_circuit = 2000;
  params.seed = 7;
  const Grid grid = build_grid(generate_grid(params));
  const Circuit& c = grid.circuits().front();
  CHECK(c.line_count() == 724);
  int devices = 0;
  for (NodeId id : c.node_ids()) devices += c.is_device(id) ? 1 : 0;
  CHECK(devices == 41);
}

TEST_CASE("one-segment chain topology") {
  // root(device) -> a -> b with no other devices.
  const Grid grid = build_grid(chain_doc(2, {}, 3));
  const Circuit& c = grid.circuits().front();
  const TopologyIndex t = c.derive_topology();
  CHECK(t.upstream_device.at(1) == 0);
  CHECK(t.upstream_device.at(2) == 0);
  CHECK(t.segment_of.size() == 1);
  CHECK(t.segment_of.at(0) == std::vector<LineId>{1, 2});
}

TEST_CASE("two-segment chain topology") {
  // root -> a(device) -> b.
  const Grid grid = build_grid(chain_doc(2, {1}, 3));
  const Circuit& c = grid.circuits().front();
  const TopologyIndex t = c.derive_topology();
  CHECK(t.segment_of.at(1) == std::vector<LineId>{2});
  CHECK(t.upstream_device.at(2) == 1);
  CHECK(t.outage_set.at(2) == std::vector<LineId>{1, 2});
}

TEST_CASE("downstream segments") {
  // root -> a(device) -> b; W of node a holds segment a, W of b is empty.
  const Grid grid = build_grid(chain_doc(2, {1}, 3));
  const Circuit& c = grid.circuits().front();
  const TopologyIndex t = c.derive_topology();
  CHECK(t.downstream_segments.at(1) == std::vector<SegmentId>{1});
  CHECK(t.downstream_segments.at(2).empty());
  CHECK(t.downstream_segments.at(0) == std::vector<SegmentId>{0, 1});
}

TEST_CASE("outage sets match single-fault propagation on random trees") {
  Rng rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    const auto nodes = random_circuit_nodes(19, 0.3, 4, rng);
    const Grid grid = build_grid(doc_from_nodes(nodes));
    const Circuit& c = grid.circuits().front();
    const OutageOracle oracle(nodes);
    const TopologyIndex t = c.derive_topology();

    for (NodeId id : c.node_ids()) {
      std::vector<LineId> expect;
      for (NodeId line : c.node_ids()) {
        if (line == c.root()) continue;
        if (oracle.node_out(id, {line})) expect.push_back(line);
      }
      std::sort(expect.begin(), expect.end());
      CHECK(t.outage_set.at(id) == expect);
    }
  }
}

TEST_CASE("segments partition the circuit lines") {
  Rng rng(202);
  for (int trial = 0; trial < 25; ++trial) {
    const auto nodes = random_circuit_nodes(30, 0.25, 3, rng);
    const Grid grid = build_grid(doc_from_nodes(nodes));
    const Circuit& c = grid.circuits().front();
    std::vector<LineId> all;
    for (SegmentId seg : c.segment_ids()) {
      const auto& lines = c.segment_lines(seg);
      all.insert(all.end(), lines.begin(), lines.end());
    }
    std::sort(all.begin(), all.end());
    std::vector<LineId> expect;
    for (NodeId id : c.node_ids())
      if (id != c.root()) expect.push_back(id);
    std::sort(expect.begin(), expect.end());
    CHECK(all == expect);
  }
}

TEST_CASE("affected customers basics") {
  const Grid grid = build_grid(chain_doc(4, {2}, 5));
  const Circuit& c = grid.circuits().front();
  CHECK(c.affected_customers({}) == 0);
  // Fault on the root's feeder line blacks out the whole circuit.
  CHECK(c.affected_customers({1}) == c.total_customers());
  CHECK_THROWS_AS(c.affected_customers({99}), UnknownLine);
}

TEST_CASE("affected customers equals per-customer path walk") {
  Rng rng(303);
  for (int trial = 0; trial < 50; ++trial) {
    const auto nodes = random_circuit_nodes(14, 0.3, 5, rng);
    const Grid grid = build_grid(doc_from_nodes(nodes));
    const Circuit& c = grid.circuits().front();
    const OutageOracle oracle(nodes);

    std::vector<LineId> faults;
    for (NodeId id : c.node_ids()) {
      if (id == c.root()) continue;
      if (uniform01(rng) < 0.25) faults.push_back(id);
    }
    CHECK(c.affected_customers(faults) == oracle.customers_out(faults));

    const auto prop = c.propagate(faults);
    CHECK(prop.customers_out == oracle.customers_out(faults));
    for (NodeId id : c.node_ids())
      CHECK(prop.node_out.at(id) == oracle.node_out(id, faults));
  }
}

TEST_CASE("outage monotonicity in the fault set") {
  Rng rng(404);
  for (int trial = 0; trial < 30; ++trial) {
    const auto nodes = random_circuit_nodes(16, 0.3, 5, rng);
    const Grid grid = build_grid(doc_from_nodes(nodes));
    const Circuit& c = grid.circuits().front();
    std::vector<LineId> a, b;
    for (NodeId id : c.node_ids()) {
      if (id == c.root()) continue;
      const double u = uniform01(rng);
      if (u < 0.2) a.push_back(id);
      if (u < 0.5) b.push_back(id);  // a subset of b by construction
    }
    CHECK(c.affected_customers(a) <= c.affected_customers(b));
  }
}

TEST_CASE("single-line outage equals customers below the opened device") {
  Rng rng(505);
  for (int trial = 0; trial < 20; ++trial) {
    const auto nodes = random_circuit_nodes(12, 0.35, 4, rng);
    const Grid grid = build_grid(doc_from_nodes(nodes));
    const Circuit& c = grid.circuits().front();
    const OutageOracle oracle(nodes);
    for (NodeId line : c.node_ids()) {
      if (line == c.root()) continue;
      const NodeId dev = oracle.opened_device(line);
      long long below = 0;
      for (const auto& [id, n] : oracle.customers) {
        for (NodeId cur = oracle.parent.at(id); cur != -1;
             cur = oracle.parent.at(cur))
          if (cur == dev) {
            below += n;
            break;
          }
      }
      CHECK(c.affected_customers({line}) == below);
    }
  }
}

TEST_CASE("shortest travel times") {
  std::vector<GridNodeSpec> nodes = {{0, -1, true, 0}, {1, 0, false, 2}};
  GridDocument doc = doc_from_nodes(nodes);
  // Add a second route 0 -> 200 -> 101 with weights 3 + 4 and a direct edge
  // of weight 9 so the two-hop path wins.
  doc.road_nodes.push_back({200, 0.0, 1.0});
  doc.road_edges.push_back({0, 200, 3.0});
  doc.road_edges.push_back({200, 101, 4.0});
  doc.road_edges.push_back({0, 101, 9.0});
  const Grid grid = build_grid(doc);
  CHECK(grid.shortest_travel_time(0, 0) == 0.0);
  CHECK(grid.shortest_travel_time(0, 101) == doctest::Approx(2.0));  // via 100
  CHECK(grid.shortest_travel_time(0, 200) == doctest::Approx(3.0));
  CHECK(grid.shortest_travel_time(101, 0) ==
        grid.shortest_travel_time(0, 101));
  CHECK_THROWS_AS(grid.shortest_travel_time(0, 999), Unreachable);
}

TEST_CASE("shortest times match exhaustive path enumeration") {
  Rng rng(606);
  for (int trial = 0; trial < 10; ++trial) {
    // Random connected small road graph around a trivial grid.
    std::vector<GridNodeSpec> nodes = {{0, -1, true, 0}, {1, 0, false, 1}};
    GridDocument doc;
    doc.circuits.push_back({0, nodes});
    const int n = 12;
    for (int i = 0; i < n; ++i)
      doc.road_nodes.push_back({i, static_cast<double>(i), 0.0});
    for (int i = 1; i < n; ++i)
      doc.road_edges.push_back(
          {static_cast<int>(uniform_index(rng, i)), i,
           1.0 + 9.0 * uniform01(rng)});
    for (int extra = 0; extra < 8; ++extra) {
      const int a = static_cast<int>(uniform_index(rng, n));
      const int b = static_cast<int>(uniform_index(rng, n));
      if (a != b)
        doc.road_edges.push_back({a, b, 1.0 + 9.0 * uniform01(rng)});
    }
    doc.pole_map.push_back({0, 0});
    doc.pole_map.push_back({1, 1});
    const Grid grid = build_grid(doc);
    for (int q = 0; q < 10; ++q) {
      const int a = static_cast<int>(uniform_index(rng, n));
      const int b = static_cast<int>(uniform_index(rng, n));
      const double expect =
          brute_shortest(doc.road_nodes, doc.road_edges, a, b);
      CHECK(grid.shortest_travel_time(a, b) == doctest::Approx(expect));
    }
  }
}

TEST_CASE("document json round trip") {
  GridGenParams params;
  params.circuits = 2;
  params.devices_per_circuit = 3;
  params.lines_per_circuit = 8;
  params.customers_per_circuit = 20;
  const GridDocument doc = generate_grid(params);
  const GridDocument back = GridDocument::from_json_text(doc.to_json_text());
  CHECK(back.to_json_text() == doc.to_json_text());
  build_grid(back);
}
