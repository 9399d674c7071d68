#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "stormcrew/storm.hpp"
#include "test_support.hpp"

using namespace stormcrew;
using namespace sctest;

namespace {

// Chain grid whose poles sit at x = 1, 2, ..., n on the y = 0 axis.
Grid chain_grid(int n, int customers) {
  return build_grid(chain_doc(n, {}, customers));
}

PriorVector flat_priors(const Grid& grid, double p) {
  PriorVector priors;
  for (LineId line : grid.all_lines()) priors.p_line[line] = p;
  return priors;
}

}  // namespace

TEST_CASE("null storm gives zero priors") {
  const Grid grid = chain_grid(5, 2);
  StormParams storm;
  storm.track = {{0.0, 0.0}, {10.0, 0.0}};
  storm.severity = 0.0;
  storm.diameter = 2.0;
  const PriorVector priors = generate_priors(grid, storm);
  for (const auto& [line, p] : priors.p_line) CHECK(p == 0.0);
}

TEST_CASE("line on the track takes the peak prior") {
  const Grid grid = chain_grid(5, 2);
  StormParams storm;
  storm.track = {{0.0, 0.0}, {10.0, 0.0}};  // passes over every pole
  storm.severity = 0.765;
  storm.diameter = 2.0;
  const PriorVector priors = generate_priors(grid, storm);
  for (const auto& [line, p] : priors.p_line)
    CHECK(p == doctest::Approx(0.765));
}

TEST_CASE("gaussian falloff at one diameter") {
  const Grid grid = chain_grid(3, 2);
  StormParams storm;
  storm.track = {{0.0, 3.0}, {10.0, 3.0}};  // 3 units above the poles
  storm.severity = 0.4;
  storm.diameter = 3.0;
  const PriorVector priors = generate_priors(grid, storm);
  for (const auto& [line, p] : priors.p_line)
    CHECK(p == doctest::Approx(0.4 * std::exp(-1.0)));
}

TEST_CASE("zero priors realize to nothing") {
  const Grid grid = chain_grid(6, 3);
  const auto r = realize_scenario(grid, flat_priors(grid, 0.0), 1.0, 99);
  CHECK(r.faults.empty());
  CHECK(r.flagged_callers() == 0);
  CHECK(r.repair_minutes.empty());
}

TEST_CASE("certain damage: every line faults and every customer calls") {
  const Grid grid = chain_grid(6, 3);
  const auto r = realize_scenario(grid, flat_priors(grid, 1.0), 1.0, 99);
  CHECK(static_cast<int>(r.faults.size()) == grid.total_lines());
  CHECK(r.flagged_callers() == grid.total_customers());
  for (LineId f : r.faults) {
    const double minutes = r.repair_minutes.at(f);
    const bool minor = minutes >= 20.0 && minutes <= 40.0;
    const bool major = minutes >= 60.0 && minutes <= 180.0;
    CHECK((minor || major));
  }
}

TEST_CASE("fault frequency matches the prior") {
  const Grid grid = chain_grid(10, 1);
  const PriorVector priors = flat_priors(grid, 0.3);
  const int trials = 100000;
  std::map<LineId, int> hits;
  for (int s = 0; s < trials; ++s) {
    const auto r = realize_scenario(grid, priors, 0.0, 1000 + s);
    for (LineId f : r.faults) hits[f] += 1;
  }
  const double se = std::sqrt(0.3 * 0.7 / trials);
  for (LineId line : grid.all_lines()) {
    const double freq = static_cast<double>(hits[line]) / trials;
    CHECK(std::abs(freq - 0.3) < 3.0 * se);
  }
}

TEST_CASE("determinism: identical seeds give identical realizations") {
  const Grid grid = chain_grid(12, 2);
  const PriorVector priors = flat_priors(grid, 0.4);
  const auto a = realize_scenario(grid, priors, 0.5, 77);
  const auto b = realize_scenario(grid, priors, 0.5, 77);
  CHECK(a.faults == b.faults);
  CHECK(a.repair_minutes == b.repair_minutes);
  REQUIRE(a.customers.size() == b.customers.size());
  for (std::size_t i = 0; i < a.customers.size(); ++i) {
    CHECK(a.customers[i].calls == b.customers[i].calls);
    CHECK(a.customers[i].delay == b.customers[i].delay);
  }
}

TEST_CASE("caller set grows monotonically with rho under coupled seeds") {
  const Grid grid = chain_grid(12, 3);
  const PriorVector priors = flat_priors(grid, 0.4);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto lo = realize_scenario(grid, priors, 0.2, seed);
    const auto hi = realize_scenario(grid, priors, 0.7, seed);
    REQUIRE(lo.customers.size() == hi.customers.size());
    CHECK(lo.faults == hi.faults);
    for (std::size_t i = 0; i < lo.customers.size(); ++i)
      if (lo.customers[i].calls) CHECK(hi.customers[i].calls);
  }
}

TEST_CASE("no phantom calls") {
  const Grid grid = chain_grid(12, 3);
  Rng rng(5);
  for (int t = 0; t < 30; ++t) {
    PriorVector priors;
    for (LineId line : grid.all_lines())
      priors.p_line[line] = uniform01(rng) < 0.5 ? 0.5 : 0.0;
    const auto r = realize_scenario(grid, priors, 1.0, 100 + t);
    for (const auto& caller : r.customers) {
      if (!caller.calls) continue;
      CHECK(r.node_initially_out.at(caller.node));
    }
  }
}

TEST_CASE("propagation flags agree with affected_customers on random sets") {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    const auto nodes = random_circuit_nodes(14, 0.3, 4, rng);
    const Grid grid = build_grid(doc_from_nodes(nodes));
    const Circuit& c = grid.circuits().front();
    for (int k = 0; k < 10; ++k) {
      std::vector<LineId> faults;
      for (NodeId id : c.node_ids()) {
        if (id == c.root()) continue;
        if (uniform01(rng) < 0.3) faults.push_back(id);
      }
      const OutageState state = propagate_outages(grid, faults);
      long long flagged = 0;
      for (const auto& [node, out] : state.node_out)
        if (out) flagged += c.customers(node);
      CHECK(flagged == state.customers_out);
      CHECK(state.customers_out == grid.affected_customers(faults));
    }
  }
}

TEST_CASE("open device of a single fault is its upstream device") {
  const Grid grid = build_grid(chain_doc(3, {2}, 4));
  const auto state = propagate_outages(grid, {3});
  CHECK(state.open_devices == std::vector<NodeId>{2});
  CHECK(state.customers_out == 4);  // node 3 only
}

TEST_CASE("calls arrive once, in their window, unless restored first") {
  const Grid grid = chain_grid(4, 5);
  const auto r = realize_scenario(grid, flat_priors(grid, 1.0), 1.0, 3);
  std::map<NodeId, double> no_restores;

  const CallVector first = new_calls(r, 0.0, 30.0, no_restores);
  const CallVector second = new_calls(r, 30.0, 60.0, no_restores);
  CHECK(first.total() + second.total() == r.flagged_callers());

  // Everyone restored at minute 10: calls scheduled later never happen.
  std::map<NodeId, double> early;
  for (const auto& caller : r.customers) early[caller.node] = 10.0;
  const CallVector after = new_calls(r, 10.0, 60.0, early);
  CHECK(after.total() == 0);
}

TEST_CASE("rho zero: no calls ever") {
  const Grid grid = chain_grid(6, 4);
  const auto r = realize_scenario(grid, flat_priors(grid, 1.0), 0.0, 11);
  CHECK(r.flagged_callers() == 0);
  std::map<NodeId, double> none;
  CHECK(new_calls(r, 0.0, 10000.0, none).total() == 0);
}

TEST_CASE("scenario config round trip") {
  ScenarioConfig cfg;
  cfg.storm.track = {{1.0, 2.0}, {3.0, 4.0}};
  cfg.storm.severity = 0.5;
  cfg.storm.diameter = 7.0;
  cfg.rho = 0.1;
  cfg.seed = 123;
  const ScenarioConfig back = ScenarioConfig::from_json_text(cfg.to_json_text());
  CHECK(back.rho == cfg.rho);
  CHECK(back.seed == cfg.seed);
  CHECK(back.storm.severity == cfg.storm.severity);
  CHECK(back.storm.track == cfg.storm.track);
  CHECK(back.repairs.classes.size() == 2);
}
