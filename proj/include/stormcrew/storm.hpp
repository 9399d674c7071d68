#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stormcrew/grid.hpp"
#include "stormcrew/rng.hpp"

namespace stormcrew {

struct StormParams {
  std::vector<std::pair<double, double>> track;  // polyline in road coordinates
  double severity = 0.0;                         // peak fault probability
  double diameter = 1.0;                         // distance scale
  std::uint64_t seed = 0;
};

struct RepairClass {
  std::string name;
  double prob = 0.0;
  double lo_minutes = 0.0;
  double hi_minutes = 0.0;
  double mean() const { return 0.5 * (lo_minutes + hi_minutes); }
};

struct RepairModel {
  std::vector<RepairClass> classes;
  // Two-class mixture: "minor" U[20,40] w.p. 0.7, "major" U[60,180] w.p. 0.3.
  static RepairModel standard();
  double mean_minutes() const;
  void validate() const;
};

struct PriorVector {
  std::map<LineId, double> p_line;
  double at(LineId line) const;
};

// p(i) = severity * exp(-(dist(i, track)/diameter)^2), clamped to [0,1], where
// a line sits at the pole of the node it feeds. Deterministic.
PriorVector generate_priors(const Grid& grid, const StormParams& storm);

struct ScenarioRealization {
  struct Caller {
    NodeId node = -1;
    bool calls = false;     // true only if the customer is in outage
    double delay = 0.0;     // minutes after the outage begins
  };

  std::vector<LineId> faults;                  // ascending
  std::map<LineId, double> repair_minutes;     // defined exactly on faults
  double rho = 0.0;                            // call-in probability
  std::vector<Caller> customers;               // one entry per customer
  std::map<NodeId, bool> node_initially_out;   // under `faults`

  bool is_fault(LineId line) const;
  int flagged_callers() const;
};

ScenarioRealization realize_scenario(const Grid& grid, const PriorVector& priors,
                                     double rho, std::uint64_t seed,
                                     const RepairModel& repairs = RepairModel::standard());

// Cumulative lights-out calls per grid node (H_t).
struct CallVector {
  std::map<NodeId, int> counts;
  int total() const;
  int at(NodeId node) const;
  void add(const CallVector& increment);
};

struct OutageState {
  std::vector<NodeId> open_devices;   // across all circuits, sorted
  std::map<NodeId, bool> node_out;
  long long customers_out = 0;
};

// Opens the first upstream device of every fault and flags everything below.
OutageState propagate_outages(const Grid& grid, const std::vector<LineId>& faults);

// Calls that arrive in the window (t_from, t_to]: flagged callers whose node
// was still in outage at their scheduled call time. `node_restore_minute`
// gives, per node, the minute its power came back (+inf while still out);
// a customer whose node was restored before the scheduled call never calls.
// Windows are consumed disjointly by the engine, so no caller counts twice.
CallVector new_calls(const ScenarioRealization& realization, double t_from,
                     double t_to,
                     const std::map<NodeId, double>& node_restore_minute);

// Scenario config file payload: {storm, rho, seed, repair_classes}.
struct ScenarioConfig {
  StormParams storm;
  double rho = 0.1;
  std::uint64_t seed = 1;
  RepairModel repairs = RepairModel::standard();
  RoadId depot = -1;  // -1: lowest road node id

  static ScenarioConfig from_json_text(const std::string& text);
  static ScenarioConfig load(const std::string& path);
  std::string to_json_text() const;
};

// Debug rendering of a realization, one line per fault / calling node.
std::string describe_realization(const Grid& grid, const ScenarioRealization& r);

}  // namespace stormcrew
