#pragma once

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "stormcrew/grid.hpp"
#include "stormcrew/storm.hpp"

namespace stormcrew {

struct RunConfig {
  double episode_cap_minutes = 2880.0;        // hard routing cap (48 h)
  double accounting_horizon_minutes = 2880.0; // outage integration window
  RoadId depot = -1;                          // -1: lowest road node id
  double epsilon_threshold = 0.01;            // candidate/stopping threshold
};

struct Observation {
  SegmentId segment = -1;
  double travel_minutes = 0.0;
  double dwell_minutes = 0.0;
  std::vector<std::pair<LineId, double>> repaired;  // line, repair minutes
  std::vector<LineId> found_clear;                  // members with no fault
  CallVector calls;                                 // revealed by this step
};

struct EpisodeMetrics {
  double outage_hours = 0.0;
  double restore_time_minutes = std::numeric_limits<double>::infinity();
  double stop_time_minutes = 0.0;
  int unrepaired_faults = 0;
  long long customers_out_at_stop = 0;
};

struct TraceDecision {
  double epoch_minutes = 0.0;  // when the decision was taken
  RoadId origin = -1;
  SegmentId destination = -1;
  int faults_found = 0;
  double dwell_minutes = 0.0;
};

struct PolicyTrace {
  std::vector<TraceDecision> decisions;
  double restore_time = std::numeric_limits<double>::infinity();
  double stop_time = 0.0;
};

// Executes decisions against the ground truth: advances the clock, repairs
// whatever the destination segment holds, restores customers whose chains
// came clear, reveals calls, and accrues the exact piecewise-constant
// customer-outage area.
class EpisodeEngine {
 public:
  EpisodeEngine(const Grid& grid, const ScenarioRealization& realization,
                const RunConfig& cfg);

  double clock() const { return clock_; }
  RoadId truck() const { return truck_; }
  const RunConfig& config() const { return cfg_; }
  const Grid& grid() const { return grid_; }
  const ScenarioRealization& realization() const { return realization_; }

  const CallVector& calls() const { return revealed_calls_; }
  // Calls whose customers are still in outage now; the belief conditions on
  // these (a restored caller's report is already explained by the repairs).
  CallVector live_calls() const;

  const std::set<SegmentId>& cleared_segments() const { return cleared_; }
  const std::set<LineId>& repaired_lines() const { return repaired_; }
  long long customers_out() const { return customers_out_; }
  bool all_faults_repaired() const {
    return repaired_.size() == realization_.faults.size();
  }
  int unrepaired_faults() const {
    return static_cast<int>(realization_.faults.size() - repaired_.size());
  }

  // Travel to the segment's pole, repair every faulted member line
  // (sequential dwell), close the device, restore whoever's chain is clear,
  // then reveal the calls that arrived during the step.
  Observation step(SegmentId destination);

  // Advance the clock without moving; reveals calls up to `minute`.
  void wait_until(double minute);

  // Next scheduled call strictly after the clock (ground truth), +inf if none.
  double next_call_minute() const;

  // Piecewise-constant outage trajectory: (start minute, customers out).
  const std::vector<std::pair<double, long long>>& outage_curve() const {
    return curve_;
  }
  double outage_area_minutes(double until_minute) const;

  EpisodeMetrics finish(double stop_minute) const;

 private:
  void reveal_calls(double until_minute);
  void recompute_outages();

  const Grid& grid_;
  const ScenarioRealization& realization_;
  RunConfig cfg_;

  double clock_ = 0.0;
  RoadId truck_ = -1;
  std::set<SegmentId> cleared_;
  std::set<LineId> repaired_;
  double last_repair_minute_ = std::numeric_limits<double>::infinity();

  std::map<NodeId, bool> node_out_;
  std::map<NodeId, double> node_restore_minute_;
  long long customers_out_ = 0;
  double reveal_cursor_ = 0.0;
  CallVector revealed_calls_;

  std::vector<std::pair<double, long long>> curve_;
};

// -1 resolves to the lowest road node id; anything else must exist.
RoadId resolve_depot(const Grid& grid, RoadId depot);

// A policy inspects the engine (clock, calls, cleared set) and either names
// the next destination segment or stops.
using PolicyFn = std::function<std::optional<SegmentId>(EpisodeEngine&)>;

struct EpisodeResult {
  EpisodeMetrics metrics;
  PolicyTrace trace;
};

EpisodeResult run_episode(const Grid& grid, const ScenarioRealization& realization,
                          const RunConfig& cfg, const PolicyFn& policy);

}  // namespace stormcrew
