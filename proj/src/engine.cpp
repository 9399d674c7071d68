#include "stormcrew/engine.hpp"

#include <algorithm>
#include <cmath>

namespace stormcrew {

RoadId resolve_depot(const Grid& grid, RoadId depot) {
  if (depot >= 0) {
    if (!grid.road().has_node(depot))
      throw UnreachableDestination("depot road node " + std::to_string(depot) +
                                   " does not exist");
    return depot;
  }
  return *std::min_element(grid.road().node_ids().begin(),
                           grid.road().node_ids().end());
}

EpisodeEngine::EpisodeEngine(const Grid& grid,
                             const ScenarioRealization& realization,
                             const RunConfig& cfg)
    : grid_(grid), realization_(realization), cfg_(cfg) {
  truck_ = resolve_depot(grid, cfg.depot);
  recompute_outages();
  curve_.emplace_back(0.0, customers_out_);
  if (realization_.faults.empty())
    last_repair_minute_ = 0.0;
}

void EpisodeEngine::recompute_outages() {
  std::vector<LineId> remaining;
  for (LineId f : realization_.faults)
    if (!repaired_.count(f)) remaining.push_back(f);
  const OutageState state = propagate_outages(grid_, remaining);

  for (const auto& [node, out] : state.node_out) {
    const bool was_out = node_out_.count(node) ? node_out_.at(node) : false;
    if (was_out && !out) node_restore_minute_[node] = clock_;
    node_out_[node] = out;
  }
  customers_out_ = state.customers_out;
}

void EpisodeEngine::reveal_calls(double until_minute) {
  if (until_minute <= reveal_cursor_) return;
  const CallVector inc = new_calls(realization_, reveal_cursor_, until_minute,
                                   node_restore_minute_);
  revealed_calls_.add(inc);
  reveal_cursor_ = until_minute;
}

CallVector EpisodeEngine::live_calls() const {
  CallVector live;
  for (const auto& caller : realization_.customers) {
    if (!caller.calls || caller.delay > reveal_cursor_) continue;
    auto it = node_restore_minute_.find(caller.node);
    const double restored = it == node_restore_minute_.end()
                                ? std::numeric_limits<double>::infinity()
                                : it->second;
    if (restored < caller.delay) continue;  // never called
    if (!node_out_.at(caller.node)) continue;  // restored since; explained
    live.counts[caller.node] += 1;
  }
  return live;
}

Observation EpisodeEngine::step(SegmentId destination) {
  const Circuit& c = grid_.circuit_of(destination);
  if (!c.is_device(destination))
    throw UnreachableDestination("segment " + std::to_string(destination) +
                                 " is not headed by a protective device");
  const RoadId pole = grid_.segment_pole(destination);
  const double travel = grid_.shortest_travel_time(truck_, pole);

  Observation obs;
  obs.segment = destination;
  obs.travel_minutes = travel;
  for (LineId line : c.segment_lines(destination)) {
    if (realization_.is_fault(line) && !repaired_.count(line)) {
      const double minutes = realization_.repair_minutes.at(line);
      obs.repaired.emplace_back(line, minutes);
      obs.dwell_minutes += minutes;
    } else {
      obs.found_clear.push_back(line);
    }
  }

  // Customers stay at the pre-step level for the whole transition; the
  // device recloses only after every member repair is done.
  clock_ += travel + obs.dwell_minutes;
  truck_ = pole;
  cleared_.insert(destination);
  for (const auto& [line, minutes] : obs.repaired) repaired_.insert(line);
  if (!obs.repaired.empty()) {
    recompute_outages();
    if (all_faults_repaired() &&
        last_repair_minute_ == std::numeric_limits<double>::infinity())
      last_repair_minute_ = clock_;
    if (curve_.back().second != customers_out_)
      curve_.emplace_back(clock_, customers_out_);
  }

  reveal_calls(clock_);
  obs.calls = revealed_calls_;  // cumulative view after the step
  return obs;
}

void EpisodeEngine::wait_until(double minute) {
  if (minute <= clock_) return;
  clock_ = minute;
  reveal_calls(clock_);
}

double EpisodeEngine::next_call_minute() const {
  double next = std::numeric_limits<double>::infinity();
  for (const auto& caller : realization_.customers) {
    if (!caller.calls || caller.delay <= reveal_cursor_) continue;
    auto it = node_restore_minute_.find(caller.node);
    const double restored = it == node_restore_minute_.end()
                                ? std::numeric_limits<double>::infinity()
                                : it->second;
    if (restored < caller.delay) continue;
    next = std::min(next, caller.delay);
  }
  return next;
}

double EpisodeEngine::outage_area_minutes(double until_minute) const {
  double area = 0.0;
  for (std::size_t i = 0; i < curve_.size(); ++i) {
    const double t0 = std::min(curve_[i].first, until_minute);
    const double t1 = std::min(
        i + 1 < curve_.size() ? curve_[i + 1].first : until_minute, until_minute);
    if (t1 > t0) area += static_cast<double>(curve_[i].second) * (t1 - t0);
  }
  return area;
}

EpisodeMetrics EpisodeEngine::finish(double stop_minute) const {
  EpisodeMetrics m;
  m.outage_hours = outage_area_minutes(cfg_.accounting_horizon_minutes) / 60.0;
  m.restore_time_minutes = last_repair_minute_;
  m.stop_time_minutes = stop_minute;
  m.unrepaired_faults = unrepaired_faults();
  m.customers_out_at_stop = customers_out_;
  return m;
}

EpisodeResult run_episode(const Grid& grid, const ScenarioRealization& realization,
                          const RunConfig& cfg, const PolicyFn& policy) {
  EpisodeEngine engine(grid, realization, cfg);
  PolicyTrace trace;
  while (engine.clock() < cfg.episode_cap_minutes) {
    const auto action = policy(engine);
    if (!action) break;
    TraceDecision d;
    d.epoch_minutes = engine.clock();
    d.origin = engine.truck();
    d.destination = *action;
    const Observation obs = engine.step(*action);
    d.faults_found = static_cast<int>(obs.repaired.size());
    d.dwell_minutes = obs.dwell_minutes;
    trace.decisions.push_back(d);
  }
  trace.stop_time = engine.clock();
  EpisodeResult result;
  result.metrics = engine.finish(engine.clock());
  trace.restore_time = result.metrics.restore_time_minutes;
  result.trace = trace;
  return result;
}

}  // namespace stormcrew
