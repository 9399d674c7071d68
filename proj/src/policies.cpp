#include "stormcrew/policies.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "stormcrew/lookahead.hpp"
#include "stormcrew/rollout.hpp"

namespace stormcrew {

namespace {

// Lines whose fault blacks out the given node, restricted to usable
// candidates (positive prior, not cleared).
std::vector<LineId> explaining_lines(const Circuit& c, NodeId node,
                                     const PriorVector& priors,
                                     const std::set<LineId>& cleared_lines) {
  std::vector<LineId> out;
  for (NodeId dev = c.upstream_device(node); dev != -1;
       dev = c.upstream_device(dev)) {
    if (!c.has_segment(dev)) continue;
    for (LineId line : c.segment_lines(dev)) {
      if (cleared_lines.count(line)) continue;
      if (priors.at(line) > 0.0) out.push_back(line);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

PriorVector effective_priors(const Grid& grid, const PriorVector& priors,
                             const CallVector& live_calls,
                             const std::set<SegmentId>& cleared,
                             double threshold) {
  PriorVector eff;
  for (const Circuit& c : grid.circuits()) {
    std::set<LineId> cleared_lines;
    for (SegmentId seg : cleared) {
      if (!c.has_node(seg)) continue;
      for (LineId line : c.segment_lines(seg)) cleared_lines.insert(line);
    }

    std::set<LineId> selected;
    for (NodeId id : c.node_ids()) {
      if (id == c.root() || cleared_lines.count(id)) continue;
      if (priors.at(id) >= threshold) selected.insert(id);
    }
    std::set<LineId> explainers;
    for (NodeId id : c.node_ids()) {
      if (live_calls.at(id) == 0) continue;
      const auto chain = explaining_lines(c, id, priors, cleared_lines);
      bool covered = false;
      for (LineId line : chain)
        if (selected.count(line)) {
          covered = true;
          break;
        }
      if (covered || chain.empty()) continue;
      LineId best = chain.front();
      for (LineId line : chain)
        if (priors.at(line) > priors.at(best)) best = line;
      selected.insert(best);
      explainers.insert(best);
    }

    if (static_cast<int>(selected.size()) > kMaxEnumLines) {
      std::vector<LineId> ranked(selected.begin(), selected.end());
      std::sort(ranked.begin(), ranked.end(), [&](LineId a, LineId b) {
        const bool ea = explainers.count(a), eb = explainers.count(b);
        if (ea != eb) return ea;
        const double pa = priors.at(a), pb = priors.at(b);
        if (pa != pb) return pa > pb;
        return a < b;
      });
      ranked.resize(kMaxEnumLines);
      selected = std::set<LineId>(ranked.begin(), ranked.end());
    }
    for (LineId line : selected) eff.p_line[line] = priors.at(line);
  }
  return eff;
}

}  // namespace

double effective_rho(double rho, double clock_minutes) {
  return rho * std::clamp(clock_minutes / 60.0, 0.0, 1.0);
}

BeliefState refresh_belief(const Grid& grid, const PriorVector& priors,
                           const CallVector& live_calls,
                           const std::set<SegmentId>& cleared,
                           double rho_effective, double candidate_threshold) {
  double threshold = candidate_threshold;
  for (int attempt = 0; attempt < 4; ++attempt) {
    const PriorVector eff =
        effective_priors(grid, priors, live_calls, cleared, threshold);
    try {
      return posterior_update(grid, eff, live_calls, cleared, rho_effective);
    } catch (const ZeroEvidence&) {
      threshold = attempt < 2 ? threshold * 0.1 : 0.0;
    }
  }
  // Give up on Bayes for this epoch; plan on the thresholded priors alone.
  const PriorVector eff =
      effective_priors(grid, priors, CallVector{}, cleared, candidate_threshold);
  BeliefState belief;
  belief.calls = live_calls;
  belief.cleared = cleared;
  belief.rho = rho_effective;
  for (LineId line : grid.all_lines()) belief.posterior[line] = eff.at(line);
  return belief;
}

EpisodeResult run_lookahead_policy(const Grid& grid, const PriorVector& priors,
                                   const ScenarioRealization& realization,
                                   const RunConfig& run_cfg,
                                   const MctsConfig& mcts_cfg,
                                   const RepairModel& repairs) {
  int epoch = 0;
  const PolicyFn policy = [&](EpisodeEngine& eng) -> std::optional<SegmentId> {
    const double rho_eff = effective_rho(realization.rho, eng.clock());
    const BeliefState belief =
        refresh_belief(grid, priors, eng.live_calls(), eng.cleared_segments(),
                       rho_eff, run_cfg.epsilon_threshold);
    const auto cands =
        candidate_segments(grid, belief, run_cfg.epsilon_threshold);
    if (cands.empty()) return std::nullopt;  // stopping rule

    MctsConfig cfg = mcts_cfg;
    cfg.seed = mix_seed(mcts_cfg.seed, 9000 + epoch);
    ++epoch;
    const auto decision = choose_next_segment(
        grid, belief, eng.truck(), cfg, repairs, run_cfg.epsilon_threshold);
    return decision.segment;
  };
  return run_episode(grid, realization, run_cfg, policy);
}

namespace {

NodeId circuit_lca(const Circuit& c, const std::vector<NodeId>& nodes) {
  auto depth = [&](NodeId id) {
    int d = 0;
    for (NodeId cur = id; c.parent(cur) != -1; cur = c.parent(cur)) ++d;
    return d;
  };
  NodeId acc = nodes.front();
  int acc_depth = depth(acc);
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    NodeId other = nodes[i];
    int other_depth = depth(other);
    while (acc_depth > other_depth) {
      acc = c.parent(acc);
      --acc_depth;
    }
    while (other_depth > acc_depth) {
      other = c.parent(other);
      --other_depth;
    }
    while (acc != other) {
      acc = c.parent(acc);
      other = c.parent(other);
      --acc_depth;
    }
  }
  return acc;
}

void append_unique(std::vector<SegmentId>& plan, const std::set<SegmentId>& visited,
                   std::set<SegmentId>& planned, SegmentId seg) {
  if (visited.count(seg) || planned.count(seg)) return;
  planned.insert(seg);
  plan.push_back(seg);
}

}  // namespace

std::vector<SegmentId> escalation_plan(const Grid& grid, const CallVector& calls,
                                       const std::set<SegmentId>& visited,
                                       RoadId truck_at) {
  std::vector<SegmentId> plan;
  std::set<SegmentId> planned;

  for (const Circuit& c : grid.circuits()) {
    std::vector<NodeId> call_nodes;
    for (NodeId id : c.node_ids())
      if (calls.at(id) > 0) call_nodes.push_back(id);
    if (call_nodes.empty()) continue;

    const NodeId x = circuit_lca(c, call_nodes);
    const std::set<SegmentId> segments(
        [&] {
          auto ids = c.segment_ids();
          return std::set<SegmentId>(ids.begin(), ids.end());
        }());

    // Step 1: visit x, then back-trace device segments up to the substation.
    std::vector<NodeId> up_chain;  // device keys from x upward
    if (x == c.root()) {
      up_chain.push_back(c.root());
    } else {
      NodeId dev = c.upstream_device(x);
      up_chain.push_back(dev);
      while (dev != c.root()) {
        dev = c.upstream_device(dev);
        up_chain.push_back(dev);
      }
    }
    for (NodeId dev : up_chain)
      if (segments.count(dev)) append_unique(plan, visited, planned, dev);

    // Step 2: down-trace from x through every calling location. Needed
    // devices key the segments on the x-to-caller paths.
    std::set<NodeId> needed;
    for (NodeId k : call_nodes) {
      for (NodeId dev = c.upstream_device(k); dev != -1;
           dev = c.upstream_device(dev)) {
        const bool under_x = dev == x || c.is_strict_ancestor(x, dev);
        if (under_x && segments.count(dev)) needed.insert(dev);
      }
    }

    // Depth-first over the needed devices, nearest sibling (by travel time
    // from the branch point) first.
    std::map<NodeId, std::vector<NodeId>> kids;
    std::vector<NodeId> roots;
    for (NodeId dev : needed) {
      NodeId up = c.upstream_device(dev);
      while (up != -1 && !needed.count(up)) up = c.upstream_device(up);
      if (up == -1)
        roots.push_back(dev);
      else
        kids[up].push_back(dev);
    }
    auto travel_from = [&](RoadId from, NodeId dev) {
      return grid.shortest_travel_time(from, grid.segment_pole(dev));
    };
    auto order_siblings = [&](std::vector<NodeId>& sibs, RoadId from) {
      std::sort(sibs.begin(), sibs.end(), [&](NodeId a, NodeId b) {
        const double ta = travel_from(from, a), tb = travel_from(from, b);
        if (ta != tb) return ta < tb;
        return a < b;
      });
    };
    order_siblings(roots, truck_at);
    std::vector<NodeId> stack(roots.rbegin(), roots.rend());
    while (!stack.empty()) {
      const NodeId dev = stack.back();
      stack.pop_back();
      append_unique(plan, visited, planned, dev);
      auto it = kids.find(dev);
      if (it == kids.end()) continue;
      order_siblings(it->second, grid.segment_pole(dev));
      for (auto rit = it->second.rbegin(); rit != it->second.rend(); ++rit)
        stack.push_back(*rit);
    }
  }
  return plan;
}

EpisodeResult run_escalation_policy(const Grid& grid,
                                    const ScenarioRealization& realization,
                                    const RunConfig& run_cfg) {
  const PolicyFn policy = [&](EpisodeEngine& eng) -> std::optional<SegmentId> {
    for (;;) {
      const auto plan = escalation_plan(grid, eng.calls(),
                                        eng.cleared_segments(), eng.truck());
      if (!plan.empty()) return plan.front();
      const double next = eng.next_call_minute();
      if (next >= run_cfg.episode_cap_minutes) {
        // Hold for new calls until the routing cap, then stand down.
        eng.wait_until(run_cfg.episode_cap_minutes);
        return std::nullopt;
      }
      eng.wait_until(next);
    }
  };
  return run_episode(grid, realization, run_cfg, policy);
}

EpisodeResult posterior_optimal_value(const Grid& grid,
                                      const ScenarioRealization& realization,
                                      const RunConfig& run_cfg) {
  const RoadId depot = resolve_depot(grid, run_cfg.depot);
  const SamplePath path =
      make_sample_path(grid, depot, realization.repair_minutes);
  const TourValue tv = static_cast<int>(path.stops.size()) <= kMaxDpStops
                           ? optimal_tour_dp(grid, path)
                           : heuristic_tour(grid, path);

  std::size_t next = 0;
  const PolicyFn policy = [&](EpisodeEngine&) -> std::optional<SegmentId> {
    if (next >= tv.tour.size()) return std::nullopt;
    return tv.tour[next++];
  };
  RunConfig cfg = run_cfg;
  cfg.episode_cap_minutes = std::numeric_limits<double>::infinity();
  return run_episode(grid, realization, cfg, policy);
}

}  // namespace stormcrew
