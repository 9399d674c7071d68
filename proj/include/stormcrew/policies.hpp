#pragma once

#include <set>
#include <vector>

#include "stormcrew/belief.hpp"
#include "stormcrew/engine.hpp"
#include "stormcrew/grid.hpp"
#include "stormcrew/mcts.hpp"
#include "stormcrew/storm.hpp"

namespace stormcrew {

// Builds the effective belief a policy plans with. Priors below the candidate
// threshold are dropped to keep the per-circuit enumeration small, except
// that every calling node keeps its best explaining line; candidate sets are
// capped at the enumeration limit by descending prior. Inconsistent evidence
// retries with a lower threshold instead of failing the episode.
BeliefState refresh_belief(const Grid& grid, const PriorVector& priors,
                           const CallVector& live_calls,
                           const std::set<SegmentId>& cleared,
                           double rho_effective, double candidate_threshold);

// MCTS lookahead policy: refresh the belief at each decision epoch, stop when
// every segment posterior falls below the threshold, otherwise execute the
// search's segment choice.
EpisodeResult run_lookahead_policy(const Grid& grid, const PriorVector& priors,
                                   const ScenarioRealization& realization,
                                   const RunConfig& run_cfg,
                                   const MctsConfig& mcts_cfg,
                                   const RepairModel& repairs);

// Industry escalation heuristic: per circuit with calls, visit the first
// common ancestor of the call locations, sweep upstream to the substation,
// then trace downstream through every calling segment. Call-blind segments
// are never visited; the truck holds for new calls until the routing cap.
EpisodeResult run_escalation_policy(const Grid& grid,
                                    const ScenarioRealization& realization,
                                    const RunConfig& run_cfg);

// Optimal tour after revealing the true faults (lower bound): subset DP from
// the depot, replayed through the engine for exact shared accounting.
EpisodeResult posterior_optimal_value(const Grid& grid,
                                      const ScenarioRealization& realization,
                                      const RunConfig& run_cfg);

// Ordered segment visit list the escalation policy derives from the current
// call log; exposed for tests.
std::vector<SegmentId> escalation_plan(const Grid& grid, const CallVector& calls,
                                       const std::set<SegmentId>& visited,
                                       RoadId truck_at);

// Effective call-in probability at episode minute t: callers draw their delay
// uniformly over the first hour of an outage, so evidence ramps in linearly.
double effective_rho(double rho, double clock_minutes);

}  // namespace stormcrew
