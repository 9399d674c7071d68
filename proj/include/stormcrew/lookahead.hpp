#pragma once

#include <string>
#include <vector>

#include "stormcrew/belief.hpp"
#include "stormcrew/grid.hpp"
#include "stormcrew/mcts.hpp"
#include "stormcrew/rollout.hpp"

namespace stormcrew {

// A node of the lookahead: truck position, minutes since the lookahead root,
// and the segments repaired inside the tree. The belief stays frozen to the
// root's calls; in-tree clearing only pins segment posteriors to zero.
struct LookaheadState {
  RoadId truck = -1;
  double elapsed = 0.0;
  std::vector<SegmentId> cleared;  // sorted
  double expected_out = 0.0;       // cached expected customers in outage
  const CallVector* root_calls = nullptr;
};

// Production model for MctsSearch. Actions are candidate destination
// segments (k nearest by travel time); outcomes enumerate {no fault} and
// {fault x repair class}; leaf values come from the optimistic sample-path
// solver in rollout.
class GridLookaheadModel {
 public:
  using State = LookaheadState;

  GridLookaheadModel(const Grid& grid, const BeliefState& root_belief,
                     const MctsConfig& cfg, const RepairModel& repairs,
                     double candidate_threshold);

  State make_root(RoadId truck) const;

  bool is_terminal(const State& s) const;
  std::vector<int> actions(const State& s) const;
  std::vector<Outcome> outcomes(const State& s, int action) const;
  State transition(const State& s, int action, int outcome_id) const;
  double leg_cost(const State& s, int action, int outcome_id) const;
  double rollout(const State& s, Rng& rng) const;

  // P(at least one member line of the segment is faulted).
  double segment_fault_prob(const State& s, SegmentId segment) const;
  const std::vector<SegmentRef>& root_candidates() const { return candidates_; }

 private:
  double outcome_duration(const State& s, int action, int outcome_id) const;

  const Grid& grid_;
  const BeliefState& belief_;
  MctsConfig cfg_;
  RepairModel repairs_;
  std::vector<SegmentRef> candidates_;  // ascending segment id
};

struct LookaheadDecision {
  SegmentId segment = -1;
  double root_value = 0.0;
  std::string tree_dump;  // filled when requested
};

// One full search from the current state; deterministic given cfg.seed.
LookaheadDecision choose_next_segment(const Grid& grid, const BeliefState& belief,
                                      RoadId truck, const MctsConfig& cfg,
                                      const RepairModel& repairs,
                                      double candidate_threshold,
                                      bool want_tree_dump = false);

}  // namespace stormcrew
