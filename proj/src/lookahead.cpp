#include "stormcrew/lookahead.hpp"

#include <algorithm>
#include <cmath>

namespace stormcrew {

GridLookaheadModel::GridLookaheadModel(const Grid& grid,
                                       const BeliefState& root_belief,
                                       const MctsConfig& cfg,
                                       const RepairModel& repairs,
                                       double candidate_threshold)
    : grid_(grid), belief_(root_belief), cfg_(cfg), repairs_(repairs) {
  candidates_ = candidate_segments(grid, root_belief, candidate_threshold);
  std::sort(candidates_.begin(), candidates_.end(),
            [](const SegmentRef& a, const SegmentRef& b) {
              return a.segment < b.segment;
            });
}

GridLookaheadModel::State GridLookaheadModel::make_root(RoadId truck) const {
  State s;
  s.truck = truck;
  s.elapsed = 0.0;
  s.expected_out = expected_customers_out(grid_, belief_);
  s.root_calls = &belief_.calls;
  return s;
}

bool GridLookaheadModel::is_terminal(const State& s) const {
  if (s.elapsed >= cfg_.horizon_minutes - 1e-9) return true;
  for (const auto& c : candidates_)
    if (!std::binary_search(s.cleared.begin(), s.cleared.end(), c.segment))
      return false;
  return true;
}

std::vector<int> GridLookaheadModel::actions(const State& s) const {
  struct Option {
    SegmentId segment;
    double travel;
  };
  std::vector<Option> options;
  for (const auto& c : candidates_) {
    if (std::binary_search(s.cleared.begin(), s.cleared.end(), c.segment))
      continue;
    options.push_back(
        {c.segment, grid_.shortest_travel_time(s.truck, grid_.segment_pole(c.segment))});
  }
  std::sort(options.begin(), options.end(), [](const Option& a, const Option& b) {
    if (a.travel != b.travel) return a.travel < b.travel;
    return a.segment < b.segment;
  });
  if (static_cast<int>(options.size()) > cfg_.k_actions)
    options.resize(cfg_.k_actions);
  std::vector<int> out;
  out.reserve(options.size());
  for (const auto& o : options) out.push_back(o.segment);
  std::sort(out.begin(), out.end());
  return out;
}

double GridLookaheadModel::segment_fault_prob(const State& s,
                                              SegmentId segment) const {
  if (std::binary_search(s.cleared.begin(), s.cleared.end(), segment)) return 0.0;
  const Circuit& c = grid_.circuit_of(segment);
  double no_fault = 1.0;
  for (LineId line : c.segment_lines(segment))
    no_fault *= 1.0 - belief_.posterior_at(line);
  return 1.0 - no_fault;
}

std::vector<Outcome> GridLookaheadModel::outcomes(const State& s,
                                                  int action) const {
  const double q = segment_fault_prob(s, action);
  std::vector<Outcome> out;
  if (q < 1.0) out.push_back({0, 1.0 - q});
  if (q > 0.0) {
    for (std::size_t k = 0; k < repairs_.classes.size(); ++k) {
      const double p = q * repairs_.classes[k].prob;
      if (p > 0.0) out.push_back({static_cast<int>(k) + 1, p});
    }
  }
  return out;
}

double GridLookaheadModel::outcome_duration(const State& s, int action,
                                            int outcome_id) const {
  const double travel =
      grid_.shortest_travel_time(s.truck, grid_.segment_pole(action));
  if (outcome_id == 0) return travel;
  return travel + repairs_.classes[outcome_id - 1].mean();
}

GridLookaheadModel::State GridLookaheadModel::transition(const State& s,
                                                         int action,
                                                         int outcome_id) const {
  State child;
  child.truck = grid_.segment_pole(action);
  child.elapsed = std::min(s.elapsed + outcome_duration(s, action, outcome_id),
                           cfg_.horizon_minutes);
  child.cleared = s.cleared;
  child.cleared.insert(
      std::lower_bound(child.cleared.begin(), child.cleared.end(), action),
      action);
  child.expected_out = expected_customers_out_masked(grid_, belief_, child.cleared);
  child.root_calls = s.root_calls;
  return child;
}

double GridLookaheadModel::leg_cost(const State& s, int action,
                                    int outcome_id) const {
  const double tau = outcome_duration(s, action, outcome_id);
  const double charged = std::min(tau, cfg_.horizon_minutes - s.elapsed);
  return s.expected_out * std::max(charged, 0.0);
}

double GridLookaheadModel::rollout(const State& s, Rng& rng) const {
  if (is_terminal(s)) return 0.0;  // horizon truncation
  return rollout_value(grid_, belief_, s.cleared, s.truck, rng, repairs_);
}

LookaheadDecision choose_next_segment(const Grid& grid, const BeliefState& belief,
                                      RoadId truck, const MctsConfig& cfg,
                                      const RepairModel& repairs,
                                      double candidate_threshold,
                                      bool want_tree_dump) {
  GridLookaheadModel model(grid, belief, cfg, repairs, candidate_threshold);
  MctsSearch<GridLookaheadModel> search(model, model.make_root(truck), cfg);
  const auto decision = search.run();
  LookaheadDecision out;
  out.segment = decision.action;
  out.root_value = decision.value;
  if (want_tree_dump) out.tree_dump = search.dump();
  return out;
}

}  // namespace stormcrew
