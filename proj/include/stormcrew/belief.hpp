#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stormcrew/grid.hpp"
#include "stormcrew/storm.hpp"

namespace stormcrew {

// Exact enumeration cap per circuit: 2^20 fault combinations.
inline constexpr int kMaxEnumLines = 20;

// Posterior fault probabilities conditioned on the cumulative calls and on the
// truck's trajectory. Lines of visited segments are pinned to zero: a visit
// either repaired the fault or observed its absence.
struct BeliefState {
  std::map<LineId, double> posterior;
  CallVector calls;
  std::set<SegmentId> cleared;
  double rho = 0.0;

  double posterior_at(LineId line) const;
};

// One assignment of faults over a circuit's candidate lines.
struct FaultCombination {
  std::vector<LineId> candidates;  // ascending line ids
  std::uint32_t mask = 0;          // bit k set -> candidates[k] faulted

  std::vector<LineId> faulted() const;
};

// p(H | L = combo) under the independent-caller model: every customer in
// outage calls with probability rho (exactly once), powered customers never
// call. Returns a probability in [0,1].
double call_likelihood(const Grid& grid, int circuit_id, const CallVector& calls,
                       const FaultCombination& combo, double rho);

// Exact per-circuit posterior by enumeration over candidate lines (prior > 0
// and not cleared). Throws TooManyCandidates past kMaxEnumLines and
// ZeroEvidence when no combination explains the calls.
BeliefState posterior_update(const Grid& grid, const PriorVector& priors,
                             const CallVector& calls,
                             const std::set<SegmentId>& cleared, double rho);

// Expected customers in outage under independent per-line marginals:
//   sum over segments s of (1 - prod_{k in Q_s} (1 - p_k)) * customers(s).
double expected_customers_out(const Grid& grid, const BeliefState& belief);

// Same, with the posteriors of `extra_cleared` segments forced to zero; the
// lookahead search uses this instead of copying whole belief states.
double expected_customers_out_masked(const Grid& grid, const BeliefState& belief,
                                     const std::vector<SegmentId>& extra_cleared);

struct SegmentRef {
  int circuit_id = -1;
  SegmentId segment = -1;
  double posterior = 0.0;  // max over member lines
};

// Segments whose maximum member-line posterior reaches the threshold, sorted
// by descending posterior, ties by ascending segment id.
std::vector<SegmentRef> candidate_segments(const Grid& grid,
                                           const BeliefState& belief,
                                           double threshold);

// Per-line table for the `inspect-belief` subcommand.
std::string describe_belief(const Grid& grid, const PriorVector& priors,
                            const BeliefState& belief);

}  // namespace stormcrew
