#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "stormcrew/belief.hpp"
#include "stormcrew/grid.hpp"
#include "stormcrew/rng.hpp"
#include "stormcrew/storm.hpp"

namespace stormcrew {

// Exact subset DP handles at most this many stops; callers fall back to the
// heuristic beyond it.
inline constexpr int kMaxDpStops = 15;

// One truck stop of a sampled world: a segment holding at least one fault.
struct SampleStop {
  SegmentId segment = -1;
  int circuit_id = -1;
  RoadId pole = -1;
  double repair_minutes = 0.0;     // total dwell, sequential member repairs
  std::vector<LineId> faults;      // faulted member lines
};

struct SamplePath {
  RoadId start = -1;
  std::vector<SampleStop> stops;            // ascending segment id
  std::vector<std::vector<double>> travel;  // (n+1)^2, index 0 = start

  std::vector<LineId> all_faults() const;
  int stop_index(SegmentId segment) const;  // -1 if absent
};

// Groups faulted lines into stops and freezes the travel-time matrix.
SamplePath make_sample_path(const Grid& grid, RoadId start,
                            const std::map<LineId, double>& fault_repairs);

// Samples a world from the belief: every line with positive posterior faults
// independently, repair times from the repair-class mixture. Segments in
// `extra_cleared` are treated as already repaired.
SamplePath draw_sample_path(const Grid& grid, const BeliefState& belief,
                            RoadId start, std::uint64_t seed,
                            const RepairModel& repairs = RepairModel::standard(),
                            const std::vector<SegmentId>& extra_cleared = {});

struct TourValue {
  double outage_minutes = 0.0;
  std::vector<SegmentId> tour;  // visit order over stops
};

// Customer outage-minutes of visiting the stops in the given order: each leg
// charges the customers still out before its repair completes, times the
// leg's travel plus repair time.
double tour_cost(const Grid& grid, const SamplePath& path,
                 const std::vector<SegmentId>& order);

// Held-Karp subset DP; exact minimum over all visit orders. Throws
// TooManyFaults past kMaxDpStops.
TourValue optimal_tour_dp(const Grid& grid, const SamplePath& path);

// Greedy best customers-restored-per-minute construction followed by 2-opt
// under tour_cost. Any number of stops.
TourValue heuristic_tour(const Grid& grid, const SamplePath& path);

// Value of one sampled future solved with full foresight: DP when the sample
// is small enough, heuristic otherwise. The building block behind
// sim_policy_value and the leaf evaluations of the search.
double rollout_value(const Grid& grid, const BeliefState& belief,
                     const std::vector<SegmentId>& extra_cleared, RoadId truck,
                     Rng& rng, const RepairModel& repairs);

// Optimistic cost-to-go estimate of a lookahead state (seeded wrapper).
double sim_policy_value(const Grid& grid, const BeliefState& belief,
                        const std::vector<SegmentId>& extra_cleared, RoadId truck,
                        std::uint64_t seed,
                        const RepairModel& repairs = RepairModel::standard());

}  // namespace stormcrew
