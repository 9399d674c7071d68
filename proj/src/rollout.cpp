#include "stormcrew/rollout.hpp"

#include <algorithm>
#include <limits>

namespace stormcrew {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// f(visited mask) decomposed per circuit: outage counts are independent
// across circuits, so each circuit's contribution is tabulated over its own
// stop subset and summed.
class OutageTable {
 public:
  OutageTable(const Grid& grid, const SamplePath& path) {
    const int n = static_cast<int>(path.stops.size());
    std::map<int, std::vector<int>> stops_by_circuit;
    for (int i = 0; i < n; ++i)
      stops_by_circuit[path.stops[i].circuit_id].push_back(i);

    for (const auto& [cid, stop_idx] : stops_by_circuit) {
      PerCircuit pc;
      pc.stop_bits.assign(n, -1);
      const int k = static_cast<int>(stop_idx.size());
      for (int b = 0; b < k; ++b) pc.stop_bits[stop_idx[b]] = b;
      pc.table.resize(std::size_t{1} << k);
      const Circuit& c = grid.circuit(cid);
      std::vector<LineId> remaining;
      for (std::uint32_t lm = 0; lm < pc.table.size(); ++lm) {
        remaining.clear();
        for (int b = 0; b < k; ++b) {
          if (lm & (1u << b)) continue;
          const auto& f = path.stops[stop_idx[b]].faults;
          remaining.insert(remaining.end(), f.begin(), f.end());
        }
        pc.table[lm] = c.affected_customers(remaining);
      }
      circuits_.push_back(std::move(pc));
    }
  }

  long long customers_out(std::uint32_t visited_mask) const {
    long long total = 0;
    for (const auto& pc : circuits_) {
      std::uint32_t local = 0;
      for (std::size_t i = 0; i < pc.stop_bits.size(); ++i)
        if (pc.stop_bits[i] >= 0 && (visited_mask & (1u << i)))
          local |= (1u << pc.stop_bits[i]);
      total += pc.table[local];
    }
    return total;
  }

 private:
  struct PerCircuit {
    std::vector<int> stop_bits;  // global stop index -> local bit, -1 if absent
    std::vector<long long> table;
  };
  std::vector<PerCircuit> circuits_;
};

long long customers_out_direct(const Grid& grid, const SamplePath& path,
                               std::uint32_t visited_mask) {
  std::vector<LineId> remaining;
  for (std::size_t i = 0; i < path.stops.size(); ++i) {
    if (visited_mask & (1u << i)) continue;
    const auto& f = path.stops[i].faults;
    remaining.insert(remaining.end(), f.begin(), f.end());
  }
  return grid.affected_customers(remaining);
}

}  // namespace

std::vector<LineId> SamplePath::all_faults() const {
  std::vector<LineId> out;
  for (const auto& s : stops) out.insert(out.end(), s.faults.begin(), s.faults.end());
  std::sort(out.begin(), out.end());
  return out;
}

int SamplePath::stop_index(SegmentId segment) const {
  for (std::size_t i = 0; i < stops.size(); ++i)
    if (stops[i].segment == segment) return static_cast<int>(i);
  return -1;
}

SamplePath make_sample_path(const Grid& grid, RoadId start,
                            const std::map<LineId, double>& fault_repairs) {
  SamplePath path;
  path.start = start;

  std::map<SegmentId, SampleStop> stops;
  for (const auto& [line, minutes] : fault_repairs) {
    const Circuit& c = grid.circuit_of(line);
    const SegmentId seg = c.segment_of_line(line);
    SampleStop& stop = stops[seg];
    stop.segment = seg;
    stop.circuit_id = c.id();
    stop.pole = grid.segment_pole(seg);
    stop.repair_minutes += minutes;
    stop.faults.push_back(line);
  }
  for (auto& [seg, stop] : stops) {
    std::sort(stop.faults.begin(), stop.faults.end());
    path.stops.push_back(std::move(stop));
  }

  const int n = static_cast<int>(path.stops.size());
  path.travel.assign(n + 1, std::vector<double>(n + 1, 0.0));
  auto pole_at = [&](int i) {
    return i == 0 ? start : path.stops[i - 1].pole;
  };
  for (int i = 0; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) {
      const double t = grid.shortest_travel_time(pole_at(i), pole_at(j));
      path.travel[i][j] = t;
      path.travel[j][i] = t;
    }
  return path;
}

SamplePath draw_sample_path(const Grid& grid, const BeliefState& belief,
                            RoadId start, std::uint64_t seed,
                            const RepairModel& repairs,
                            const std::vector<SegmentId>& extra_cleared) {
  Rng rng(seed);
  std::map<LineId, double> fault_repairs;
  for (const auto& [line, p] : belief.posterior) {
    if (p <= 0.0) continue;
    const Circuit& c = grid.circuit_of(line);
    const SegmentId seg = c.segment_of_line(line);
    if (belief.cleared.count(seg)) continue;
    if (std::find(extra_cleared.begin(), extra_cleared.end(), seg) !=
        extra_cleared.end())
      continue;
    if (!bernoulli(rng, p)) continue;

    const double u = uniform01(rng);
    const RepairClass* chosen = &repairs.classes.back();
    double acc = 0.0;
    for (const auto& cls : repairs.classes) {
      acc += cls.prob;
      if (u < acc) {
        chosen = &cls;
        break;
      }
    }
    fault_repairs[line] =
        uniform_real(rng, chosen->lo_minutes, chosen->hi_minutes);
  }
  return make_sample_path(grid, start, fault_repairs);
}

double tour_cost(const Grid& grid, const SamplePath& path,
                 const std::vector<SegmentId>& order) {
  const int n = static_cast<int>(path.stops.size());
  if (static_cast<int>(order.size()) != n)
    throw NotAPermutation("order has " + std::to_string(order.size()) +
                          " entries for " + std::to_string(n) + " stops");
  std::vector<char> seen(n, 0);
  for (SegmentId seg : order) {
    const int idx = path.stop_index(seg);
    if (idx < 0 || seen[idx])
      throw NotAPermutation("segment " + std::to_string(seg) +
                            " is not a fresh stop of the sample path");
    seen[idx] = 1;
  }

  double cost = 0.0;
  std::uint32_t visited = 0;
  int pos = 0;  // travel-matrix index
  for (SegmentId seg : order) {
    const int idx = path.stop_index(seg);
    const double leg =
        path.travel[pos][idx + 1] + path.stops[idx].repair_minutes;
    cost += static_cast<double>(customers_out_direct(grid, path, visited)) * leg;
    visited |= (1u << idx);
    pos = idx + 1;
  }
  return cost;
}

TourValue optimal_tour_dp(const Grid& grid, const SamplePath& path) {
  const int n = static_cast<int>(path.stops.size());
  if (n > kMaxDpStops)
    throw TooManyFaults("sample path has " + std::to_string(n) +
                        " stops (DP cap " + std::to_string(kMaxDpStops) + ")");
  TourValue result;
  if (n == 0) return result;

  const OutageTable table(grid, path);
  const std::uint32_t full = (1u << n) - 1;
  std::vector<double> f(full + 1);
  for (std::uint32_t m = 0; m <= full; ++m)
    f[m] = static_cast<double>(table.customers_out(m));

  std::vector<std::vector<double>> dp(full + 1, std::vector<double>(n, kInf));
  std::vector<std::vector<int>> parent(full + 1, std::vector<int>(n, -1));
  for (int j = 0; j < n; ++j)
    dp[1u << j][j] = f[0] * (path.travel[0][j + 1] + path.stops[j].repair_minutes);

  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    for (int j = 0; j < n; ++j) {
      if (!(mask & (1u << j)) || dp[mask][j] == kInf) continue;
      const double base = dp[mask][j];
      const double weight = f[mask];
      for (int i = 0; i < n; ++i) {
        if (mask & (1u << i)) continue;
        const std::uint32_t nm = mask | (1u << i);
        const double cand =
            base + weight * (path.travel[j + 1][i + 1] +
                             path.stops[i].repair_minutes);
        if (cand < dp[nm][i]) {
          dp[nm][i] = cand;
          parent[nm][i] = j;
        }
      }
    }
  }

  int last = 0;
  for (int j = 1; j < n; ++j)
    if (dp[full][j] < dp[full][last]) last = j;
  result.outage_minutes = dp[full][last];

  std::vector<int> rev;
  std::uint32_t mask = full;
  int j = last;
  while (j != -1) {
    rev.push_back(j);
    const int pj = parent[mask][j];
    mask &= ~(1u << j);
    j = pj;
  }
  for (auto it = rev.rbegin(); it != rev.rend(); ++it)
    result.tour.push_back(path.stops[*it].segment);
  return result;
}

TourValue heuristic_tour(const Grid& grid, const SamplePath& path) {
  const int n = static_cast<int>(path.stops.size());
  TourValue result;
  if (n == 0) return result;

  // Greedy construction: most customers restored per minute, ties by the
  // shorter leg, then by ascending segment id.
  std::vector<SegmentId> order;
  std::uint32_t visited = 0;
  int pos = 0;
  while (static_cast<int>(order.size()) < n) {
    const long long out_now = customers_out_direct(grid, path, visited);
    int best = -1;
    double best_rate = -1.0;
    double best_time = kInf;
    for (int j = 0; j < n; ++j) {
      if (visited & (1u << j)) continue;
      const double leg =
          path.travel[pos][j + 1] + path.stops[j].repair_minutes;
      const long long restored =
          out_now - customers_out_direct(grid, path, visited | (1u << j));
      const double rate = static_cast<double>(restored) / leg;
      const bool better =
          rate > best_rate ||
          (rate == best_rate &&
           (leg < best_time ||
            (leg == best_time &&
             (best < 0 || path.stops[j].segment < path.stops[best].segment))));
      if (better) {
        best = j;
        best_rate = rate;
        best_time = leg;
      }
    }
    order.push_back(path.stops[best].segment);
    visited |= (1u << best);
    pos = best + 1;
  }

  // 2-opt: reverse any sub-range that lowers the cost, to a local optimum.
  double best_cost = tour_cost(grid, path, order);
  bool improved = true;
  int passes = 0;
  while (improved && passes < 50) {
    improved = false;
    ++passes;
    for (int i = 0; i < n - 1; ++i) {
      for (int k = i + 1; k < n; ++k) {
        std::vector<SegmentId> cand = order;
        std::reverse(cand.begin() + i, cand.begin() + k + 1);
        const double c = tour_cost(grid, path, cand);
        if (c < best_cost - 1e-12) {
          best_cost = c;
          order = std::move(cand);
          improved = true;
        }
      }
    }
  }
  result.outage_minutes = best_cost;
  result.tour = std::move(order);
  return result;
}

double rollout_value(const Grid& grid, const BeliefState& belief,
                     const std::vector<SegmentId>& extra_cleared, RoadId truck,
                     Rng& rng, const RepairModel& repairs) {
  const SamplePath path =
      draw_sample_path(grid, belief, truck, rng(), repairs, extra_cleared);
  if (static_cast<int>(path.stops.size()) <= kMaxDpStops)
    return optimal_tour_dp(grid, path).outage_minutes;
  return heuristic_tour(grid, path).outage_minutes;
}

double sim_policy_value(const Grid& grid, const BeliefState& belief,
                        const std::vector<SegmentId>& extra_cleared, RoadId truck,
                        std::uint64_t seed, const RepairModel& repairs) {
  Rng rng(seed);
  return rollout_value(grid, belief, extra_cleared, truck, rng, repairs);
}

}  // namespace stormcrew
