#include "stormcrew/belief.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace stormcrew {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_binomial_pmf(int n, int h, double rho) {
  if (h < 0 || h > n) return kNegInf;
  if (h > 0 && rho <= 0.0) return kNegInf;
  if (n - h > 0 && rho >= 1.0) return kNegInf;
  double lg = std::lgamma(n + 1.0) - std::lgamma(h + 1.0) - std::lgamma(n - h + 1.0);
  if (h > 0) lg += h * std::log(rho);
  if (n - h > 0) lg += (n - h) * std::log1p(-rho);
  return lg;
}

// Customer nodes collapsed by their candidate outage mask. Nodes sharing a
// mask contribute one multiplicative factor per combination.
struct MaskGroup {
  std::uint32_t mask = 0;
  double log_out = 0.0;  // sum of log pmf terms when the group is in outage
  bool zero_calls = true;  // powered factor is 1 iff no calls in the group
};

}  // namespace

double BeliefState::posterior_at(LineId line) const {
  auto it = posterior.find(line);
  return it == posterior.end() ? 0.0 : it->second;
}

std::vector<LineId> FaultCombination::faulted() const {
  std::vector<LineId> out;
  for (std::size_t k = 0; k < candidates.size(); ++k)
    if (mask & (1u << k)) out.push_back(candidates[k]);
  return out;
}

double call_likelihood(const Grid& grid, int circuit_id, const CallVector& calls,
                       const FaultCombination& combo, double rho) {
  const Circuit& c = grid.circuit(circuit_id);
  const auto prop = c.propagate(combo.faulted());

  double loglik = 0.0;
  for (NodeId id : c.node_ids()) {
    const int n = c.customers(id);
    const int h = calls.at(id);
    if (n == 0 && h == 0) continue;
    const bool out = prop.node_out.at(id);
    if (out) {
      loglik += log_binomial_pmf(n, h, rho);
    } else if (h != 0) {
      return 0.0;  // powered customers never call
    }
    if (loglik == kNegInf) return 0.0;
  }
  return std::exp(loglik);
}

BeliefState posterior_update(const Grid& grid, const PriorVector& priors,
                             const CallVector& calls,
                             const std::set<SegmentId>& cleared, double rho) {
  BeliefState belief;
  belief.calls = calls;
  belief.cleared = cleared;
  belief.rho = rho;

  for (const Circuit& c : grid.circuits()) {
    // Lines pinned to zero by the trajectory.
    std::set<LineId> cleared_lines;
    for (SegmentId seg : cleared) {
      if (!c.has_node(seg)) continue;
      for (LineId line : c.segment_lines(seg)) cleared_lines.insert(line);
    }

    std::vector<LineId> cands;
    for (NodeId id : c.node_ids()) {
      if (id == c.root()) continue;
      if (cleared_lines.count(id)) {
        belief.posterior[id] = 0.0;
        continue;
      }
      const double p = priors.at(id);
      if (p > 0.0)
        cands.push_back(id);
      else
        belief.posterior[id] = 0.0;
    }
    std::sort(cands.begin(), cands.end());

    int circuit_calls = 0;
    for (NodeId id : c.node_ids()) circuit_calls += calls.at(id);

    if (cands.empty()) {
      if (circuit_calls > 0)
        throw ZeroEvidence("circuit " + std::to_string(c.id()) +
                           " has calls but no candidate lines");
      continue;
    }
    if (static_cast<int>(cands.size()) > kMaxEnumLines)
      throw TooManyCandidates("circuit " + std::to_string(c.id()) + " has " +
                              std::to_string(cands.size()) +
                              " candidate lines (cap " +
                              std::to_string(kMaxEnumLines) + ")");

    const int nc = static_cast<int>(cands.size());
    std::vector<double> log_p(nc), log_q(nc);
    for (int k = 0; k < nc; ++k) {
      const double p = priors.at(cands[k]);
      log_p[k] = p >= 1.0 ? 0.0 : std::log(p);
      log_q[k] = p >= 1.0 ? kNegInf : std::log1p(-p);
    }

    // Outage mask per customer node: candidate k flips node i whenever the
    // device tripped by candidate k sits strictly above i.
    std::map<NodeId, std::uint32_t> node_mask;
    for (NodeId id : c.node_ids()) {
      if (c.customers(id) == 0 && calls.at(id) == 0) continue;
      node_mask[id] = 0;
    }
    for (int k = 0; k < nc; ++k) {
      const NodeId dev = c.segment_of_line(cands[k]);
      for (auto& [id, mask] : node_mask)
        if (c.is_strict_ancestor(dev, id)) mask |= (1u << k);
    }

    std::map<std::uint32_t, MaskGroup> groups;
    bool impossible_everywhere = false;
    for (const auto& [id, mask] : node_mask) {
      MaskGroup& g = groups[mask];
      g.mask = mask;
      const int h = calls.at(id);
      g.log_out += log_binomial_pmf(c.customers(id), h, rho);
      if (h != 0) g.zero_calls = false;
      // A node with calls that no candidate can black out dooms every combo.
      if (h != 0 && mask == 0) impossible_everywhere = true;
    }
    if (impossible_everywhere)
      throw ZeroEvidence("circuit " + std::to_string(c.id()) +
                         " has calls outside every candidate outage set");

    std::vector<MaskGroup> group_list;
    for (const auto& [mask, g] : groups) group_list.push_back(g);

    const std::uint32_t n_combo = 1u << nc;
    std::vector<double> log_w(n_combo, 0.0);
    double max_log = kNegInf;
    for (std::uint32_t m = 0; m < n_combo; ++m) {
      double lw = 0.0;
      for (int k = 0; k < nc && lw != kNegInf; ++k)
        lw += (m & (1u << k)) ? log_p[k] : log_q[k];
      for (const MaskGroup& g : group_list) {
        if (lw == kNegInf) break;
        if (m & g.mask)
          lw += g.log_out;
        else if (!g.zero_calls)
          lw = kNegInf;
      }
      log_w[m] = lw;
      max_log = std::max(max_log, lw);
    }
    if (max_log == kNegInf)
      throw ZeroEvidence("circuit " + std::to_string(c.id()) +
                         ": no fault combination explains the calls");

    double denom = 0.0;
    std::vector<double> numer(nc, 0.0);
    for (std::uint32_t m = 0; m < n_combo; ++m) {
      if (log_w[m] == kNegInf) continue;
      const double w = std::exp(log_w[m] - max_log);
      denom += w;
      for (int k = 0; k < nc; ++k)
        if (m & (1u << k)) numer[k] += w;
    }
    for (int k = 0; k < nc; ++k)
      belief.posterior[cands[k]] = std::clamp(numer[k] / denom, 0.0, 1.0);
  }
  return belief;
}

namespace {

double expected_out_impl(const Grid& grid, const BeliefState& belief,
                         const std::set<SegmentId>* extra_cleared) {
  double total = 0.0;
  for (const Circuit& c : grid.circuits()) {
    // Survival down the device tree: probability that no line on the chain
    // from the root to the segment head is faulted.
    std::map<SegmentId, double> no_fault;  // per segment, product over lines
    for (SegmentId seg : c.segment_ids()) {
      if (extra_cleared && extra_cleared->count(seg)) {
        no_fault[seg] = 1.0;
        continue;
      }
      double prod = 1.0;
      for (LineId line : c.segment_lines(seg))
        prod *= 1.0 - belief.posterior_at(line);
      no_fault[seg] = prod;
    }
    for (SegmentId seg : c.segment_ids()) {
      double survive = 1.0;
      for (NodeId dev : c.device_chain(seg)) {
        auto it = no_fault.find(dev);
        if (it != no_fault.end()) survive *= it->second;
      }
      total += (1.0 - survive) * static_cast<double>(c.segment_customers(seg));
    }
  }
  return total;
}

}  // namespace

double expected_customers_out(const Grid& grid, const BeliefState& belief) {
  return expected_out_impl(grid, belief, nullptr);
}

double expected_customers_out_masked(const Grid& grid, const BeliefState& belief,
                                     const std::vector<SegmentId>& extra_cleared) {
  const std::set<SegmentId> extra(extra_cleared.begin(), extra_cleared.end());
  return expected_out_impl(grid, belief, &extra);
}

std::vector<SegmentRef> candidate_segments(const Grid& grid,
                                           const BeliefState& belief,
                                           double threshold) {
  std::vector<SegmentRef> out;
  for (const Circuit& c : grid.circuits()) {
    for (SegmentId seg : c.segment_ids()) {
      if (belief.cleared.count(seg)) continue;
      double best = 0.0;
      for (LineId line : c.segment_lines(seg))
        best = std::max(best, belief.posterior_at(line));
      if (best >= threshold) out.push_back({c.id(), seg, best});
    }
  }
  std::sort(out.begin(), out.end(), [](const SegmentRef& a, const SegmentRef& b) {
    if (a.posterior != b.posterior) return a.posterior > b.posterior;
    return a.segment < b.segment;
  });
  return out;
}

std::string describe_belief(const Grid& grid, const PriorVector& priors,
                            const BeliefState& belief) {
  std::ostringstream os;
  os << "line  circuit  segment  prior     posterior  cleared\n";
  char buf[128];
  for (const Circuit& c : grid.circuits()) {
    for (NodeId id : c.node_ids()) {
      if (id == c.root()) continue;
      const SegmentId seg = c.segment_of_line(id);
      const bool cleared = belief.cleared.count(seg) != 0;
      std::snprintf(buf, sizeof buf, "%-5d %-8d %-8d %-9.6f %-10.6f %s\n", id,
                    c.id(), seg, priors.at(id), belief.posterior_at(id),
                    cleared ? "yes" : "no");
      os << buf;
    }
  }
  return os.str();
}

}  // namespace stormcrew
