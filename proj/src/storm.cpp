#include "stormcrew/storm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace stormcrew {

RepairModel RepairModel::standard() {
  RepairModel m;
  m.classes.push_back({"minor", 0.7, 20.0, 40.0});
  m.classes.push_back({"major", 0.3, 60.0, 180.0});
  return m;
}

double RepairModel::mean_minutes() const {
  double mean = 0.0;
  for (const auto& c : classes) mean += c.prob * c.mean();
  return mean;
}

void RepairModel::validate() const {
  if (classes.empty()) throw Error("repair model has no classes");
  double total = 0.0;
  for (const auto& c : classes) {
    if (c.prob < 0 || c.lo_minutes <= 0 || c.hi_minutes < c.lo_minutes)
      throw Error("invalid repair class " + c.name);
    total += c.prob;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw Error("repair class probabilities sum to " + std::to_string(total));
}

double PriorVector::at(LineId line) const {
  auto it = p_line.find(line);
  return it == p_line.end() ? 0.0 : it->second;
}

PriorVector generate_priors(const Grid& grid, const StormParams& storm) {
  if (storm.severity < 0.0 || storm.severity > 1.0)
    throw Error("storm severity must be in [0,1]");
  if (storm.diameter <= 0.0) throw Error("storm diameter must be positive");

  PriorVector priors;
  for (const Circuit& c : grid.circuits()) {
    for (NodeId id : c.node_ids()) {
      if (id == c.root()) continue;
      const RoadId pole = grid.pole_of(id);
      const double d = RoadNetwork::point_to_polyline(
          grid.road().x(pole), grid.road().y(pole), storm.track);
      const double span = d / storm.diameter;
      double p = storm.severity * std::exp(-span * span);
      p = std::clamp(p, 0.0, 1.0);
      priors.p_line[id] = p;
    }
  }
  return priors;
}

bool ScenarioRealization::is_fault(LineId line) const {
  return std::binary_search(faults.begin(), faults.end(), line);
}

int ScenarioRealization::flagged_callers() const {
  int n = 0;
  for (const auto& c : customers) n += c.calls ? 1 : 0;
  return n;
}

ScenarioRealization realize_scenario(const Grid& grid, const PriorVector& priors,
                                     double rho, std::uint64_t seed,
                                     const RepairModel& repairs) {
  if (rho < 0.0 || rho > 1.0) throw Error("call-in probability must be in [0,1]");
  repairs.validate();

  ScenarioRealization r;
  r.rho = rho;

  // Independent sub-streams keep the customer draws aligned across rho values
  // and across differing fault sets (call coupling / pairing discipline).
  Rng fault_rng(mix_seed(seed, 1));
  Rng repair_rng(mix_seed(seed, 2));
  Rng call_rng(mix_seed(seed, 3));

  for (LineId line : grid.all_lines()) {
    if (bernoulli(fault_rng, priors.at(line))) r.faults.push_back(line);
  }
  for (LineId line : r.faults) {
    const double u = uniform01(repair_rng);
    const RepairClass* chosen = &repairs.classes.back();
    double acc = 0.0;
    for (const auto& cls : repairs.classes) {
      acc += cls.prob;
      if (u < acc) {
        chosen = &cls;
        break;
      }
    }
    r.repair_minutes[line] =
        uniform_real(repair_rng, chosen->lo_minutes, chosen->hi_minutes);
  }

  const OutageState outage = propagate_outages(grid, r.faults);
  r.node_initially_out = outage.node_out;

  for (const Circuit& c : grid.circuits()) {
    for (NodeId id : c.node_ids()) {
      const int n_cust = c.customers(id);
      const bool out = outage.node_out.count(id) ? outage.node_out.at(id) : false;
      for (int k = 0; k < n_cust; ++k) {
        ScenarioRealization::Caller caller;
        caller.node = id;
        const double coin = uniform01(call_rng);
        caller.delay = uniform_real(call_rng, 0.0, 60.0);
        caller.calls = out && coin < rho;
        r.customers.push_back(caller);
      }
    }
  }
  return r;
}

OutageState propagate_outages(const Grid& grid, const std::vector<LineId>& faults) {
  std::map<int, std::vector<LineId>> per_circuit;
  for (LineId f : faults) per_circuit[grid.circuit_of(f).id()].push_back(f);

  OutageState state;
  for (const Circuit& c : grid.circuits()) {
    auto it = per_circuit.find(c.id());
    const std::vector<LineId> none;
    const auto prop = c.propagate(it == per_circuit.end() ? none : it->second);
    state.customers_out += prop.customers_out;
    for (const auto& [node, out] : prop.node_out) state.node_out[node] = out;
    state.open_devices.insert(state.open_devices.end(), prop.open_devices.begin(),
                              prop.open_devices.end());
  }
  std::sort(state.open_devices.begin(), state.open_devices.end());
  return state;
}

int CallVector::total() const {
  int n = 0;
  for (const auto& [node, count] : counts) n += count;
  return n;
}

int CallVector::at(NodeId node) const {
  auto it = counts.find(node);
  return it == counts.end() ? 0 : it->second;
}

void CallVector::add(const CallVector& increment) {
  for (const auto& [node, count] : increment.counts) counts[node] += count;
}

CallVector new_calls(const ScenarioRealization& realization, double t_from,
                     double t_to,
                     const std::map<NodeId, double>& node_restore_minute) {
  CallVector increment;
  for (const auto& caller : realization.customers) {
    if (!caller.calls) continue;
    if (caller.delay <= t_from || caller.delay > t_to) continue;
    auto it = node_restore_minute.find(caller.node);
    const double restored =
        it == node_restore_minute.end() ? std::numeric_limits<double>::infinity()
                                        : it->second;
    if (restored < caller.delay) continue;  // power back before the call
    increment.counts[caller.node] += 1;
  }
  return increment;
}

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ScenarioConfig cfg;
  const auto& sj = j.at("storm");
  for (const auto& pt : sj.at("track"))
    cfg.storm.track.emplace_back(pt.at(0).get<double>(), pt.at(1).get<double>());
  cfg.storm.severity = sj.at("severity").get<double>();
  cfg.storm.diameter = sj.at("diameter").get<double>();
  cfg.rho = j.at("rho").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.storm.seed = cfg.seed;
  if (j.contains("repair_classes")) {
    cfg.repairs.classes.clear();
    for (const auto& cj : j.at("repair_classes")) {
      RepairClass cls;
      cls.name = cj.at("name").get<std::string>();
      cls.prob = cj.at("prob").get<double>();
      cls.lo_minutes = cj.at("min").get<double>();
      cls.hi_minutes = cj.at("max").get<double>();
      cfg.repairs.classes.push_back(cls);
    }
    cfg.repairs.validate();
  }
  if (j.contains("depot")) cfg.depot = j.at("depot").get<int>();
  return cfg;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string ScenarioConfig::to_json_text() const {
  nlohmann::json j;
  j["storm"]["track"] = nlohmann::json::array();
  for (const auto& [x, y] : storm.track) j["storm"]["track"].push_back({x, y});
  j["storm"]["severity"] = storm.severity;
  j["storm"]["diameter"] = storm.diameter;
  j["rho"] = rho;
  j["seed"] = seed;
  j["repair_classes"] = nlohmann::json::array();
  for (const auto& cls : repairs.classes)
    j["repair_classes"].push_back({{"name", cls.name},
                                   {"prob", cls.prob},
                                   {"min", cls.lo_minutes},
                                   {"max", cls.hi_minutes}});
  if (depot >= 0) j["depot"] = depot;
  return j.dump(2);
}

std::string describe_realization(const Grid& grid, const ScenarioRealization& r) {
  std::ostringstream os;
  os << "faults: " << r.faults.size() << "\n";
  for (LineId f : r.faults) {
    const Circuit& c = grid.circuit_of(f);
    os << "  line " << f << " circuit " << c.id() << " segment "
       << c.segment_of_line(f) << " repair " << r.repair_minutes.at(f)
       << " min\n";
  }
  std::map<NodeId, int> callers;
  for (const auto& caller : r.customers)
    if (caller.calls) callers[caller.node] += 1;
  os << "flagged callers: " << r.flagged_callers() << " (rho " << r.rho << ")\n";
  for (const auto& [node, n] : callers)
    os << "  node " << node << ": " << n << " caller(s)\n";
  long long out = 0;
  for (const auto& [node, flag] : r.node_initially_out)
    if (flag) out += grid.circuit_of(node).customers(node);
  os << "customers initially out: " << out << "\n";
  return os.str();
}

}  // namespace stormcrew
