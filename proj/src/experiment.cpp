#include "stormcrew/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "stormcrew/policies.hpp"

namespace stormcrew {

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

ExperimentPlan ExperimentPlan::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ExperimentPlan plan;
  plan.grid_file = j.at("grid").get<std::string>();
  plan.scenario = ScenarioConfig::from_json_text(j.at("scenario").dump());
  if (j.contains("rhos")) plan.rhos = j.at("rhos").get<std::vector<double>>();
  if (j.contains("budgets"))
    plan.budgets = j.at("budgets").get<std::vector<int>>();
  if (j.contains("seeds")) {
    plan.seed_start = j.at("seeds").at("start").get<std::uint64_t>();
    plan.seed_count = j.at("seeds").at("count").get<int>();
  }
  if (j.contains("policies"))
    plan.policies = j.at("policies").get<std::vector<std::string>>();
  if (j.contains("output_dir"))
    plan.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("jobs")) plan.jobs = j.at("jobs").get<int>();
  if (j.contains("mcts")) {
    const auto& m = j.at("mcts");
    plan.mcts.alpha = m.value("alpha", plan.mcts.alpha);
    plan.mcts.n_iter = m.value("n_iter", plan.mcts.n_iter);
    plan.mcts.d_thr = m.value("d_thr", plan.mcts.d_thr);
    plan.mcts.e_thr = m.value("e_thr", plan.mcts.e_thr);
    plan.mcts.k_actions = m.value("k_actions", plan.mcts.k_actions);
    plan.mcts.horizon_minutes =
        m.value("horizon_minutes", plan.mcts.horizon_minutes);
  }
  if (j.contains("run")) {
    const auto& r = j.at("run");
    plan.run.episode_cap_minutes =
        r.value("episode_cap_minutes", plan.run.episode_cap_minutes);
    plan.run.accounting_horizon_minutes = r.value(
        "accounting_horizon_minutes", plan.run.accounting_horizon_minutes);
    plan.run.epsilon_threshold =
        r.value("epsilon_threshold", plan.run.epsilon_threshold);
    plan.run.depot = r.value("depot", plan.run.depot);
  }
  if (plan.rhos.empty() || plan.budgets.empty() || plan.seed_count <= 0 ||
      plan.policies.empty())
    throw Error("experiment plan has an empty sweep axis");
  return plan;
}

ExperimentPlan ExperimentPlan::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open plan file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::vector<EpisodeRow> run_sweep(const Grid& grid, const ExperimentPlan& plan) {
  const PriorVector priors = generate_priors(grid, plan.scenario.storm);

  struct Cell {
    std::string policy;
    double rho;
    int n_iter;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const std::string& policy : plan.policies) {
    const bool budgeted = policy == "mcts";
    for (double rho : plan.rhos)
      for (int s = 0; s < plan.seed_count; ++s)
        if (budgeted)
          for (int budget : plan.budgets)
            cells.push_back({policy, rho, budget, plan.seed_start + s});
        else
          cells.push_back({policy, rho, 0, plan.seed_start + s});
  }

  RunConfig run_cfg = plan.run;
  if (plan.scenario.depot >= 0 && run_cfg.depot < 0)
    run_cfg.depot = plan.scenario.depot;

  std::vector<EpisodeRow> rows(cells.size());
  auto run_cell = [&](std::size_t i) {
    const Cell& cell = cells[i];
    EpisodeRow& row = rows[i];
    row.policy = cell.policy;
    row.rho = cell.rho;
    row.n_iter = cell.n_iter;
    row.seed = cell.seed;
    try {
      const ScenarioRealization realization = realize_scenario(
          grid, priors, cell.rho, cell.seed, plan.scenario.repairs);
      EpisodeResult result;
      if (cell.policy == "oracle") {
        result = posterior_optimal_value(grid, realization, run_cfg);
      } else if (cell.policy == "escalation") {
        result = run_escalation_policy(grid, realization, run_cfg);
      } else if (cell.policy == "mcts") {
        MctsConfig mcts = plan.mcts;
        mcts.n_iter = cell.n_iter;
        mcts.seed = mix_seed(cell.seed, 0x5EED + cell.n_iter);
        result = run_lookahead_policy(grid, priors, realization, run_cfg, mcts,
                                      plan.scenario.repairs);
      } else {
        throw Error("unknown policy " + cell.policy);
      }
      row.metrics = result.metrics;
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
  };

  const int jobs = std::max(1, plan.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::vector<std::thread> workers;
    std::size_t next = 0;
    std::mutex mu;
    for (int w = 0; w < jobs; ++w)
      workers.emplace_back([&] {
        for (;;) {
          std::size_t i;
          {
            std::scoped_lock lock(mu);
            if (next >= cells.size()) return;
            i = next++;
          }
          run_cell(i);
        }
      });
    for (auto& t : workers) t.join();
  }

  std::sort(rows.begin(), rows.end(), [](const EpisodeRow& a, const EpisodeRow& b) {
    if (a.policy != b.policy) return a.policy < b.policy;
    if (a.rho != b.rho) return a.rho < b.rho;
    if (a.n_iter != b.n_iter) return a.n_iter < b.n_iter;
    return a.seed < b.seed;
  });
  return rows;
}

std::vector<CellSummary> summarize(const std::vector<EpisodeRow>& rows) {
  std::vector<CellSummary> cells;
  for (const EpisodeRow& row : rows) {
    if (row.failed) continue;
    if (cells.empty() || cells.back().policy != row.policy ||
        cells.back().rho != row.rho || cells.back().n_iter != row.n_iter) {
      CellSummary c;
      c.policy = row.policy;
      c.rho = row.rho;
      c.n_iter = row.n_iter;
      cells.push_back(c);
    }
    CellSummary& c = cells.back();
    ++c.episodes;
    c.mean_outage_hours += row.metrics.outage_hours;
    c.mean_stop_minutes += row.metrics.stop_time_minutes;
    c.mean_unrepaired += row.metrics.unrepaired_faults;
    c.mean_customers_out_at_stop +=
        static_cast<double>(row.metrics.customers_out_at_stop);
    if (std::isfinite(row.metrics.restore_time_minutes)) {
      c.mean_restore_minutes += row.metrics.restore_time_minutes;
      ++c.restored_episodes;
    }
  }
  for (CellSummary& c : cells) {
    c.mean_outage_hours /= c.episodes;
    c.mean_stop_minutes /= c.episodes;
    c.mean_unrepaired /= c.episodes;
    c.mean_customers_out_at_stop /= c.episodes;
    if (c.restored_episodes > 0) c.mean_restore_minutes /= c.restored_episodes;
  }
  // Second pass for the standard error of the outage-hour mean.
  for (CellSummary& c : cells) {
    double ss = 0.0;
    int n = 0;
    for (const EpisodeRow& row : rows) {
      if (row.failed || row.policy != c.policy || row.rho != c.rho ||
          row.n_iter != c.n_iter)
        continue;
      const double d = row.metrics.outage_hours - c.mean_outage_hours;
      ss += d * d;
      ++n;
    }
    c.stderr_outage_hours =
        n > 1 ? std::sqrt(ss / (n - 1)) / std::sqrt(static_cast<double>(n)) : 0.0;
  }
  return cells;
}

std::string episodes_csv(const std::vector<EpisodeRow>& rows) {
  std::ostringstream os;
  os << "seed,policy,rho,n_iter,outage_hours,restore_min,stop_min,unrepaired,"
        "customers_out_at_stop,status\n";
  for (const EpisodeRow& r : rows) {
    os << r.seed << "," << r.policy << "," << fmt(r.rho) << "," << r.n_iter
       << ",";
    if (r.failed) {
      os << ",,,,,failed:" << r.error << "\n";
      continue;
    }
    os << fmt(r.metrics.outage_hours) << ","
       << fmt(r.metrics.restore_time_minutes) << ","
       << fmt(r.metrics.stop_time_minutes) << "," << r.metrics.unrepaired_faults
       << "," << r.metrics.customers_out_at_stop << ",ok\n";
  }
  return os.str();
}

std::string summary_csv(const std::vector<CellSummary>& cells) {
  std::ostringstream os;
  os << "policy,rho,n_iter,episodes,mean_outage_hours,stderr_outage_hours,"
        "mean_restore_min,restored_episodes,mean_stop_min,mean_unrepaired,"
        "mean_customers_out_at_stop\n";
  for (const CellSummary& c : cells) {
    os << c.policy << "," << fmt(c.rho) << "," << c.n_iter << "," << c.episodes
       << "," << fmt(c.mean_outage_hours) << "," << fmt(c.stderr_outage_hours)
       << "," << fmt(c.mean_restore_minutes) << "," << c.restored_episodes
       << "," << fmt(c.mean_stop_minutes) << "," << fmt(c.mean_unrepaired)
       << "," << fmt(c.mean_customers_out_at_stop) << "\n";
  }
  return os.str();
}

std::string summary_json(const std::vector<CellSummary>& cells) {
  nlohmann::json j = nlohmann::json::array();
  for (const CellSummary& c : cells) {
    j.push_back({{"policy", c.policy},
                 {"rho", c.rho},
                 {"n_iter", c.n_iter},
                 {"episodes", c.episodes},
                 {"customer_outage_hours", c.mean_outage_hours},
                 {"unrepaired_faults", c.mean_unrepaired},
                 {"customers_in_outage", c.mean_customers_out_at_stop},
                 {"time_to_restore_hours", c.mean_restore_minutes / 60.0},
                 {"time_to_stop_hours", c.mean_stop_minutes / 60.0}});
  }
  return j.dump(2);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

}  // namespace stormcrew
