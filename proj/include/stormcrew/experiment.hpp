#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stormcrew/engine.hpp"
#include "stormcrew/grid.hpp"
#include "stormcrew/mcts.hpp"
#include "stormcrew/storm.hpp"

namespace stormcrew {

// Batch experiment: every (policy, rho, budget, seed) cell runs against the
// realization generated from (rho, seed), so policies are seed-paired.
struct ExperimentPlan {
  std::string grid_file;
  ScenarioConfig scenario;      // storm template; per-cell seed/rho override
  std::vector<double> rhos{0.1};
  std::vector<int> budgets{1000};               // MCTS n_iter values
  std::uint64_t seed_start = 1;
  int seed_count = 20;
  std::vector<std::string> policies{"oracle", "mcts", "escalation"};
  std::string output_dir = "out";
  MctsConfig mcts;
  RunConfig run;
  int jobs = 1;

  static ExperimentPlan from_json_text(const std::string& text);
  static ExperimentPlan load(const std::string& path);
};

struct EpisodeRow {
  std::string policy;
  double rho = 0.0;
  int n_iter = 0;  // 0 for budget-free policies
  std::uint64_t seed = 0;
  EpisodeMetrics metrics;
  bool failed = false;
  std::string error;
};

// Runs all cells (optionally across threads) and returns rows in canonical
// order: policy, rho, n_iter, seed.
std::vector<EpisodeRow> run_sweep(const Grid& grid, const ExperimentPlan& plan);

struct CellSummary {
  std::string policy;
  double rho = 0.0;
  int n_iter = 0;
  int episodes = 0;
  double mean_outage_hours = 0.0;
  double stderr_outage_hours = 0.0;
  double mean_restore_minutes = 0.0;  // over restored episodes
  int restored_episodes = 0;
  double mean_stop_minutes = 0.0;
  double mean_unrepaired = 0.0;
  double mean_customers_out_at_stop = 0.0;
};

std::vector<CellSummary> summarize(const std::vector<EpisodeRow>& rows);

// CSV / JSON emission with fixed formatting (byte-stable across runs).
std::string episodes_csv(const std::vector<EpisodeRow>& rows);
std::string summary_csv(const std::vector<CellSummary>& cells);
std::string summary_json(const std::vector<CellSummary>& cells);

void write_file(const std::string& path, const std::string& content);

}  // namespace stormcrew
