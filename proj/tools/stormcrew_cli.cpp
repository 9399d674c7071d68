// stormcrew: storm-response truck routing over a radial distribution grid.
//
// Subcommands: validate, generate-grid, run-mcts, run-escalation, run-oracle,
// sweep, inspect-belief, rollout-bench, dump-tree. Exit codes: 0 success,
// 1 validation error, 2 runtime error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "stormcrew/belief.hpp"
#include "stormcrew/engine.hpp"
#include "stormcrew/experiment.hpp"
#include "stormcrew/gridgen.hpp"
#include "stormcrew/lookahead.hpp"
#include "stormcrew/policies.hpp"
#include "stormcrew/rollout.hpp"

namespace sc = stormcrew;

namespace {

std::string default_output_dir() {
  const char* env = std::getenv("STORMCREW_OUT");
  return env ? env : "out";
}

void print_trace(const sc::EpisodeResult& result) {
  std::printf("decisions:\n");
  for (const auto& d : result.trace.decisions)
    std::printf("  t=%8.2f min  from road %-6d to segment %-6d faults=%d dwell=%.2f\n",
                d.epoch_minutes, d.origin, d.destination, d.faults_found,
                d.dwell_minutes);
  const auto& m = result.metrics;
  std::printf("outage_hours          %.4f\n", m.outage_hours);
  if (std::isfinite(m.restore_time_minutes))
    std::printf("restore_time_minutes  %.2f\n", m.restore_time_minutes);
  else
    std::printf("restore_time_minutes  inf\n");
  std::printf("stop_time_minutes     %.2f\n", m.stop_time_minutes);
  std::printf("unrepaired_faults     %d\n", m.unrepaired_faults);
  std::printf("customers_out_at_stop %lld\n", m.customers_out_at_stop);
}

struct ScenarioArgs {
  std::string grid_file;
  std::string scenario_file;
  std::int64_t seed_override = -1;
  double rho_override = -1.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("grid", grid_file, "grid topology file")->required();
    cmd->add_option("scenario", scenario_file, "scenario config file")->required();
    cmd->add_option("--seed", seed_override, "override the scenario seed");
    cmd->add_option("--rho", rho_override, "override the call-in probability");
  }

  sc::ScenarioConfig load() const {
    sc::ScenarioConfig cfg = sc::ScenarioConfig::load(scenario_file);
    if (seed_override >= 0) {
      cfg.seed = static_cast<std::uint64_t>(seed_override);
      cfg.storm.seed = cfg.seed;
    }
    if (rho_override >= 0.0) cfg.rho = rho_override;
    return cfg;
  }
};

void attach_mcts_flags(CLI::App* cmd, sc::MctsConfig& mcts) {
  cmd->add_option("--alpha", mcts.alpha, "UCT exploration weight");
  cmd->add_option("--n-iter", mcts.n_iter, "search budget per decision");
  cmd->add_option("--d-thr", mcts.d_thr, "action expansion threshold");
  cmd->add_option("--e-thr", mcts.e_thr, "outcome expansion threshold");
  cmd->add_option("--k-actions", mcts.k_actions, "candidate actions per node");
  cmd->add_option("--horizon-minutes", mcts.horizon_minutes,
                  "lookahead plan horizon");
}

void attach_run_flags(CLI::App* cmd, sc::RunConfig& run) {
  cmd->add_option("--cap-minutes", run.episode_cap_minutes,
                  "maximum truck routing time");
  cmd->add_option("--accounting-minutes", run.accounting_horizon_minutes,
                  "outage integration window");
  cmd->add_option("--threshold", run.epsilon_threshold,
                  "candidate / stopping posterior threshold");
  cmd->add_option("--depot", run.depot, "depot road node");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"storm-response truck routing simulator"};
  app.require_subcommand(1);

  // ---- validate ----
  std::string validate_file;
  auto* validate = app.add_subcommand("validate", "check a grid topology file");
  validate->add_option("grid", validate_file, "grid topology file")->required();

  // ---- generate-grid ----
  sc::GridGenParams gen;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate-grid", "emit a random radial grid");
  generate->add_option("--circuits", gen.circuits, "number of circuits");
  generate->add_option("--devices", gen.devices_per_circuit,
                       "protective devices per circuit (incl. root)");
  generate->add_option("--lines", gen.lines_per_circuit, "power lines per circuit");
  generate->add_option("--customers", gen.customers_per_circuit,
                       "customers per circuit");
  generate->add_option("--area", gen.area, "layout square side (road minutes)");
  generate->add_option("--seed", gen.seed, "generator seed");
  generate->add_option("-o,--output", gen_out, "output file")->required();

  // ---- run-mcts ----
  ScenarioArgs mcts_args;
  sc::MctsConfig mcts_cfg;
  sc::RunConfig mcts_run;
  bool mcts_dump_tree = false;
  auto* run_mcts = app.add_subcommand("run-mcts", "run the lookahead policy");
  mcts_args.attach(run_mcts);
  attach_mcts_flags(run_mcts, mcts_cfg);
  attach_run_flags(run_mcts, mcts_run);
  run_mcts->add_flag("--dump-tree", mcts_dump_tree,
                     "print the first decision's search tree");

  // ---- run-escalation ----
  ScenarioArgs esc_args;
  sc::RunConfig esc_run;
  auto* run_esc = app.add_subcommand("run-escalation", "run the escalation policy");
  esc_args.attach(run_esc);
  attach_run_flags(run_esc, esc_run);

  // ---- run-oracle ----
  ScenarioArgs oracle_args;
  sc::RunConfig oracle_run;
  auto* run_oracle =
      app.add_subcommand("run-oracle", "posterior-optimal tour on revealed faults");
  oracle_args.attach(run_oracle);
  attach_run_flags(run_oracle, oracle_run);

  // ---- sweep ----
  std::string plan_file;
  std::string sweep_out = default_output_dir();
  int sweep_jobs = 0;
  auto* sweep = app.add_subcommand("sweep", "run an experiment plan");
  sweep->add_option("plan", plan_file, "experiment plan file")->required();
  sweep->add_option("-o,--output", sweep_out, "output directory");
  sweep->add_option("--jobs", sweep_jobs, "worker threads");
  bool gnuplot_stub = false;
  sweep->add_flag("--gnuplot-stub", gnuplot_stub,
                  "print plot-ready column descriptions");

  // ---- inspect-belief ----
  ScenarioArgs belief_args;
  double belief_at = 60.0;
  sc::RunConfig belief_run;
  auto* inspect = app.add_subcommand("inspect-belief",
                                     "posterior table after revealing calls");
  belief_args.attach(inspect);
  inspect->add_option("--at-minutes", belief_at,
                      "reveal calls up to this minute (no truck movement)");
  attach_run_flags(inspect, belief_run);
  bool show_scenario = false;
  inspect->add_flag("--show-scenario", show_scenario,
                    "also dump the realized scenario");

  // ---- rollout-bench ----
  std::string bench_grid;
  int bench_instances = 50;
  int bench_faults = 8;
  std::uint64_t bench_seed = 1;
  auto* bench = app.add_subcommand("rollout-bench",
                                   "time the tour DP against the heuristic");
  bench->add_option("grid", bench_grid, "grid topology file")->required();
  bench->add_option("--instances", bench_instances, "random instances");
  bench->add_option("--faults", bench_faults, "faults per instance");
  bench->add_option("--seed", bench_seed, "bench seed");

  // ---- dump-tree ----
  ScenarioArgs tree_args;
  sc::MctsConfig tree_cfg;
  sc::RunConfig tree_run;
  auto* dump_tree =
      app.add_subcommand("dump-tree", "serialize one search tree at the depot");
  tree_args.attach(dump_tree);
  attach_mcts_flags(dump_tree, tree_cfg);
  attach_run_flags(dump_tree, tree_run);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const sc::Grid grid = sc::build_grid(sc::GridDocument::load(validate_file));
      long long segments = 0, devices = 0;
      for (const auto& c : grid.circuits()) {
        segments += static_cast<long long>(c.segment_ids().size());
        for (auto id : c.node_ids())
          if (c.is_device(id)) ++devices;
      }
      std::printf("circuits   %zu\n", grid.circuits().size());
      std::printf("lines      %d\n", grid.total_lines());
      std::printf("devices    %lld\n", devices);
      std::printf("segments   %lld\n", segments);
      std::printf("customers  %lld\n", grid.total_customers());
      std::printf("road nodes %d, edges %d (connected)\n",
                  grid.road().node_count(), grid.road().edge_count());
      return 0;
    }

    if (*generate) {
      const sc::GridDocument doc = sc::generate_grid(gen);
      sc::build_grid(doc);  // self-check
      doc.save(gen_out);
      std::printf("wrote %s\n", gen_out.c_str());
      return 0;
    }

    if (*run_mcts) {
      const sc::ScenarioConfig cfg = mcts_args.load();
      const sc::Grid grid = sc::build_grid(sc::GridDocument::load(mcts_args.grid_file));
      if (cfg.depot >= 0 && mcts_run.depot < 0) mcts_run.depot = cfg.depot;
      const sc::PriorVector priors = sc::generate_priors(grid, cfg.storm);
      const auto realization =
          sc::realize_scenario(grid, priors, cfg.rho, cfg.seed, cfg.repairs);
      mcts_cfg.seed = sc::mix_seed(cfg.seed, 0x5EED + mcts_cfg.n_iter);
      if (mcts_dump_tree) {
        const sc::BeliefState belief = sc::refresh_belief(
            grid, priors, sc::CallVector{}, {}, 0.0, mcts_run.epsilon_threshold);
        const auto decision = sc::choose_next_segment(
            grid, belief, sc::resolve_depot(grid, mcts_run.depot), mcts_cfg,
            cfg.repairs, mcts_run.epsilon_threshold, true);
        std::printf("%s", decision.tree_dump.c_str());
        std::printf("root action: segment %d (value %.3f)\n", decision.segment,
                    decision.root_value);
      }
      const auto result = sc::run_lookahead_policy(grid, priors, realization,
                                                   mcts_run, mcts_cfg, cfg.repairs);
      print_trace(result);
      return 0;
    }

    if (*run_esc) {
      const sc::ScenarioConfig cfg = esc_args.load();
      const sc::Grid grid = sc::build_grid(sc::GridDocument::load(esc_args.grid_file));
      if (cfg.depot >= 0 && esc_run.depot < 0) esc_run.depot = cfg.depot;
      const sc::PriorVector priors = sc::generate_priors(grid, cfg.storm);
      const auto realization =
          sc::realize_scenario(grid, priors, cfg.rho, cfg.seed, cfg.repairs);
      print_trace(sc::run_escalation_policy(grid, realization, esc_run));
      return 0;
    }

    if (*run_oracle) {
      const sc::ScenarioConfig cfg = oracle_args.load();
      const sc::Grid grid =
          sc::build_grid(sc::GridDocument::load(oracle_args.grid_file));
      if (cfg.depot >= 0 && oracle_run.depot < 0) oracle_run.depot = cfg.depot;
      const sc::PriorVector priors = sc::generate_priors(grid, cfg.storm);
      const auto realization =
          sc::realize_scenario(grid, priors, cfg.rho, cfg.seed, cfg.repairs);
      print_trace(sc::posterior_optimal_value(grid, realization, oracle_run));
      return 0;
    }

    if (*sweep) {
      sc::ExperimentPlan plan = sc::ExperimentPlan::load(plan_file);
      if (!sweep_out.empty()) plan.output_dir = sweep_out;
      if (sweep_jobs > 0) plan.jobs = sweep_jobs;
      const sc::Grid grid = sc::build_grid(sc::GridDocument::load(plan.grid_file));
      const auto rows = sc::run_sweep(grid, plan);
      const auto cells = sc::summarize(rows);
      std::filesystem::create_directories(plan.output_dir);
      sc::write_file(plan.output_dir + "/episodes.csv", sc::episodes_csv(rows));
      sc::write_file(plan.output_dir + "/summary.csv", sc::summary_csv(cells));
      sc::write_file(plan.output_dir + "/summary.json", sc::summary_json(cells));
      std::printf("wrote %s/{episodes.csv,summary.csv,summary.json}\n",
                  plan.output_dir.c_str());
      if (gnuplot_stub) {
        std::printf("# episodes.csv: x=n_iter y=outage_hours series=policy,rho\n");
        std::printf("# summary.csv: x=n_iter y=mean_outage_hours "
                    "yerr=stderr_outage_hours series=policy,rho\n");
      }
      int failed = 0;
      for (const auto& r : rows) failed += r.failed ? 1 : 0;
      if (failed > 0) {
        std::fprintf(stderr, "%d cell(s) failed; see episodes.csv\n", failed);
        return 2;
      }
      return 0;
    }

    if (*inspect) {
      const sc::ScenarioConfig cfg = belief_args.load();
      const sc::Grid grid =
          sc::build_grid(sc::GridDocument::load(belief_args.grid_file));
      const sc::PriorVector priors = sc::generate_priors(grid, cfg.storm);
      const auto realization =
          sc::realize_scenario(grid, priors, cfg.rho, cfg.seed, cfg.repairs);
      if (show_scenario)
        std::printf("%s\n", sc::describe_realization(grid, realization).c_str());
      sc::EpisodeEngine engine(grid, realization,
                               [&] {
                                 sc::RunConfig rc = belief_run;
                                 if (cfg.depot >= 0 && rc.depot < 0)
                                   rc.depot = cfg.depot;
                                 return rc;
                               }());
      engine.wait_until(belief_at);
      const sc::BeliefState belief = sc::refresh_belief(
          grid, priors, engine.live_calls(), engine.cleared_segments(),
          sc::effective_rho(cfg.rho, belief_at), belief_run.epsilon_threshold);
      std::printf("%s", sc::describe_belief(grid, priors, belief).c_str());
      std::printf("expected customers out: %.3f\n",
                  sc::expected_customers_out(grid, belief));
      return 0;
    }

    if (*bench) {
      const sc::Grid grid = sc::build_grid(sc::GridDocument::load(bench_grid));
      sc::Rng rng(bench_seed);
      const auto lines = grid.all_lines();
      std::printf("instance,faults,dp_minutes,heuristic_minutes,gap,dp_ms,heur_ms\n");
      for (int i = 0; i < bench_instances; ++i) {
        std::map<sc::LineId, double> repairs;
        while (static_cast<int>(repairs.size()) < bench_faults)
          repairs[lines[sc::uniform_index(rng, lines.size())]] =
              sc::uniform_real(rng, 20.0, 180.0);
        const auto path = sc::make_sample_path(
            grid, sc::resolve_depot(grid, -1), repairs);
        const auto t0 = std::chrono::steady_clock::now();
        const auto dp = sc::optimal_tour_dp(grid, path);
        const auto t1 = std::chrono::steady_clock::now();
        const auto heur = sc::heuristic_tour(grid, path);
        const auto t2 = std::chrono::steady_clock::now();
        const double gap =
            dp.outage_minutes > 0
                ? (heur.outage_minutes - dp.outage_minutes) / dp.outage_minutes
                : 0.0;
        std::printf("%d,%zu,%.3f,%.3f,%.4f,%.3f,%.3f\n", i, path.stops.size(),
                    dp.outage_minutes, heur.outage_minutes, gap,
                    std::chrono::duration<double, std::milli>(t1 - t0).count(),
                    std::chrono::duration<double, std::milli>(t2 - t1).count());
      }
      return 0;
    }

    if (*dump_tree) {
      const sc::ScenarioConfig cfg = tree_args.load();
      const sc::Grid grid =
          sc::build_grid(sc::GridDocument::load(tree_args.grid_file));
      const sc::PriorVector priors = sc::generate_priors(grid, cfg.storm);
      tree_cfg.seed = sc::mix_seed(cfg.seed, 0x5EED + tree_cfg.n_iter);
      const sc::BeliefState belief = sc::refresh_belief(
          grid, priors, sc::CallVector{}, {}, 0.0, tree_run.epsilon_threshold);
      const auto decision = sc::choose_next_segment(
          grid, belief, sc::resolve_depot(grid, tree_run.depot), tree_cfg,
          cfg.repairs, tree_run.epsilon_threshold, true);
      std::printf("%s", decision.tree_dump.c_str());
      std::printf("root action: segment %d (value %.3f)\n", decision.segment,
                  decision.root_value);
      return 0;
    }
  } catch (const sc::DocumentError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
