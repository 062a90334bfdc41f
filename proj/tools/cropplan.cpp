// cropplan: experiment driver for the greenhouse planning library.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cropmdp/experiment.hpp"

using namespace cropmdp;

namespace {

struct Overrides {
  std::optional<std::string> config, catalog, prices, synth_spec, start_date, output_dir, penalty_model,
      offline_solver;
  std::optional<std::uint64_t> synth_seed, seed_base;
  std::optional<int> step_days, horizon, trials, ses_history_days;
  std::optional<double> theta, gamma, k, oracle_gamma, offline_gamma, ses_alpha;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config, "JSON config file; flags override its values");
    app->add_option("--catalog", catalog, "crop catalog (JSON)");
    app->add_option("--prices", prices, "price CSV (date,crop_id,price_per_kg,quantity_kg)");
    app->add_option("--synth-spec", synth_spec, "synthetic price spec (JSON), instead of --prices");
    app->add_option("--synth-seed", synth_seed, "seed for synthetic prices");
    app->add_option("--start-date", start_date, "simulation start, YYYY-MM-DD");
    app->add_option("--step-days", step_days, "days per timestep (default 14)");
    app->add_option("-T,--horizon", horizon, "timesteps (default 26)");
    app->add_option("--theta", theta, "smoothing weight (default 0.5)");
    app->add_option("--gamma", gamma, "discount factor (default 0.95)");
    app->add_option("--k", k, "violation penalty (default -1e5)");
    app->add_option("--trials", trials, "number of trials (default 10)");
    app->add_option("--seed-base", seed_base, "trial i uses seed_base + i");
    app->add_option("-o,--output-dir", output_dir, "where CSV and JSON outputs go");
    app->add_option("--oracle-gamma", oracle_gamma, "discount of the perfect-information planner (default: offline gamma)");
    app->add_option("--offline-gamma", offline_gamma, "discount of the forecast planner (default: --gamma)");
    app->add_option("--ses-alpha", ses_alpha, "SES smoothing for the price forecast (default 0.5)");
    app->add_option("--ses-history-days", ses_history_days, "price history fed to the forecast (default 3650)");
    app->add_option("--penalty-model", penalty_model, "known | smoothed");
    app->add_option("--offline-solver", offline_solver, "backward_induction | value_iteration");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = config ? load_config(*config) : ExperimentConfig{};
    if (catalog) c.catalog_path = *catalog;
    if (prices) {
      c.prices_path = *prices;
      if (!synth_spec) c.synth_spec_path.clear();
    }
    if (synth_spec) {
      c.synth_spec_path = *synth_spec;
      if (!prices) c.prices_path.clear();
    }
    if (synth_seed) c.synth_seed = *synth_seed;
    if (start_date) c.start_date = *start_date;
    if (step_days) c.step_days = *step_days;
    if (horizon) c.horizon = *horizon;
    if (theta) c.theta = *theta;
    if (gamma) c.gamma = *gamma;
    if (k) c.k = *k;
    if (trials) c.trials = *trials;
    if (seed_base) c.seed_base = *seed_base;
    if (output_dir) c.output_dir = *output_dir;
    if (oracle_gamma) c.oracle_gamma = *oracle_gamma;
    if (offline_gamma) c.offline_gamma = *offline_gamma;
    if (ses_alpha) c.ses_alpha = *ses_alpha;
    if (ses_history_days) c.ses_history_days = *ses_history_days;
    if (penalty_model) c.penalties = parse_penalty_model(*penalty_model);
    if (offline_solver) c.offline_solver = parse_offline_solver(*offline_solver);
    c.validate();
    return c;
  }
};

void report_runs(const char* method, const std::vector<TrialRun>& runs, const ExperimentConfig& cfg) {
  for (const auto& r : runs)
    fmt::print("{} trial {}: revenue {:.2f}, reward {:.2f}, {:.3f} s\n", method, r.trial,
               cumulative_revenue(r.traj), cumulative_reward(r.traj), r.traj.runtime.total());
  fmt::print("wrote {} trajectories to {}\n", runs.size(), cfg.output_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crop planning experiments: online FWL, offline SES planner, oracle"};
  app.require_subcommand(1);

  Overrides online_o, offline_o, oracle_o, compare_o, sweep_o;
  auto* online = app.add_subcommand("run-online", "online follow-the-weighted-leader runs");
  online_o.attach(online);
  auto* offline = app.add_subcommand("run-offline", "offline planner on an SES price forecast");
  offline_o.attach(offline);
  auto* oracle = app.add_subcommand("run-oracle", "offline planner with the true prices");
  oracle_o.attach(oracle);
  auto* compare = app.add_subcommand("run-compare", "all three methods plus dynamic regret");
  compare_o.attach(compare);

  auto* sweep_cmd = app.add_subcommand("sweep", "repeat online and oracle runs over one parameter");
  sweep_o.attach(sweep_cmd);
  std::string sweep_param;
  std::vector<double> sweep_values;
  sweep_cmd->add_option("-p,--parameter", sweep_param, "theta | gamma | step_days")->required();
  sweep_cmd->add_option("-v,--values", sweep_values, "values to sweep")->required()->delimiter(',');

  auto* validate = app.add_subcommand("validate", "replay trajectory CSVs through the transition rules");
  Overrides validate_o;
  validate_o.attach(validate);
  std::vector<std::string> traj_files;
  validate->add_option("files", traj_files, "trajectory CSV files")->required()->check(CLI::ExistingFile);

  auto* synth = app.add_subcommand("synth-prices", "write a synthetic daily price CSV");
  std::string synth_spec_path, synth_out;
  std::uint64_t synth_seed = 0;
  synth->add_option("--spec", synth_spec_path, "synthetic price spec (JSON)")->required()->check(CLI::ExistingFile);
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--out", synth_out, "output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (online->parsed()) {
      const auto cfg = online_o.resolve();
      report_runs("online", run_online(cfg), cfg);
    } else if (offline->parsed()) {
      const auto cfg = offline_o.resolve();
      report_runs("offline", run_offline(cfg), cfg);
    } else if (oracle->parsed()) {
      const auto cfg = oracle_o.resolve();
      report_runs("oracle", run_oracle(cfg), cfg);
    } else if (compare->parsed()) {
      const auto cfg = compare_o.resolve();
      const auto res = run_compare(cfg);
      for (const auto& t : res.trials)
        fmt::print("trial {}: online regret {:.2f}, offline regret {:.2f}\n", t.trial, t.online_regret.final_regret(),
                   t.offline_regret.final_regret());
      fmt::print("mean final regret: online {:.2f}, offline {:.2f} ({:+.2f}% of offline)\n", res.mean_online_regret(),
                 res.mean_offline_regret(), res.regret_gap_percent());
    } else if (sweep_cmd->parsed()) {
      const auto cfg = sweep_o.resolve();
      const auto p = parse_sweep_parameter(sweep_param);
      const auto rows = sweep(cfg, p, sweep_values);
      for (const auto& r : rows)
        fmt::print("{}={} trial {}: revenue {:.2f}, regret {:.2f}, online solve {:.3f} s, offline solve {:.3f} s\n",
                   sweep_param, r.value, r.trial, r.online_revenue, r.online_final_regret,
                   r.online_runtime.solve_seconds, r.offline_runtime.solve_seconds);
    } else if (validate->parsed()) {
      if (!validate_o.catalog && !validate_o.config) throw ConfigError("validate: --catalog or --config is required");
      ExperimentConfig cfg = validate_o.config ? load_config(*validate_o.config) : ExperimentConfig{};
      if (validate_o.catalog) cfg.catalog_path = *validate_o.catalog;
      if (validate_o.prices) cfg.prices_path = *validate_o.prices;
      if (validate_o.synth_spec) cfg.synth_spec_path = *validate_o.synth_spec;
      if (validate_o.synth_seed) cfg.synth_seed = *validate_o.synth_seed;
      if (validate_o.step_days) cfg.step_days = *validate_o.step_days;
      if (validate_o.start_date) cfg.start_date = *validate_o.start_date;
      if (validate_o.k) cfg.k = *validate_o.k;

      CropCatalog cat = load_catalog(cfg.catalog_path, cfg.step_days);
      if (cfg.start_date) cat = CropCatalog(cat.crops(), parse_date(*cfg.start_date), cat.step_days());
      std::optional<RevenueOracle> truth;
      if (!cfg.prices_path.empty() || !cfg.synth_spec_path.empty())
        truth.emplace(load_inputs(cfg).truth);
      bool all_ok = true;
      for (const auto& f : traj_files) {
        std::ifstream in(f);
        const auto rep = validate_trajectory(cat, in, truth ? &*truth : nullptr, cfg.k);
        if (rep.ok()) {
          fmt::print("{}: ok ({} steps)\n", f, rep.rows);
        } else {
          all_ok = false;
          for (const auto& e : rep.errors) fmt::print(stderr, "{}: {}\n", f, e);
        }
      }
      return all_ok ? 0 : 1;
    } else if (synth->parsed()) {
      const auto series = synth_prices(synth_seed, load_synth_spec(synth_spec_path));
      if (synth_out.empty()) {
        write_prices(series, std::cout);
      } else {
        std::ofstream out(synth_out, std::ios::binary);
        if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", synth_out));
        write_prices(series, out);
      }
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "cropplan: {}\n", e.what());
    return 2;
  }
  return 0;
}
