#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "cropmdp/catalog.hpp"
#include "cropmdp/fwl.hpp"
#include "cropmdp/market.hpp"
#include "cropmdp/metrics.hpp"
#include "cropmdp/offline.hpp"

namespace cropmdp {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string catalog_path;
  std::string prices_path;      // CSV of observed prices, or
  std::string synth_spec_path;  // synthetic price spec
  std::uint64_t synth_seed = 0;
  std::optional<std::string> start_date;  // overrides the catalog's
  int step_days = 14;
  int horizon = 26;
  double theta = 0.5;
  double gamma = 0.95;
  double k = -1e5;
  int trials = 10;
  std::uint64_t seed_base = 0;
  std::string output_dir = "out";

  std::optional<double> offline_gamma;  // falls back to gamma
  std::optional<double> oracle_gamma;   // falls back to the offline planner's
  double ses_alpha = 0.5;
  int ses_history_days = 3650;
  PenaltyModel penalties = PenaltyModel::known;
  OfflineSolver offline_solver = OfflineSolver::backward_induction;

  double planner_gamma() const { return offline_gamma.value_or(gamma); }
  double reference_gamma() const { return oracle_gamma.value_or(planner_gamma()); }

  void validate() const {
    if (catalog_path.empty()) throw ConfigError("config: catalog path is required");
    if (prices_path.empty() == synth_spec_path.empty())
      throw ConfigError("config: give exactly one of prices or synth_spec");
    if (step_days < 1) throw ConfigError(fmt::format("config: step_days {} must be >= 1", step_days));
    if (trials < 1) throw ConfigError(fmt::format("config: trials {} must be >= 1", trials));
    if (!(reference_gamma() >= 0.0 && reference_gamma() <= 1.0))
      throw ConfigError(fmt::format("config: oracle_gamma {} outside [0, 1]", reference_gamma()));
    if (!(planner_gamma() >= 0.0 && planner_gamma() <= 1.0))
      throw ConfigError(fmt::format("config: offline_gamma {} outside [0, 1]", planner_gamma()));
    if (!(ses_alpha > 0.0 && ses_alpha <= 1.0))
      throw ConfigError(fmt::format("config: ses_alpha {} outside (0, 1]", ses_alpha));
    if (ses_history_days < step_days)
      throw ConfigError(fmt::format("config: ses_history_days {} shorter than one step", ses_history_days));
    if (start_date) parse_date(*start_date);
    try {
      fwl_config({}).validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(fmt::format("config: {}", e.what()));
    }
  }

  FwlConfig fwl_config(const GreenhouseState& initial) const {
    FwlConfig c;
    c.theta = theta;
    c.gamma = gamma;
    c.k = k;
    c.horizon = horizon;
    c.initial_state = initial;
    c.penalties = penalties;
    return c;
  }
};

inline PenaltyModel parse_penalty_model(const std::string& s) {
  if (s == "known") return PenaltyModel::known;
  if (s == "smoothed") return PenaltyModel::smoothed;
  throw ConfigError(fmt::format("unknown penalty model '{}' (known, smoothed)", s));
}

inline OfflineSolver parse_offline_solver(const std::string& s) {
  if (s == "backward_induction") return OfflineSolver::backward_induction;
  if (s == "value_iteration") return OfflineSolver::value_iteration;
  throw ConfigError(fmt::format("unknown offline solver '{}' (backward_induction, value_iteration)", s));
}

/// Applies the keys present in `doc` on top of `base`. Unknown keys are errors.
inline ExperimentConfig apply_config_json(ExperimentConfig cfg, const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "catalog") cfg.catalog_path = v.get<std::string>();
      else if (key == "prices") cfg.prices_path = v.get<std::string>();
      else if (key == "synth_spec") cfg.synth_spec_path = v.get<std::string>();
      else if (key == "synth_seed") cfg.synth_seed = v.get<std::uint64_t>();
      else if (key == "start_date") cfg.start_date = v.get<std::string>();
      else if (key == "step_days") cfg.step_days = v.get<int>();
      else if (key == "horizon") cfg.horizon = v.get<int>();
      else if (key == "theta") cfg.theta = v.get<double>();
      else if (key == "gamma") cfg.gamma = v.get<double>();
      else if (key == "k") cfg.k = v.get<double>();
      else if (key == "trials") cfg.trials = v.get<int>();
      else if (key == "seed_base") cfg.seed_base = v.get<std::uint64_t>();
      else if (key == "output_dir") cfg.output_dir = v.get<std::string>();
      else if (key == "oracle_gamma") cfg.oracle_gamma = v.get<double>();
      else if (key == "offline_gamma") cfg.offline_gamma = v.get<double>();
      else if (key == "ses_alpha") cfg.ses_alpha = v.get<double>();
      else if (key == "ses_history_days") cfg.ses_history_days = v.get<int>();
      else if (key == "penalty_model") cfg.penalties = parse_penalty_model(v.get<std::string>());
      else if (key == "offline_solver") cfg.offline_solver = parse_offline_solver(v.get<std::string>());
      else if (key.starts_with("_")) continue;
      else throw ConfigError(fmt::format("config: unknown key '{}'", key));
    }
  } catch (const nlohmann::json::type_error& e) {
    throw ConfigError(fmt::format("config: {}", e.what()));
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  // Relative paths inside the file resolve against the file's directory.
  auto cfg = apply_config_json(std::move(base), doc);
  const auto resolve = [&](const char* key, std::string& value) {
    if (doc.contains(key) && std::filesystem::path(value).is_relative())
      value = (path.parent_path() / value).lexically_normal().string();
  };
  resolve("catalog", cfg.catalog_path);
  resolve("prices", cfg.prices_path);
  resolve("synth_spec", cfg.synth_spec_path);
  return cfg;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j{{"catalog", c.catalog_path},
                   {"step_days", c.step_days},
                   {"horizon", c.horizon},
                   {"theta", c.theta},
                   {"gamma", c.gamma},
                   {"k", c.k},
                   {"trials", c.trials},
                   {"seed_base", c.seed_base},
                   {"output_dir", c.output_dir},
                   {"oracle_gamma", c.reference_gamma()},
                   {"offline_gamma", c.planner_gamma()},
                   {"ses_alpha", c.ses_alpha},
                   {"ses_history_days", c.ses_history_days},
                   {"penalty_model", c.penalties == PenaltyModel::known ? "known" : "smoothed"},
                   {"offline_solver",
                    c.offline_solver == OfflineSolver::backward_induction ? "backward_induction" : "value_iteration"}};
  if (!c.prices_path.empty()) j["prices"] = c.prices_path;
  if (!c.synth_spec_path.empty()) {
    j["synth_spec"] = c.synth_spec_path;
    j["synth_seed"] = c.synth_seed;
  }
  if (c.start_date) j["start_date"] = *c.start_date;
  return j;
}

struct ExperimentInputs {
  CropCatalog catalog;
  StateSpace space;
  RevenueOracle truth;
};

inline ExperimentInputs load_inputs(const ExperimentConfig& cfg) {
  cfg.validate();
  CropCatalog cat = load_catalog(cfg.catalog_path, cfg.step_days);
  if (cfg.start_date) cat = CropCatalog(cat.crops(), parse_date(*cfg.start_date), cat.step_days());
  PriceSeries prices = cfg.prices_path.empty() ? synth_prices(cfg.synth_seed, load_synth_spec(cfg.synth_spec_path))
                                               : load_prices(cfg.prices_path);
  StateSpace space(cat);
  RevenueOracle truth(std::move(prices), cat);
  return {std::move(cat), std::move(space), std::move(truth)};
}

/// Crops that can be planted at t = 0 and still mature inside their season.
inline std::vector<std::size_t> plantable_at_start(const CropCatalog& cat) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < cat.size(); ++c)
    if (harvestable_within_season(cat, c, 0)) out.push_back(c);
  return out;
}

inline std::uint64_t trial_seed(const ExperimentConfig& cfg, int trial) {
  return cfg.seed_base + static_cast<std::uint64_t>(trial);
}

/// A newly planted crop drawn uniformly from plantable_at_start.
inline GreenhouseState initial_state(const CropCatalog& cat, std::uint64_t seed) {
  const auto options = plantable_at_start(cat);
  if (options.empty())
    throw ConfigError(fmt::format("no crop can be planted on {} and harvested in season", format_date(cat.start_date())));
  std::mt19937_64 rng(seed);
  const std::size_t c = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
  return {c, 1, cat.crop(c).lifespan, false};
}

inline Trajectory run_online_trial(const ExperimentConfig& cfg, const ExperimentInputs& in,
                                   const GreenhouseState& s0) {
  const auto fwl = cfg.fwl_config(s0);
  if (!in.truth.covers(-1, cfg.horizon - 1))
    throw PriceDataError(fmt::format("missing price coverage: need {} through {}",
                                     format_date(in.catalog.date_of(-1)),
                                     format_date(add_days(in.catalog.date_of(cfg.horizon), -1))));
  return fwl_run(fwl, in.catalog, in.truth, in.space);
}

inline void require_horizon_prices(const ExperimentConfig& cfg, const ExperimentInputs& in) {
  if (!in.truth.covers(0, cfg.horizon - 1))
    throw PriceDataError(fmt::format("missing price coverage: need {} through {}",
                                     format_date(in.catalog.date_of(0)),
                                     format_date(add_days(in.catalog.date_of(cfg.horizon), -1))));
}

inline int ses_history_steps(const ExperimentConfig& cfg) { return cfg.ses_history_days / cfg.step_days; }

inline Trajectory run_offline_trial(const ExperimentConfig& cfg, const ExperimentInputs& in,
                                    const GreenhouseState& s0) {
  require_horizon_prices(cfg, in);
  const auto forecast = ses_forecast_revenue(in.truth, cfg.horizon, cfg.ses_alpha, ses_history_steps(cfg));
  return offline_run(in.catalog, in.space, cfg.horizon, s0, forecast, in.truth, cfg.planner_gamma(), cfg.k,
                     cfg.offline_solver);
}

inline Trajectory run_oracle_trial(const ExperimentConfig& cfg, const ExperimentInputs& in,
                                   const GreenhouseState& s0) {
  require_horizon_prices(cfg, in);
  return offline_run(in.catalog, in.space, cfg.horizon, s0, in.truth, in.truth, cfg.reference_gamma(), cfg.k,
                     cfg.offline_solver);
}

// ---- output ----

inline std::string trajectory_csv(const CropCatalog& cat, const Trajectory& traj) {
  std::string out = "t,date,crop,maturity,expiry,flag,action,reward,revenue,flag_raised\n";
  for (const auto& s : traj.steps)
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", s.t, format_date(cat.date_of(s.t)),
                       cat.crop(s.state_before.crop).id, s.state_before.maturity, s.state_before.expiry,
                       s.state_before.flag ? 1 : 0, action_name(cat, s.action), s.reward, s.revenue,
                       s.flag_raised ? 1 : 0);
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

inline nlohmann::json runtime_json(const RuntimeProfile& p) {
  return {{"build_seconds", p.build_seconds}, {"solve_seconds", p.solve_seconds},
          {"simulate_seconds", p.simulate_seconds}, {"total_seconds", p.total()}};
}

struct TrialRun {
  int trial = 0;
  std::uint64_t seed = 0;
  GreenhouseState initial;
  Trajectory traj;
};

enum class Method { online, offline, oracle };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::online: return "online";
    case Method::offline: return "offline";
    case Method::oracle: return "oracle";
  }
  return "?";
}

inline Trajectory run_trial(Method m, const ExperimentConfig& cfg, const ExperimentInputs& in,
                            const GreenhouseState& s0) {
  switch (m) {
    case Method::online: return run_online_trial(cfg, in, s0);
    case Method::offline: return run_offline_trial(cfg, in, s0);
    case Method::oracle: return run_oracle_trial(cfg, in, s0);
  }
  throw std::logic_error("run_trial: bad method");
}

/// Runs every trial with one method. Writes <method>_trial<i>.csv and
/// <method>_summary.json into output_dir.
inline std::vector<TrialRun> run_method(Method m, const ExperimentConfig& cfg) {
  const auto in = load_inputs(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  std::vector<TrialRun> runs;
  nlohmann::json trials = nlohmann::json::array();
  for (int i = 0; i < cfg.trials; ++i) {
    TrialRun r;
    r.trial = i;
    r.seed = trial_seed(cfg, i);
    r.initial = initial_state(in.catalog, r.seed);
    r.traj = run_trial(m, cfg, in, r.initial);
    write_text(dir / fmt::format("{}_trial{}.csv", method_name(m), i), trajectory_csv(in.catalog, r.traj));
    trials.push_back({{"trial", i},
                      {"seed", r.seed},
                      {"initial_crop", in.catalog.crop(r.initial.crop).id},
                      {"cumulative_revenue", cumulative_revenue(r.traj)},
                      {"cumulative_reward", cumulative_reward(r.traj)},
                      {"runtime", runtime_json(r.traj.runtime)}});
    runs.push_back(std::move(r));
  }
  const nlohmann::json summary{{"method", method_name(m)}, {"config", config_to_json(cfg)}, {"trials", trials}};
  write_text(dir / fmt::format("{}_summary.json", method_name(m)), summary.dump(2) + "\n");
  return runs;
}

inline std::vector<TrialRun> run_online(const ExperimentConfig& cfg) { return run_method(Method::online, cfg); }
inline std::vector<TrialRun> run_offline(const ExperimentConfig& cfg) { return run_method(Method::offline, cfg); }
inline std::vector<TrialRun> run_oracle(const ExperimentConfig& cfg) { return run_method(Method::oracle, cfg); }

struct CompareTrial {
  int trial = 0;
  std::uint64_t seed = 0;
  GreenhouseState initial;
  Trajectory online, offline, oracle;
  RegretSeries online_regret, offline_regret;
};

struct CompareResult {
  std::vector<CompareTrial> trials;

  double mean_online_regret() const { return mean([](const CompareTrial& t) { return t.online_regret.final_regret(); }); }
  double mean_offline_regret() const { return mean([](const CompareTrial& t) { return t.offline_regret.final_regret(); }); }
  double mean_oracle_reward() const { return mean([](const CompareTrial& t) { return cumulative_reward(t.oracle); }); }

  /// (online - offline) as a percentage of the offline planner's regret.
  double regret_gap_percent() const {
    const double off = mean_offline_regret();
    const double diff = mean_online_regret() - off;
    if (off == 0.0) return diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
    return 100.0 * diff / off;
  }

private:
  template <class F>
  double mean(F f) const {
    double s = 0.0;
    for (const auto& t : trials) s += f(t);
    return trials.empty() ? 0.0 : s / static_cast<double>(trials.size());
  }
};

inline CompareTrial compare_trial(const ExperimentConfig& cfg, const ExperimentInputs& in, int i) {
  CompareTrial r;
  r.trial = i;
  r.seed = trial_seed(cfg, i);
  r.initial = initial_state(in.catalog, r.seed);
  r.online = run_online_trial(cfg, in, r.initial);
  r.offline = run_offline_trial(cfg, in, r.initial);
  r.oracle = run_oracle_trial(cfg, in, r.initial);
  r.online_regret = dynamic_regret(r.online, r.oracle);
  r.offline_regret = dynamic_regret(r.offline, r.oracle);
  return r;
}

inline std::string regret_csv(const CropCatalog& cat, const CompareTrial& r) {
  std::string out = "t,date,online_regret,offline_regret,oracle_regret\n";
  for (std::size_t i = 0; i < r.online_regret.per_t.size(); ++i) {
    const int t = r.online_regret.per_t[i].t;
    out += fmt::format("{},{},{},{},0\n", t, format_date(cat.date_of(t)), r.online_regret.per_t[i].cumulative,
                       r.offline_regret.per_t[i].cumulative);
  }
  return out;
}

/// Online, offline and oracle on identical inputs, with regret series.
inline CompareResult run_compare(const ExperimentConfig& cfg) {
  const auto in = load_inputs(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  CompareResult res;
  std::string table =
      "trial,seed,initial_crop,oracle_reward,online_reward,offline_reward,online_revenue,offline_revenue,"
      "online_final_regret,offline_final_regret,regret_difference\n";
  nlohmann::json trials = nlohmann::json::array();
  for (int i = 0; i < cfg.trials; ++i) {
    auto r = compare_trial(cfg, in, i);
    for (auto [m, traj] : {std::pair{Method::online, &r.online}, std::pair{Method::offline, &r.offline},
                           std::pair{Method::oracle, &r.oracle}})
      write_text(dir / fmt::format("{}_trial{}.csv", method_name(m), i), trajectory_csv(in.catalog, *traj));
    write_text(dir / fmt::format("regret_trial{}.csv", i), regret_csv(in.catalog, r));
    const double on = r.online_regret.final_regret(), off = r.offline_regret.final_regret();
    table += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", i, r.seed, in.catalog.crop(r.initial.crop).id,
                         cumulative_reward(r.oracle), cumulative_reward(r.online), cumulative_reward(r.offline),
                         cumulative_revenue(r.online), cumulative_revenue(r.offline), on, off, on - off);
    trials.push_back({{"trial", i},
                      {"online_runtime", runtime_json(r.online.runtime)},
                      {"offline_runtime", runtime_json(r.offline.runtime)},
                      {"oracle_runtime", runtime_json(r.oracle.runtime)}});
    res.trials.push_back(std::move(r));
  }
  write_text(dir / "compare.csv", table);
  const nlohmann::json summary{{"config", config_to_json(cfg)},
                               {"mean_online_final_regret", res.mean_online_regret()},
                               {"mean_offline_final_regret", res.mean_offline_regret()},
                               {"mean_oracle_reward", res.mean_oracle_reward()},
                               {"regret_difference", res.mean_online_regret() - res.mean_offline_regret()},
                               {"regret_gap_percent_of_offline", res.regret_gap_percent()},
                               {"regret_difference_percent_of_oracle_reward",
                                res.mean_oracle_reward() == 0.0
                                    ? 0.0
                                    : 100.0 * (res.mean_online_regret() - res.mean_offline_regret()) /
                                          std::abs(res.mean_oracle_reward())},
                               {"trials", trials}};
  write_text(dir / "compare_summary.json", summary.dump(2) + "\n");
  return res;
}

// ---- sweeps ----

enum class SweepParameter { theta, gamma, step_days };

inline SweepParameter parse_sweep_parameter(const std::string& s) {
  if (s == "theta") return SweepParameter::theta;
  if (s == "gamma") return SweepParameter::gamma;
  if (s == "step_days") return SweepParameter::step_days;
  throw ConfigError(fmt::format("unknown sweep parameter '{}' (theta, gamma, step_days)", s));
}

inline const char* sweep_parameter_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::theta: return "theta";
    case SweepParameter::gamma: return "gamma";
    case SweepParameter::step_days: return "step_days";
  }
  return "?";
}

/// The base config with one parameter replaced. step_days keeps the calendar
/// length horizon * step_days fixed, rounding the new horizon up.
inline ExperimentConfig with_parameter(ExperimentConfig cfg, SweepParameter p, double value) {
  switch (p) {
    case SweepParameter::theta:
      if (!(value >= 0.0 && value <= 1.0)) throw ConfigError(fmt::format("sweep: theta {} outside [0, 1]", value));
      cfg.theta = value;
      break;
    case SweepParameter::gamma:
      if (!(value >= 0.0 && value < 1.0)) throw ConfigError(fmt::format("sweep: gamma {} outside [0, 1)", value));
      cfg.gamma = value;
      break;
    case SweepParameter::step_days: {
      if (value < 1.0 || value != std::floor(value))
        throw ConfigError(fmt::format("sweep: step_days {} must be a positive integer", value));
      const int days = cfg.horizon * cfg.step_days;
      cfg.step_days = static_cast<int>(value);
      cfg.horizon = (days + cfg.step_days - 1) / cfg.step_days;
      break;
    }
  }
  return cfg;
}

struct SweepRow {
  double value = 0.0;
  int trial = 0;
  int horizon = 0;
  double online_revenue = 0.0;
  double online_final_regret = 0.0;
  RuntimeProfile online_runtime;
  RuntimeProfile offline_runtime;  // the oracle solve on the expanded model
};

/// One online + oracle run set per value with seeds shared across values.
/// Writes sweep_<param>.csv (deterministic) and sweep_<param>_timing.json.
inline std::vector<SweepRow> sweep(const ExperimentConfig& base, SweepParameter p, const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("sweep: no values given");
  std::vector<ExperimentConfig> cfgs;
  for (double v : values) cfgs.push_back(with_parameter(base, p, v));
  for (const auto& c : cfgs) c.validate();

  std::vector<SweepRow> rows;
  std::string table = fmt::format("{},trial,seed,horizon,initial_crop,cumulative_revenue,cumulative_reward,final_regret\n",
                                  sweep_parameter_name(p));
  nlohmann::json timing = nlohmann::json::array();
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    const auto& cfg = cfgs[vi];
    const auto in = load_inputs(cfg);
    for (int i = 0; i < cfg.trials; ++i) {
      const auto seed = trial_seed(cfg, i);
      const auto s0 = initial_state(in.catalog, seed);
      const auto online = run_online_trial(cfg, in, s0);
      const auto oracle = run_oracle_trial(cfg, in, s0);
      SweepRow row{values[vi], i, cfg.horizon, cumulative_revenue(online),
                   dynamic_regret(online, oracle).final_regret(), online.runtime, oracle.runtime};
      table += fmt::format("{},{},{},{},{},{},{},{}\n", values[vi], i, seed, cfg.horizon, in.catalog.crop(s0.crop).id,
                           row.online_revenue, cumulative_reward(online), row.online_final_regret);
      timing.push_back({{sweep_parameter_name(p), values[vi]},
                        {"trial", i},
                        {"online_runtime", runtime_json(row.online_runtime)},
                        {"offline_runtime", runtime_json(row.offline_runtime)}});
      rows.push_back(row);
    }
  }
  const std::filesystem::path dir(base.output_dir);
  write_text(dir / fmt::format("sweep_{}.csv", sweep_parameter_name(p)), table);
  write_text(dir / fmt::format("sweep_{}_timing.json", sweep_parameter_name(p)),
             nlohmann::json{{"config", config_to_json(base)}, {"runs", timing}}.dump(2) + "\n");
  return rows;
}

// ---- replay validation ----

struct ValidationReport {
  std::size_t rows = 0;
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Replays a trajectory CSV through the transition rules. With `truth`, the
/// reward and revenue columns are also recomputed.
inline ValidationReport validate_trajectory(const CropCatalog& cat, std::istream& in,
                                            const RevenueOracle* truth = nullptr, double k = -1e5) {
  ValidationReport rep;
  std::string line;
  if (!std::getline(in, line) || line != "t,date,crop,maturity,expiry,flag,action,reward,revenue,flag_raised") {
    rep.errors.push_back("header does not match the trajectory format");
    return rep;
  }
  std::optional<GreenhouseState> expected;
  std::optional<int> prev_t;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    auto fail = [&](const std::string& msg) { rep.errors.push_back(fmt::format("line {}: {}", line_no, msg)); };
    if (f.size() != 10) {
      fail(fmt::format("expected 10 fields, got {}", f.size()));
      continue;
    }
    try {
      const int t = std::stoi(f[0]);
      GreenhouseState s{cat.index_of(f[2]), std::stoi(f[3]), std::stoi(f[4]), f[5] == "1"};
      const Action a = parse_action(cat, f[6]);
      const double r = std::stod(f[7]), rev = std::stod(f[8]);
      const bool raised = f[9] == "1";
      ++rep.rows;
      if (f[1] != format_date(cat.date_of(t))) fail(fmt::format("date {} does not match t={}", f[1], t));
      if (prev_t && t != *prev_t + 1) fail(fmt::format("t={} does not follow t={}", t, *prev_t));
      if (expected && !(s == *expected))
        fail(fmt::format("state ({}, {}, {}, {}) is not the successor of the previous step", f[2], f[3], f[4], f[5]));
      const auto next = transition(cat, s, a, t);
      if (next.flag != raised) fail(fmt::format("flag_raised={} but the rules give {}", raised, next.flag));
      const bool pays = harvest_pays(cat, s, a) && !next.flag;
      if (!pays && rev != 0.0) fail("revenue recorded on a step that earns none");
      if (raised && r != k && truth) fail(fmt::format("flagged step has reward {} instead of {}", r, k));
      if (truth && pays) {
        const double want = truth->revenue(s.crop, t);
        if (std::abs(rev - want) > 1e-9 * std::max(1.0, std::abs(want)) || rev != r)
          fail(fmt::format("revenue {} differs from the true {}", rev, want));
      }
      expected = next;
      prev_t = t;
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }
  if (rep.rows == 0) rep.errors.push_back("no trajectory rows");
  return rep;
}

}  // namespace cropmdp
