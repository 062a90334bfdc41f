#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "cropmdp/experiment.hpp"
#include "fixtures.hpp"

using namespace cropmdp;
using cropmdp::fixtures::data_path;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& tag) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = fs::temp_directory_path() / "cropmdp_tests" / (std::string(info->name()) + "_" + tag);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig desk_config(const fs::path& out) {
  auto cfg = load_config(data_path("experiment_desk2.json"));
  cfg.output_dir = out.string();
  return cfg;
}

}  // namespace

TEST(ExperimentConfig, DefaultsMatchReferenceSetup) {
  const ExperimentConfig c;
  EXPECT_EQ(c.step_days, 14);
  EXPECT_EQ(c.horizon, 26);
  EXPECT_EQ(c.theta, 0.5);
  EXPECT_EQ(c.gamma, 0.95);
  EXPECT_EQ(c.k, -1e5);
  EXPECT_EQ(c.trials, 10);
  EXPECT_EQ(c.planner_gamma(), 0.95);
  EXPECT_EQ(c.reference_gamma(), 0.95);
  EXPECT_EQ(c.penalties, PenaltyModel::known);
  EXPECT_EQ(c.offline_solver, OfflineSolver::backward_induction);
}

TEST(ExperimentConfig, FileLoadingAndErrors) {
  const auto c = load_config(data_path("experiment_greenhouse8.json"));
  EXPECT_EQ(c.catalog_path, data_path("catalog_greenhouse8.json"));
  EXPECT_EQ(c.synth_spec_path, data_path("synth_greenhouse8.json"));
  EXPECT_EQ(c.seed_base, 1000u);
  EXPECT_NO_THROW(c.validate());

  EXPECT_THROW(apply_config_json({}, nlohmann::json{{"thetta", 0.4}}), ConfigError);
  EXPECT_THROW(apply_config_json({}, nlohmann::json{{"theta", "high"}}), ConfigError);
  EXPECT_THROW(apply_config_json({}, nlohmann::json{{"penalty_model", "lenient"}}), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);

  auto bad = c;
  bad.prices_path = "x.csv";
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.gamma = 1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.trials = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(InitialState, SeededUniformOverPlantableCrops) {
  const auto cat = load_catalog(data_path("catalog_greenhouse8.json"));
  const auto options = plantable_at_start(cat);
  ASSERT_FALSE(options.empty());
  // Jan 1 start: french beans are out of season.
  EXPECT_EQ(std::count(options.begin(), options.end(), cat.index_of("french_beans")), 0);
  std::set<std::size_t> seen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = initial_state(cat, seed);
    EXPECT_EQ(s, initial_state(cat, seed));
    EXPECT_NE(std::find(options.begin(), options.end(), s.crop), options.end());
    EXPECT_EQ(s.maturity, 1);
    EXPECT_EQ(s.expiry, cat.crop(s.crop).lifespan);
    EXPECT_FALSE(s.flag);
    seen.insert(s.crop);
  }
  EXPECT_EQ(seen.size(), options.size());
}

TEST(RunOnline, WritesOneFilePerTrialWithFullHorizon) {
  const auto dir = scratch_dir("a");
  auto cfg = desk_config(dir);
  cfg.trials = 3;
  const auto runs = run_online(cfg);
  ASSERT_EQ(runs.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(runs[i].seed, cfg.seed_base + static_cast<std::uint64_t>(i));
    EXPECT_EQ(runs[i].traj.size(), 26u);
    const auto text = slurp(dir / fmt::format("online_trial{}.csv", i));
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 27);
  }
  EXPECT_FALSE(fs::exists(dir / "online_trial3.csv"));
  const auto summary = nlohmann::json::parse(slurp(dir / "online_summary.json"));
  EXPECT_EQ(summary["trials"].size(), 3u);
}

TEST(RunCompare, ByteIdenticalOnRerun) {
  const auto a = scratch_dir("a"), b = scratch_dir("b");
  auto cfg = desk_config(a);
  cfg.trials = 2;
  run_compare(cfg);
  cfg.output_dir = b.string();
  run_compare(cfg);
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    if (entry.path().extension() != ".csv") continue;
    EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path();
    ++compared;
  }
  EXPECT_EQ(compared, 2 * 4 + 1);
}

TEST(RunCompare, OracleRegretIsZeroAndOthersNonNegative) {
  const auto dir = scratch_dir("a");
  auto cfg = desk_config(dir);
  cfg.trials = 4;
  const auto res = run_compare(cfg);
  for (const auto& t : res.trials) {
    EXPECT_EQ(dynamic_regret(t.oracle, t.oracle).final_regret(), 0.0);
    // The oracle plans on the same discounted objective as the forecast planner.
    EXPECT_GE(t.offline_regret.per_t.back().cumulative, -1e-9);
  }
  EXPECT_TRUE(fs::exists(dir / "compare.csv"));
  EXPECT_TRUE(fs::exists(dir / "regret_trial3.csv"));
}

TEST(Validate, AcceptsWrittenTrajectoriesAndCatchesTampering) {
  const auto dir = scratch_dir("a");
  auto cfg = desk_config(dir);
  cfg.trials = 1;
  run_compare(cfg);
  const auto in = load_inputs(cfg);
  for (const char* m : {"online", "offline", "oracle"}) {
    std::ifstream f(dir / fmt::format("{}_trial0.csv", m));
    const auto rep = validate_trajectory(in.catalog, f, &in.truth, cfg.k);
    EXPECT_TRUE(rep.ok()) << m << ": " << (rep.errors.empty() ? "" : rep.errors.front());
    EXPECT_EQ(rep.rows, 26u);
  }

  auto text = slurp(dir / "online_trial0.csv");
  // Bump the maturity in the third data row.
  std::vector<std::string> lines;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) lines.push_back(l);
  auto fields = split_csv_line(lines[3]);
  fields[3] = std::to_string(std::stoi(fields[3]) + 1);
  std::string joined;
  for (std::size_t i = 0; i < fields.size(); ++i) joined += (i ? "," : "") + fields[i];
  lines[3] = joined;
  std::string tampered;
  for (const auto& l : lines) tampered += l + "\n";
  std::istringstream bad(tampered);
  const auto rep = validate_trajectory(in.catalog, bad);
  EXPECT_FALSE(rep.ok());

  std::istringstream wrong_header("a,b\n1,2\n");
  EXPECT_FALSE(validate_trajectory(in.catalog, wrong_header).ok());
}

TEST(Sweep, ShapeAndSharedSeeds) {
  const auto dir = scratch_dir("a");
  auto cfg = desk_config(dir);
  cfg.trials = 2;
  const std::vector<double> thetas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  const auto rows = sweep(cfg, SweepParameter::theta, thetas);
  EXPECT_EQ(rows.size(), thetas.size() * 2);
  const auto text = slurp(dir / "sweep_theta.csv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(thetas.size() * 2 + 1));
  EXPECT_TRUE(fs::exists(dir / "sweep_theta_timing.json"));
}

TEST(Sweep, StepDaysKeepsCalendarLength) {
  ExperimentConfig cfg;
  EXPECT_EQ(with_parameter(cfg, SweepParameter::step_days, 21).horizon, 18);
  EXPECT_EQ(with_parameter(cfg, SweepParameter::step_days, 14).horizon, 26);
  EXPECT_EQ(with_parameter(cfg, SweepParameter::step_days, 7).horizon, 52);
  EXPECT_EQ(with_parameter(cfg, SweepParameter::step_days, 7).step_days, 7);
  EXPECT_THROW(with_parameter(cfg, SweepParameter::step_days, 0), ConfigError);
  EXPECT_THROW(with_parameter(cfg, SweepParameter::step_days, 2.5), ConfigError);
  EXPECT_THROW(with_parameter(cfg, SweepParameter::gamma, 1.0), ConfigError);
  EXPECT_THROW(with_parameter(cfg, SweepParameter::theta, -0.1), ConfigError);
  EXPECT_THROW(parse_sweep_parameter("alpha"), ConfigError);
}

TEST(Sweep, LowDiscountHarvestsEarlier) {
  // Alpha pays 1000 every 5 steps, bravo 240 after 2; a myopic planner takes bravo.
  const auto dir = scratch_dir("a");
  auto cfg = desk_config(dir);
  cfg.synth_spec_path.clear();
  cfg.prices_path = (dir / "flat.csv").string();
  fs::create_directories(dir);
  {
    std::ofstream out(cfg.prices_path);
    write_prices(fixtures::constant_series(load_catalog(cfg.catalog_path), {10, 6}, "2021-06-01", "2023-06-01"), out);
  }
  const auto in = load_inputs(cfg);
  const GreenhouseState s0{1, 1, 4, false};
  auto first_harvest_crop = [&](double gamma) {
    auto c = cfg;
    c.gamma = gamma;
    for (const auto& step : run_online_trial(c, in, s0).steps)
      if (step.revenue > 0) return step.state_before.crop;
    return std::size_t{99};
  };
  EXPECT_EQ(first_harvest_crop(0.3), 1u);
  EXPECT_EQ(first_harvest_crop(0.95), 0u);
}

TEST(SynthPricesOutput, DeterministicCsv) {
  const auto spec = load_synth_spec(data_path("synth_desk2.json"));
  std::ostringstream a, b;
  write_prices(synth_prices(3, spec), a);
  write_prices(synth_prices(3, spec), b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_GT(a.str().size(), 1000u);
}

TEST(RunCompare, DeskOnlineRegretSmallAgainstOracleTotal) {
  const auto dir = scratch_dir("a");
  const auto res = run_compare(desk_config(dir));
  const double share = res.mean_online_regret() / res.mean_oracle_reward();
  RecordProperty("online_regret_share", std::to_string(share));
  EXPECT_LT(share, 0.10) << res.mean_online_regret() << " of " << res.mean_oracle_reward();
}
