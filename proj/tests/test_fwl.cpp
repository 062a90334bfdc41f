#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cropmdp/fwl.hpp"
#include "fixtures.hpp"

using namespace cropmdp;
using cropmdp::fixtures::constant_revenue;
using cropmdp::fixtures::desk_catalog;

namespace {

constexpr std::size_t kAlpha = 0;
constexpr std::size_t kBravo = 1;

RewardMatrix random_matrix(std::mt19937& rng, std::size_t s, std::size_t a) {
  RewardMatrix r(s, a);
  std::uniform_real_distribution<double> u(-1e5, 5e4);
  for (auto& v : r.values) v = u(rng);
  return r;
}

// Prices that move every step, defined from t = -1 on.
struct DriftingRevenue {
  std::vector<double> yields;
  double revenue(std::size_t crop, int t) const {
    return yields.at(crop) * (5.0 + 3.0 * std::sin(0.7 * t + static_cast<double>(crop)) + 0.1 * t);
  }
};

DriftingRevenue drifting(const CropCatalog& cat) {
  DriftingRevenue r;
  for (const auto& c : cat.crops()) r.yields.push_back(c.yield_kg);
  return r;
}

void expect_same_steps(const Trajectory& a, const Trajectory& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.steps[i].state_before, b.steps[i].state_before) << i;
    EXPECT_EQ(a.steps[i].action, b.steps[i].action) << i;
    EXPECT_EQ(a.steps[i].reward, b.steps[i].reward) << i;
    EXPECT_EQ(a.steps[i].revenue, b.steps[i].revenue) << i;
    EXPECT_EQ(a.steps[i].flag_raised, b.steps[i].flag_raised) << i;
  }
  EXPECT_EQ(a.final_state, b.final_state);
}

}  // namespace

TEST(SmoothUpdate, DegenerateThetas) {
  std::mt19937 rng(1);
  const auto prev = random_matrix(rng, 13, 4);
  const auto obs = random_matrix(rng, 13, 4);
  EXPECT_EQ(smooth_update(prev, obs, 0.0).values, prev.values);
  EXPECT_EQ(smooth_update(prev, obs, 1.0).values, obs.values);
}

TEST(SmoothUpdate, HalfwayArithmetic) {
  RewardMatrix prev(1, 1), obs(1, 1);
  prev(0, 0) = 100;
  obs(0, 0) = 200;
  EXPECT_DOUBLE_EQ(smooth_update(prev, obs, 0.5)(0, 0), 150.0);
}

TEST(SmoothUpdate, ShapeMismatchThrows) {
  EXPECT_THROW(smooth_update(RewardMatrix(3, 4), RewardMatrix(4, 3), 0.5), std::invalid_argument);
  EXPECT_THROW(smooth_update(RewardMatrix(3, 4), RewardMatrix(3, 5), 0.5), std::invalid_argument);
}

TEST(SmoothUpdate, ConvexityOnRandomMatrices) {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t s = 1 + rng() % 20, a = 1 + rng() % 6;
    const auto prev = random_matrix(rng, s, a);
    const auto obs = random_matrix(rng, s, a);
    const double theta = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto out = smooth_update(prev, obs, theta);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
      EXPECT_GE(out.values[i], std::min(prev.values[i], obs.values[i])) << trial;
      EXPECT_LE(out.values[i], std::max(prev.values[i], obs.values[i])) << trial;
    }
  }
}

TEST(SmoothUpdate, EstimateStaysInHistoryRange) {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    auto est = random_matrix(rng, 5, 3);
    auto lo = est.values, hi = est.values;
    const double theta = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (int step = 0; step < 20; ++step) {
      const auto obs = random_matrix(rng, 5, 3);
      for (std::size_t i = 0; i < lo.size(); ++i) {
        lo[i] = std::min(lo[i], obs.values[i]);
        hi[i] = std::max(hi[i], obs.values[i]);
      }
      est = smooth_update(est, obs, theta);
      for (std::size_t i = 0; i < lo.size(); ++i) {
        EXPECT_GE(est.values[i], lo[i]);
        EXPECT_LE(est.values[i], hi[i]);
      }
    }
  }
}

TEST(FwlConfig, Validation) {
  FwlConfig c;
  EXPECT_NO_THROW(c.validate());
  c.theta = 1.0;
  EXPECT_NO_THROW(c.validate());
  c.theta = 1.01;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.gamma = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.k = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.horizon = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(FwlRun, OneCropHandTrace) {
  // Repeat crop: matures in 2 steps, re-matures 1 step after each harvest, lives 6 steps.
  const CropCatalog cat({{"c", "f", 2, 6, true, 1, 10.0, {{1, 365}}}}, parse_date("2022-01-01"), 14);
  const auto rev = constant_revenue(cat, {5.0});
  FwlConfig cfg;
  cfg.horizon = 8;
  cfg.initial_state = {0, 1, 6, false};
  const auto traj = fwl_run(cfg, cat, rev, enumerate_states(cat));

  const std::vector<Action> expected{Action::no_act(), Action::harvest(), Action::no_act(), Action::harvest(),
                                     Action::no_act(), Action::harvest(), Action::no_act(), Action::no_act()};
  ASSERT_EQ(traj.size(), 8u);
  for (std::size_t t = 0; t < 8; ++t) {
    EXPECT_EQ(traj.steps[t].action, expected[t]) << t;
    EXPECT_FALSE(traj.steps[t].flag_raised) << t;
    EXPECT_DOUBLE_EQ(traj.steps[t].revenue, expected[t] == Action::harvest() ? 50.0 : 0.0) << t;
  }
  EXPECT_EQ(traj.final_state, (GreenhouseState{0, 0, 0, false}));
}

TEST(FwlRun, SmoothingIrrelevantUnderConstantPrices) {
  const auto cat = desk_catalog();
  const auto rev = constant_revenue(cat, {7.0, 11.0});
  const auto space = enumerate_states(cat);
  FwlConfig cfg;
  cfg.horizon = 20;
  cfg.initial_state = {kAlpha, 1, 4, false};
  cfg.theta = 0.0;
  const auto a = fwl_run(cfg, cat, rev, space);
  cfg.theta = 1.0;
  const auto b = fwl_run(cfg, cat, rev, space);
  expect_same_steps(a, b);
}

TEST(FwlRun, ZeroThetaFreezesPolicyWhenSeasonsAreConstant) {
  const auto cat = desk_catalog();
  FwlConfig cfg;
  cfg.horizon = 10;
  cfg.theta = 0.0;
  cfg.record_policies = true;
  cfg.initial_state = {kBravo, 1, 4, false};
  const auto traj = fwl_run(cfg, cat, drifting(cat), enumerate_states(cat));
  ASSERT_EQ(traj.policies.size(), 10u);
  for (const auto& p : traj.policies) EXPECT_EQ(p.action_of, traj.policies.front().action_of);
}

TEST(FwlRun, ReplaysUnderTrueTransitionsAndRewards) {
  const auto cat = desk_catalog({{1, 120}}, {{60, 300}});
  const auto truth = drifting(cat);
  const auto space = enumerate_states(cat);
  for (double theta : {0.0, 0.3, 1.0})
    for (auto pm : {PenaltyModel::known, PenaltyModel::smoothed}) {
      FwlConfig cfg;
      cfg.theta = theta;
      cfg.penalties = pm;
      cfg.initial_state = {kAlpha, 1, 4, false};
      const auto traj = fwl_run(cfg, cat, truth, space);
      ASSERT_EQ(traj.size(), 26u);
      GreenhouseState s = cfg.initial_state;
      for (const auto& step : traj.steps) {
        EXPECT_EQ(step.state_before, s);
        const auto next = transition(cat, s, step.action, step.t);
        EXPECT_EQ(step.flag_raised, next.flag);
        EXPECT_EQ(step.reward, reward(cat, s, step.action, step.t, truth, cfg.k));
        if (harvest_pays(cat, s, step.action)) {
          EXPECT_EQ(step.revenue, truth.revenue(s.crop, step.t));
        } else {
          EXPECT_EQ(step.revenue, 0.0);
        }
        s = next;
      }
      EXPECT_EQ(traj.final_state, s);
    }
}

TEST(FwlRun, Deterministic) {
  const auto cat = load_catalog(fixtures::data_path("catalog_desk2.json"));
  SynthSpec spec{parse_date("2021-06-01"), parse_date("2023-06-01"),
                 {{"alpha", 10.0, 0.4, 1.5}, {"bravo", 6.0, 0.3, 1.0}}};
  const RevenueOracle truth(synth_prices(5, spec), cat);
  FwlConfig cfg;
  cfg.initial_state = {kBravo, 1, 4, false};
  expect_same_steps(fwl_run(cfg, cat, truth), fwl_run(cfg, cat, truth));
}

TEST(FwlRun, MissingCoverageIsRejected) {
  const auto cat = desk_catalog();
  // Covers t = 0..25 but not the R_{-1} window before the start.
  const RevenueOracle truth(fixtures::constant_series(cat, {1, 1}, "2022-01-01", "2023-01-01"), cat);
  FwlConfig cfg;
  cfg.initial_state = {kAlpha, 1, 4, false};
  try {
    fwl_run(cfg, cat, truth);
    FAIL();
  } catch (const PriceDataError& e) {
    EXPECT_NE(std::string(e.what()).find("missing price coverage"), std::string::npos) << e.what();
  }
}

TEST(FwlRun, SolvedMdpsMeetResidualBound) {
  const auto cat = desk_catalog({{1, 120}}, {{60, 300}});
  const auto space = enumerate_states(cat);
  const auto truth = drifting(cat);
  RewardMatrix est = build_reward_matrix(cat, space, -1, truth, 0.0);
  for (int t = 0; t < 26; ++t) {
    if (t >= 1) est = smooth_update(est, build_reward_matrix(cat, space, t - 1, truth, 0.0), 0.5);
    const auto frozen = freeze_transitions(cat, space, t);
    const auto planning = apply_penalties(est, frozen, -1e5);
    const auto vf = value_iteration(frozen.table, planning, 0.95);
    EXPECT_LE(bellman_residual(frozen.table, planning, 0.95, vf.values), default_eps(planning)) << t;
  }
}
