#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

#include "cropmdp/market.hpp"
#include "cropmdp/mdp.hpp"
#include "cropmdp/solver.hpp"
#include "cropmdp/trajectory.hpp"

namespace cropmdp {

/// (base state, timestep) pair of the time-expanded model.
struct ExpandedState {
  GreenhouseState base;
  int t = 0;
};

/// The MDP with the timestep adjoined to the state: layer t holds every base
/// state at timestep t (t = 0..T-1), index t*|S| + s. The transition table is
/// stationary; actions in the last layer end the episode.
struct ExpandedModel {
  std::size_t n_base = 0;
  int horizon = 0;
  DeterministicTransitions table;

  std::size_t size() const { return n_base * static_cast<std::size_t>(horizon); }
  std::size_t index_of(std::size_t base_index, int t) const { return static_cast<std::size_t>(t) * n_base + base_index; }
  int layer_of(std::size_t index) const { return static_cast<int>(index / n_base); }
};

inline ExpandedModel time_expand(const CropCatalog& catalog, const StateSpace& space, int horizon) {
  if (horizon < 1) throw std::invalid_argument("time_expand: horizon must be >= 1");
  ExpandedModel m{space.size(), horizon, DeterministicTransitions(space.size() * horizon, action_count(catalog))};
  for (int t = 0; t < horizon; ++t) {
    const auto frozen = freeze_transitions(catalog, space, t);
    for (std::size_t s = 0; s < space.size(); ++s) {
      for (std::size_t a = 0; a < m.table.n_actions; ++a) {
        m.table.next(m.index_of(s, t), a) =
            t + 1 < horizon ? static_cast<std::int64_t>(m.index_of(static_cast<std::size_t>(frozen.table.next(s, a)), t + 1))
                            : DeterministicTransitions::kTerminal;
      }
    }
  }
  return m;
}

/// Stacks R_0..R_{T-1} into one reward matrix over the expanded states.
template <RevenueSource Source>
RewardMatrix expanded_rewards(const CropCatalog& catalog, const StateSpace& space, const ExpandedModel& model,
                              const Source& revenue, double k) {
  RewardMatrix out(model.size(), model.table.n_actions, 0);
  for (int t = 0; t < model.horizon; ++t) {
    const auto layer = build_reward_matrix(catalog, space, t, revenue, k);
    std::copy(layer.values.begin(), layer.values.end(),
              out.values.begin() + static_cast<std::ptrdiff_t>(model.index_of(0, t) * model.table.n_actions));
  }
  return out;
}

/// Exact values by one backward sweep over the layers.
inline ValueFunction backward_induction(const ExpandedModel& model, const RewardMatrix& r, double gamma) {
  check_shapes(model.table, r);
  ValueFunction vf;
  vf.values.assign(model.size(), 0.0);
  for (int t = model.horizon - 1; t >= 0; --t) {
    for (std::size_t s = 0; s < model.n_base; ++s) {
      const std::size_t i = model.index_of(s, t);
      double best = q_value(model.table, r, gamma, vf.values, i, 0);
      for (std::size_t a = 1; a < model.table.n_actions; ++a)
        best = std::max(best, q_value(model.table, r, gamma, vf.values, i, a));
      vf.values[i] = best;
    }
  }
  vf.iterations = 1;
  return vf;
}

enum class OfflineSolver { backward_induction, value_iteration };

struct OfflinePlan {
  ValueFunction values;
  Policy policy;  // over expanded states
};

inline OfflinePlan offline_plan(const ExpandedModel& model, const RewardMatrix& r, double gamma,
                                OfflineSolver method = OfflineSolver::backward_induction) {
  OfflinePlan plan;
  if (method == OfflineSolver::backward_induction) {
    plan.values = backward_induction(model, r, gamma);
  } else {
    // Acyclic in t: synchronous sweeps are exact after `horizon` sweeps and
    // the next residual is exactly zero.
    plan.values = value_iteration(model.table, r, gamma, 1e-12 * default_eps(r),
                                  model.horizon + 2);
  }
  plan.policy = extract_policy(plan.values, model.table, r, gamma);
  return plan;
}

/// Runs an offline plan open-loop from `initial` against the true rewards.
template <RevenueSource Source>
Trajectory execute_plan(const CropCatalog& catalog, const StateSpace& space, const ExpandedModel& model,
                        const Policy& policy, const GreenhouseState& initial, const Source& truth, double k) {
  Trajectory traj;
  PhaseTimer timer(traj.runtime.simulate_seconds);
  GreenhouseState state = initial;
  for (int t = 0; t < model.horizon; ++t) {
    const Action action = action_at(catalog, policy.action_of[model.index_of(space.index_of(state), t)]);
    auto [step, next] = execute_step(catalog, state, action, t, truth, k);
    traj.steps.push_back(step);
    state = next;
  }
  traj.final_state = state;
  return traj;
}

/// Revenue from forecast prices for timesteps 0..horizon-1.
class ForecastRevenue {
public:
  ForecastRevenue(const CropCatalog& catalog, std::vector<std::vector<double>> prices)
      : prices_(std::move(prices)) {
    if (prices_.size() != catalog.size()) throw std::invalid_argument("ForecastRevenue: one price row per crop");
    for (const auto& c : catalog.crops()) yields_.push_back(c.yield_kg);
  }

  double price(std::size_t crop, int t) const {
    const auto& row = prices_.at(crop);
    if (t < 0 || static_cast<std::size_t>(t) >= row.size())
      throw std::out_of_range(fmt::format("forecast has no price for timestep {}", t));
    return row[static_cast<std::size_t>(t)];
  }
  double revenue(std::size_t crop, int t) const { return yields_.at(crop) * price(crop, t); }

private:
  std::vector<double> yields_;
  std::vector<std::vector<double>> prices_;
};

/// SES forecast of each crop's timestep price from up to `history_steps`
/// timesteps before t = 0 (clipped to the series' first observed day).
inline ForecastRevenue ses_forecast_revenue(const RevenueOracle& truth, int horizon, double alpha, int history_steps) {
  const auto& catalog = truth.catalog();
  const auto cov = truth.series().coverage();
  if (!cov) throw PriceDataError("ses forecast: price series is empty");
  std::vector<std::vector<double>> prices;
  for (std::size_t c = 0; c < catalog.size(); ++c) {
    std::vector<double> history;
    for (int t = -history_steps; t < 0; ++t)
      if (catalog.date_of(t) >= cov->first) history.push_back(truth.price_at(c, t));
    if (history.empty())
      throw PriceDataError(fmt::format("ses forecast: no price history before {} for '{}'",
                                       format_date(catalog.start_date()), catalog.crop(c).id));
    prices.push_back(ses_forecast(history, alpha, horizon));
  }
  return ForecastRevenue(catalog, std::move(prices));
}

/// Builds, solves, and executes the offline planner whose rewards come from
/// `planning_revenue`, evaluated against `truth`.
template <RevenueSource Planning, RevenueSource Truth>
Trajectory offline_run(const CropCatalog& catalog, const StateSpace& space, int horizon,
                       const GreenhouseState& initial, const Planning& planning_revenue, const Truth& truth,
                       double gamma, double k, OfflineSolver method = OfflineSolver::backward_induction) {
  RuntimeProfile profile;
  ExpandedModel model;
  RewardMatrix r;
  {
    PhaseTimer timer(profile.build_seconds);
    model = time_expand(catalog, space, horizon);
    r = expanded_rewards(catalog, space, model, planning_revenue, k);
  }
  OfflinePlan plan;
  {
    PhaseTimer timer(profile.solve_seconds);
    plan = offline_plan(model, r, gamma, method);
  }
  Trajectory traj = execute_plan(catalog, space, model, plan.policy, initial, truth, k);
  profile.simulate_seconds = traj.runtime.simulate_seconds;
  traj.runtime = profile;
  return traj;
}

}  // namespace cropmdp
