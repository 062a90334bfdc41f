#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "cropmdp/market.hpp"
#include "cropmdp/mdp.hpp"
#include "cropmdp/solver.hpp"
#include "cropmdp/trajectory.hpp"

namespace cropmdp {

/// How the planner's reward estimate treats the penalty k.
enum class PenaltyModel {
  /// Smooth only harvest revenue; penalties come from the known P_t each step.
  known,
  /// Smooth the full reward matrix, penalties included.
  smoothed,
};

struct FwlConfig {
  double theta = 0.5;
  double gamma = 0.95;
  double k = -1e5;
  int horizon = 26;
  GreenhouseState initial_state;
  std::uint64_t seed = 0;
  PenaltyModel penalties = PenaltyModel::known;
  bool record_policies = false;
  std::optional<double> eps;
  int max_iter = 10000;

  void validate() const {
    if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument(fmt::format("theta {} outside [0, 1]", theta));
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument(fmt::format("gamma {} outside [0, 1)", gamma));
    if (!(k < 0.0)) throw std::invalid_argument(fmt::format("penalty k {} must be negative", k));
    if (horizon < 1) throw std::invalid_argument(fmt::format("horizon {} must be >= 1", horizon));
  }
};

/// (1 - theta) * estimate + theta * observed, elementwise.
inline RewardMatrix smooth_update(const RewardMatrix& estimate, const RewardMatrix& observed, double theta) {
  if (!estimate.same_shape(observed))
    throw std::invalid_argument(fmt::format("smooth_update: shape {}x{} vs {}x{}", estimate.n_states,
                                            estimate.n_actions, observed.n_states, observed.n_actions));
  RewardMatrix out = estimate;
  out.timestep_tag = observed.timestep_tag + 1;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = (1.0 - theta) * estimate.values[i] + theta * observed.values[i];
  return out;
}

/// Sets every entry P_t marks as a violation to k.
inline RewardMatrix apply_penalties(RewardMatrix r, const FrozenTransitions& p, double k) {
  for (std::size_t i = 0; i < r.values.size(); ++i)
    if (p.violation[i]) r.values[i] = k;
  return r;
}

/// Follow the Weighted Leader on the greenhouse MDP.
///
/// Timesteps t = 0..T-1. The estimate starts at R_hat_0 = R_{-1} and then
/// R_hat_t = (1 - theta) R_hat_{t-1} + theta R_{t-1}, so the action at t only
/// sees prices through t-1. Each step solves the discounted MDP with P frozen
/// at t, executes one action of that policy from the current state, and
/// records the true reward R_t.
template <RevenueSource Source>
Trajectory fwl_run(const FwlConfig& config, const CropCatalog& catalog, const Source& truth,
                   const StateSpace& space) {
  config.validate();
  if (!space.contains(config.initial_state)) throw std::invalid_argument("fwl_run: initial state not in state space");

  const double matrix_k = config.penalties == PenaltyModel::known ? 0.0 : config.k;
  Trajectory traj;
  RewardMatrix estimate;
  {
    PhaseTimer timer(traj.runtime.build_seconds);
    estimate = build_reward_matrix(catalog, space, -1, truth, matrix_k);
  }

  GreenhouseState state = config.initial_state;
  for (int t = 0; t < config.horizon; ++t) {
    FrozenTransitions frozen;
    RewardMatrix planning;
    {
      PhaseTimer timer(traj.runtime.build_seconds);
      if (t >= 1) estimate = smooth_update(estimate, build_reward_matrix(catalog, space, t - 1, truth, matrix_k), config.theta);
      frozen = freeze_transitions(catalog, space, t);
      planning = config.penalties == PenaltyModel::known ? apply_penalties(estimate, frozen, config.k) : estimate;
    }
    Policy policy;
    {
      PhaseTimer timer(traj.runtime.solve_seconds);
      const auto vf = value_iteration(frozen.table, planning, config.gamma, config.eps, config.max_iter);
      policy = extract_policy(vf, frozen.table, planning, config.gamma);
    }
    {
      PhaseTimer timer(traj.runtime.simulate_seconds);
      const Action action = action_at(catalog, policy.action_of[space.index_of(state)]);
      auto [step, next] = execute_step(catalog, state, action, t, truth, config.k);
      traj.steps.push_back(step);
      state = next;
    }
    if (config.record_policies) traj.policies.push_back(std::move(policy));
  }
  traj.final_state = state;
  return traj;
}

/// Overload that also checks the price series spans timesteps -1..T-1.
inline Trajectory fwl_run(const FwlConfig& config, const CropCatalog& catalog, const RevenueOracle& truth) {
  config.validate();
  if (!truth.covers(-1, config.horizon - 1))
    throw PriceDataError(fmt::format("missing price coverage: need {} through {}", format_date(catalog.date_of(-1)),
                                     format_date(add_days(catalog.date_of(config.horizon), -1))));
  return fwl_run(config, catalog, truth, enumerate_states(catalog));
}

}  // namespace cropmdp
