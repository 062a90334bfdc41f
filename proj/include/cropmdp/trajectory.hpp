#pragma once

#include <chrono>
#include <cstddef>
#include <utility>
#include <vector>

#include "cropmdp/mdp.hpp"
#include "cropmdp/solver.hpp"

namespace cropmdp {

/// Wall-clock seconds per phase of a run.
struct RuntimeProfile {
  double build_seconds = 0.0;     // model and reward-matrix construction
  double solve_seconds = 0.0;     // value iteration / backward induction and policy extraction
  double simulate_seconds = 0.0;  // executing actions against the true environment

  double total() const { return build_seconds + solve_seconds + simulate_seconds; }

  RuntimeProfile& operator+=(const RuntimeProfile& o) {
    build_seconds += o.build_seconds;
    solve_seconds += o.solve_seconds;
    simulate_seconds += o.simulate_seconds;
    return *this;
  }
};

/// Adds the elapsed time of its scope to one phase counter.
class PhaseTimer {
public:
  explicit PhaseTimer(double& sink) : sink_(sink), start_(std::chrono::steady_clock::now()) {}
  PhaseTimer(const PhaseTimer&) = delete;
  PhaseTimer& operator=(const PhaseTimer&) = delete;
  ~PhaseTimer() {
    sink_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  double& sink_;
  std::chrono::steady_clock::time_point start_;
};

struct TrajectoryStep {
  int t = 0;
  GreenhouseState state_before;
  Action action;
  double reward = 0.0;   // true R_t(s, a), penalties included
  double revenue = 0.0;  // harvest proceeds only
  bool flag_raised = false;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  std::vector<Policy> policies;  // per-timestep policies when recorded
  GreenhouseState final_state;
  RuntimeProfile runtime;

  std::size_t size() const { return steps.size(); }
};

/// Executes one action under the true transition and reward at t.
template <RevenueSource Source>
std::pair<TrajectoryStep, GreenhouseState> execute_step(const CropCatalog& catalog, const GreenhouseState& state,
                                                        const Action& action, int t, const Source& truth, double k) {
  const GreenhouseState next = transition(catalog, state, action, t);
  TrajectoryStep step;
  step.t = t;
  step.state_before = state;
  step.action = action;
  step.flag_raised = next.flag;
  if (next.flag) {
    step.reward = k;
  } else if (harvest_pays(catalog, state, action)) {
    step.revenue = truth.revenue(state.crop, t);
    step.reward = step.revenue;
  }
  return {step, next};
}

}  // namespace cropmdp
