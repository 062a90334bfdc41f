#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cropmdp {

/// Dense |S| x |A| reward table, row-major by state.
struct RewardMatrix {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> values;
  int timestep_tag = 0;

  RewardMatrix() = default;
  RewardMatrix(std::size_t states, std::size_t actions, int tag = 0)
      : n_states(states), n_actions(actions), values(states * actions, 0.0), timestep_tag(tag) {}

  double& operator()(std::size_t s, std::size_t a) { return values[s * n_actions + a]; }
  double operator()(std::size_t s, std::size_t a) const { return values[s * n_actions + a]; }

  double max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }

  bool same_shape(const RewardMatrix& other) const {
    return n_states == other.n_states && n_actions == other.n_actions;
  }
};

/// Deterministic transition function frozen for one solve. successor[s*|A|+a]
/// is the next state's index, or kTerminal when the episode ends with no
/// further value.
struct DeterministicTransitions {
  static constexpr std::int64_t kTerminal = -1;

  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<std::int64_t> successor;

  DeterministicTransitions() = default;
  DeterministicTransitions(std::size_t states, std::size_t actions)
      : n_states(states), n_actions(actions), successor(states * actions, kTerminal) {}

  std::int64_t next(std::size_t s, std::size_t a) const { return successor[s * n_actions + a]; }
  std::int64_t& next(std::size_t s, std::size_t a) { return successor[s * n_actions + a]; }
};

}  // namespace cropmdp
