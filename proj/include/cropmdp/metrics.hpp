#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

#include "cropmdp/catalog.hpp"
#include "cropmdp/mdp.hpp"
#include "cropmdp/trajectory.hpp"

namespace cropmdp {

/// Harvest proceeds only; penalties are excluded.
inline double cumulative_revenue(const Trajectory& traj) {
  double total = 0.0;
  for (const auto& s : traj.steps) total += s.revenue;
  return total;
}

/// Realized true reward including penalties.
inline double cumulative_reward(const Trajectory& traj) {
  double total = 0.0;
  for (const auto& s : traj.steps) total += s.reward;
  return total;
}

struct RegretPoint {
  int t = 0;
  double cumulative = 0.0;
};

struct RegretSeries {
  std::vector<RegretPoint> per_t;

  /// |oracle total - subject total| over the whole horizon.
  double final_regret() const { return per_t.empty() ? 0.0 : std::abs(per_t.back().cumulative); }
};

/// Running undiscounted difference of realized rewards, oracle minus subject.
inline RegretSeries dynamic_regret(const Trajectory& subject, const Trajectory& oracle) {
  if (subject.size() != oracle.size())
    throw std::invalid_argument(
        fmt::format("dynamic_regret: horizon mismatch ({} vs {} steps)", subject.size(), oracle.size()));
  RegretSeries out;
  double oracle_sum = 0.0, subject_sum = 0.0;
  for (std::size_t i = 0; i < subject.size(); ++i) {
    if (subject.steps[i].t != oracle.steps[i].t)
      throw std::invalid_argument(fmt::format("dynamic_regret: step {} has timesteps {} and {}", i,
                                              subject.steps[i].t, oracle.steps[i].t));
    oracle_sum += oracle.steps[i].reward;
    subject_sum += subject.steps[i].reward;
    out.per_t.push_back({subject.steps[i].t, oracle_sum - subject_sum});
  }
  return out;
}

struct StateSpaceStats {
  std::uint64_t closed_form_online = 0;
  std::uint64_t enumerated_online = 0;
  std::uint64_t transition_entries_online = 0;  // n * |A| * n with n = closed_form_online
  std::uint64_t n_actions = 0;
  std::optional<std::uint64_t> expanded;
  std::optional<std::uint64_t> transition_entries_expanded;
};

inline StateSpaceStats state_space_stats(const CropCatalog& catalog, std::optional<int> horizon = {}) {
  StateSpaceStats st;
  const StateSpace space(catalog);
  st.closed_form_online = space.closed_form_count();
  st.enumerated_online = space.size();
  st.n_actions = action_count(catalog);
  st.transition_entries_online = st.closed_form_online * st.n_actions * st.closed_form_online;
  if (horizon) {
    if (*horizon < 1) throw std::invalid_argument("state_space_stats: horizon must be >= 1");
    st.expanded = st.closed_form_online * static_cast<std::uint64_t>(*horizon);
    st.transition_entries_expanded = *st.expanded * st.n_actions * *st.expanded;
  }
  return st;
}

inline const RuntimeProfile& runtime_profile(const Trajectory& traj) { return traj.runtime; }

}  // namespace cropmdp
