#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "cropmdp/catalog.hpp"
#include "cropmdp/market.hpp"
#include "cropmdp/tables.hpp"

namespace cropmdp {

/// (crop, maturity, expiry, flag). maturity 0 is the dead state.
struct GreenhouseState {
  std::size_t crop = 0;
  int maturity = 0;
  int expiry = 0;
  bool flag = false;

  bool alive() const { return maturity > 0; }
  friend bool operator==(const GreenhouseState&, const GreenhouseState&) = default;
};

enum class ActionKind : std::uint8_t { no_act, harvest, plant };

struct Action {
  ActionKind kind = ActionKind::no_act;
  std::size_t crop = 0;  // meaningful only for plant

  static Action no_act() { return {ActionKind::no_act, 0}; }
  static Action harvest() { return {ActionKind::harvest, 0}; }
  static Action plant(std::size_t c) { return {ActionKind::plant, c}; }

  friend bool operator==(const Action& a, const Action& b) {
    return a.kind == b.kind && (a.kind != ActionKind::plant || a.crop == b.crop);
  }
};

// Action indices follow the tie-break order: no_act, harvest, plant(c) in
// catalog order.
inline std::size_t action_count(const CropCatalog& catalog) { return 2 + catalog.size(); }

inline Action action_at(const CropCatalog& catalog, std::size_t index) {
  if (index == 0) return Action::no_act();
  if (index == 1) return Action::harvest();
  if (index - 2 >= catalog.size()) throw std::out_of_range(fmt::format("action index {} out of range", index));
  return Action::plant(index - 2);
}

inline std::size_t action_index(const CropCatalog& catalog, const Action& a) {
  switch (a.kind) {
    case ActionKind::no_act: return 0;
    case ActionKind::harvest: return 1;
    case ActionKind::plant:
      if (a.crop >= catalog.size()) throw CatalogError(fmt::format("plant action references unknown crop {}", a.crop));
      return 2 + a.crop;
  }
  throw std::logic_error("bad action kind");
}

inline std::string action_name(const CropCatalog& catalog, const Action& a) {
  switch (a.kind) {
    case ActionKind::no_act: return "no_act";
    case ActionKind::harvest: return "harvest";
    case ActionKind::plant: return "plant:" + catalog.crop(a.crop).id;
  }
  throw std::logic_error("bad action kind");
}

inline Action parse_action(const CropCatalog& catalog, std::string_view text) {
  if (text == "no_act") return Action::no_act();
  if (text == "harvest") return Action::harvest();
  if (text.starts_with("plant:")) return Action::plant(catalog.index_of(text.substr(6)));
  throw std::invalid_argument(fmt::format("unknown action '{}'", text));
}

/// Every (crop, maturity, expiry, flag) on the grid spanned by the catalog's
/// largest maturity M and lifespan L: live states with maturity 1..M and
/// expiry 1..L, plus dead states with maturity 0 and expiry 0..L. Ordered by
/// crop, maturity, expiry, flag.
class StateSpace {
public:
  explicit StateSpace(const CropCatalog& catalog)
      : n_crops_(catalog.size()), max_maturity_(catalog.max_maturity()), max_lifespan_(catalog.max_lifespan()) {
    states_.reserve(size());
    for (std::size_t c = 0; c < n_crops_; ++c) {
      for (int e = 0; e <= max_lifespan_; ++e)
        for (bool f : {false, true}) states_.push_back({c, 0, e, f});
      for (int m = 1; m <= max_maturity_; ++m)
        for (int e = 1; e <= max_lifespan_; ++e)
          for (bool f : {false, true}) states_.push_back({c, m, e, f});
    }
  }

  std::size_t size() const { return n_crops_ * block_size(); }
  const GreenhouseState& operator[](std::size_t i) const { return states_[i]; }
  const std::vector<GreenhouseState>& states() const { return states_; }

  bool contains(const GreenhouseState& s) const {
    if (s.crop >= n_crops_ || s.maturity < 0 || s.maturity > max_maturity_) return false;
    return s.maturity == 0 ? (s.expiry >= 0 && s.expiry <= max_lifespan_)
                           : (s.expiry >= 1 && s.expiry <= max_lifespan_);
  }

  std::size_t index_of(const GreenhouseState& s) const {
    if (!contains(s))
      throw std::out_of_range(fmt::format("state ({}, {}, {}, {}) not in state space", s.crop, s.maturity,
                                          s.expiry, s.flag));
    const std::size_t dead = 2 * static_cast<std::size_t>(max_lifespan_ + 1);
    std::size_t offset = s.maturity == 0
                             ? 2 * static_cast<std::size_t>(s.expiry)
                             : dead + 2 * (static_cast<std::size_t>(s.maturity - 1) * max_lifespan_ +
                                           static_cast<std::size_t>(s.expiry - 1));
    return s.crop * block_size() + offset + (s.flag ? 1 : 0);
  }

  /// 2 |C| max(max_maturity) max(lifespan): the live part of the grid.
  std::size_t closed_form_count() const {
    return 2 * n_crops_ * static_cast<std::size_t>(max_maturity_) * static_cast<std::size_t>(max_lifespan_);
  }

  int max_maturity() const { return max_maturity_; }
  int max_lifespan() const { return max_lifespan_; }

private:
  std::size_t block_size() const {
    return 2 * static_cast<std::size_t>(max_lifespan_ + 1) +
           2 * static_cast<std::size_t>(max_maturity_) * static_cast<std::size_t>(max_lifespan_);
  }

  std::size_t n_crops_;
  int max_maturity_;
  int max_lifespan_;
  std::vector<GreenhouseState> states_;
};

inline StateSpace enumerate_states(const CropCatalog& catalog) { return StateSpace(catalog); }

/// Deterministic successor of `state` under `action` taken at timestep t.
/// Seasonality is checked at t + 1, where the successor lives. The input
/// flag never influences the result.
inline GreenhouseState transition(const CropCatalog& catalog, const GreenhouseState& state, const Action& action,
                                  int t) {
  const CropSpec& current = catalog.crop(state.crop);
  GreenhouseState next = state;
  next.flag = false;

  switch (action.kind) {
    case ActionKind::plant: {
      const CropSpec& planted = catalog.crop(action.crop);
      next = {action.crop, 1, planted.lifespan, false};
      next.flag = planted.family == current.family || !harvestable_within_season(catalog, action.crop, t + 1);
      break;
    }
    case ActionKind::harvest: {
      next.expiry = std::max(state.expiry - 1, 0);
      if (!state.alive()) {
        next.maturity = 0;
        next.flag = true;
      } else if (state.maturity >= current.max_maturity) {
        if (current.repeat_harvest) {
          next.maturity = current.max_maturity - *current.harvest_frequency;
        } else {
          // Reset low enough that the crop cannot mature again before it dies.
          next.maturity = (1 + (state.expiry - 1) < current.max_maturity) ? 1 : 0;
        }
      } else {
        next.maturity = std::min(state.maturity + 1, current.max_maturity);
        next.flag = true;
      }
      break;
    }
    case ActionKind::no_act: {
      if (state.alive()) next.maturity = std::min(state.maturity + 1, current.max_maturity);
      next.expiry = std::max(state.expiry - 1, 0);
      break;
    }
  }

  if (next.expiry == 0 || !in_season(catalog, next.crop, t + 1)) next.maturity = 0;
  return next;
}

inline bool harvest_pays(const CropCatalog& catalog, const GreenhouseState& state, const Action& action) {
  return action.kind == ActionKind::harvest && state.alive() &&
         state.maturity >= catalog.crop(state.crop).max_maturity;
}

/// R_t(s, a): k on a constraint violation, y_t(crop) for harvesting a mature
/// live crop, 0 otherwise.
template <RevenueSource Source>
double reward(const CropCatalog& catalog, const GreenhouseState& state, const Action& action, int t,
              const Source& revenue, double k) {
  if (transition(catalog, state, action, t).flag) return k;
  if (harvest_pays(catalog, state, action)) return revenue.revenue(state.crop, t);
  return 0.0;
}

inline double reward(const StateSpace& space, const CropCatalog& catalog, const RewardMatrix& matrix,
                     const GreenhouseState& state, const Action& action) {
  return matrix(space.index_of(state), action_index(catalog, action));
}

template <RevenueSource Source>
RewardMatrix build_reward_matrix(const CropCatalog& catalog, const StateSpace& space, int t, const Source& revenue,
                                 double k) {
  const std::size_t n_actions = action_count(catalog);
  RewardMatrix r(space.size(), n_actions, t);
  for (std::size_t s = 0; s < space.size(); ++s)
    for (std::size_t a = 0; a < n_actions; ++a) r(s, a) = reward(catalog, space[s], action_at(catalog, a), t, revenue, k);
  return r;
}

/// P_t as a successor table plus the per-(s, a) violation marker.
struct FrozenTransitions {
  DeterministicTransitions table;
  std::vector<std::uint8_t> violation;
  int timestep = 0;
};

inline FrozenTransitions freeze_transitions(const CropCatalog& catalog, const StateSpace& space, int t) {
  const std::size_t n_actions = action_count(catalog);
  FrozenTransitions out{DeterministicTransitions(space.size(), n_actions),
                        std::vector<std::uint8_t>(space.size() * n_actions, 0), t};
  for (std::size_t s = 0; s < space.size(); ++s) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      const auto next = transition(catalog, space[s], action_at(catalog, a), t);
      out.table.next(s, a) = static_cast<std::int64_t>(space.index_of(next));
      out.violation[s * n_actions + a] = next.flag ? 1 : 0;
    }
  }
  return out;
}

}  // namespace cropmdp
