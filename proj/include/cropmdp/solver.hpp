#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cropmdp/tables.hpp"

namespace cropmdp {

struct SolverError : std::runtime_error {
  SolverError(const std::string& what, double residual) : std::runtime_error(what), last_residual(residual) {}
  double last_residual;
};

struct ValueFunction {
  std::vector<double> values;
  double residual = 0.0;  // sup-norm Bellman residual of `values`
  int iterations = 0;
  std::vector<double> residual_history;
};

/// One action index per state.
///
/// Tie rule: the lowest action index wins among actions whose Q-values are
/// within kTieTolerance (relative) of the best. With the catalog action layout
/// that is no_act < harvest < plant(c) in catalog order.
struct Policy {
  std::vector<std::size_t> action_of;
};

inline constexpr double kTieTolerance = 1e-9;

inline double default_eps(const RewardMatrix& r) { return 1e-6 * std::max(1.0, r.max_abs()); }

inline void check_shapes(const DeterministicTransitions& p, const RewardMatrix& r) {
  if (p.n_states != r.n_states || p.n_actions != r.n_actions)
    throw std::invalid_argument(fmt::format("transition table is {}x{} but reward matrix is {}x{}", p.n_states,
                                            p.n_actions, r.n_states, r.n_actions));
}

inline double q_value(const DeterministicTransitions& p, const RewardMatrix& r, double gamma,
                      const std::vector<double>& v, std::size_t s, std::size_t a) {
  const auto next = p.next(s, a);
  return r(s, a) + (next == DeterministicTransitions::kTerminal ? 0.0 : gamma * v[static_cast<std::size_t>(next)]);
}

/// One synchronous Bellman sweep: out = T(v). Returns sup |T(v) - v|.
inline double bellman_sweep(const DeterministicTransitions& p, const RewardMatrix& r, double gamma,
                            const std::vector<double>& v, std::vector<double>& out) {
  double residual = 0.0;
  for (std::size_t s = 0; s < p.n_states; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < p.n_actions; ++a) best = std::max(best, q_value(p, r, gamma, v, s, a));
    out[s] = best;
    residual = std::max(residual, std::abs(best - v[s]));
  }
  return residual;
}

inline double bellman_residual(const DeterministicTransitions& p, const RewardMatrix& r, double gamma,
                               const std::vector<double>& v) {
  check_shapes(p, r);
  std::vector<double> tv(v.size());
  return bellman_sweep(p, r, gamma, v, tv);
}

/// Synchronous value iteration from V = 0. Returns the first iterate whose
/// Bellman residual is <= eps. gamma = 1 is accepted but only terminates when
/// every path reaches a terminal transition.
inline ValueFunction value_iteration(const DeterministicTransitions& p, const RewardMatrix& r, double gamma,
                                     std::optional<double> eps = {}, int max_iter = 10000) {
  check_shapes(p, r);
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("value_iteration: gamma must be in [0, 1]");
  if (max_iter < 1) throw std::invalid_argument("value_iteration: max_iter must be positive");
  for (double x : r.values)
    if (!std::isfinite(x)) throw std::invalid_argument("value_iteration: reward matrix has non-finite entries");
  const double tol = eps.value_or(default_eps(r));
  if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: eps must be positive");

  ValueFunction vf;
  vf.values.assign(p.n_states, 0.0);
  std::vector<double> next(p.n_states);
  for (int it = 0; it < max_iter; ++it) {
    const double residual = bellman_sweep(p, r, gamma, vf.values, next);
    vf.residual_history.push_back(residual);
    if (residual <= tol) {
      vf.residual = residual;
      vf.iterations = it;
      return vf;
    }
    vf.values.swap(next);
  }
  const double last = vf.residual_history.back();
  throw SolverError(fmt::format("value iteration did not converge in {} sweeps (residual {})", max_iter, last), last);
}

inline std::size_t greedy_action(const DeterministicTransitions& p, const RewardMatrix& r, double gamma,
                                 const std::vector<double>& v, std::size_t s) {
  std::size_t best_a = 0;
  double best = q_value(p, r, gamma, v, s, 0);
  for (std::size_t a = 1; a < p.n_actions; ++a) {
    const double q = q_value(p, r, gamma, v, s, a);
    if (q > best + kTieTolerance * std::max(1.0, std::abs(best))) {
      best = q;
      best_a = a;
    }
  }
  return best_a;
}

inline Policy extract_policy(const ValueFunction& vf, const DeterministicTransitions& p, const RewardMatrix& r,
                             double gamma) {
  check_shapes(p, r);
  Policy pol;
  pol.action_of.resize(p.n_states);
  for (std::size_t s = 0; s < p.n_states; ++s) pol.action_of[s] = greedy_action(p, r, gamma, vf.values, s);
  return pol;
}

/// Writes the Bellman linear program in CPLEX LP format:
///   minimize sum_s V(s)  s.t.  V(s) - gamma V(s') >= R(s, a)  for all s, a.
/// Variables are V<index>; constraint rows are named c<s>_<a>.
inline void export_lp(const DeterministicTransitions& p, const RewardMatrix& r, double gamma, std::ostream& out) {
  check_shapes(p, r);
  out << fmt::format("\\ Bellman LP: {} states, {} actions, gamma {}\n", p.n_states, p.n_actions, gamma);
  out << "Minimize\n obj:";
  for (std::size_t s = 0; s < p.n_states; ++s) {
    out << (s == 0 ? " " : " + ") << "V" << s;
    if (s % 8 == 7) out << "\n";
  }
  out << "\nSubject To\n";
  for (std::size_t s = 0; s < p.n_states; ++s) {
    for (std::size_t a = 0; a < p.n_actions; ++a) {
      const auto next = p.next(s, a);
      std::string lhs;
      if (next == DeterministicTransitions::kTerminal || gamma == 0.0) {
        lhs = fmt::format("V{}", s);
      } else if (static_cast<std::size_t>(next) == s) {
        lhs = fmt::format("{} V{}", 1.0 - gamma, s);
      } else {
        lhs = fmt::format("V{} - {} V{}", s, gamma, next);
      }
      out << fmt::format(" c{}_{}: {} >= {}\n", s, a, lhs, r(s, a));
    }
  }
  out << "Bounds\n";
  for (std::size_t s = 0; s < p.n_states; ++s) out << " V" << s << " free\n";
  out << "End\n";
}

inline void export_lp(const DeterministicTransitions& p, const RewardMatrix& r, double gamma,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write LP file '{}'", path.string()));
  export_lp(p, r, gamma, out);
  if (!out) throw std::runtime_error(fmt::format("write failed for LP file '{}'", path.string()));
}

}  // namespace cropmdp
