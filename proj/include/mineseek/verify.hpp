#pragma once

// Equilibrium verification and exhaustive desk-scale oracles.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mineseek/brsolve.hpp"
#include "mineseek/errors.hpp"
#include "mineseek/game.hpp"

namespace mineseek {

struct NeVerdict {
  bool is_equilibrium = false;
  std::vector<double> violations;  // v_i = J_i(x) - min_y J_i(y, x_-i), certified from above
  std::vector<Strategy> best_responses;
  double epsilon = 0.0;
  double tolerance = 0.0;

  double max_violation() const {
    double m = 0.0;
    for (double v : violations) m = std::max(m, v);
    return m;
  }
};

/// Definition-1 test: every agent's unilateral improvement is at most eps + tol.
/// Each v_i uses a certified lower bound on the best-response value, so a true
/// verdict is never optimistic.
inline NeVerdict check_epsilon_mine(const QuadraticMiGame& g, const StrategyProfile& x, double eps,
                                    double tol = 0.0, const BrOptions& opts = {}) {
  if (!(eps >= 0.0) || !(tol >= 0.0)) throw ArgumentError("epsilon and tolerance must be >= 0");
  if (x.size() != g.agents()) throw ArgumentError("profile does not match the game");
  for (std::size_t i = 0; i < g.agents(); ++i) {
    const auto v = feasibility_violations(g.sets[i], x[i]);
    if (!v.empty()) throw ArgumentError("agent " + std::to_string(i) + ": " + v.front());
  }
  NeVerdict out;
  out.epsilon = eps;
  out.tolerance = tol;
  out.is_equilibrium = true;
  for (std::size_t i = 0; i < g.agents(); ++i) {
    const BrResult br = exact_proximal_br(g, i, x, 0.0, opts);
    const double v = std::max(0.0, static_cast<double>(detail::cost_of(g, i, x[i], x) - br.lower_bound_ext));
    out.violations.push_back(v);
    out.best_responses.push_back(br.argmin);
    if (!(v <= eps + tol)) out.is_equilibrium = false;
  }
  return out;
}

namespace detail {

/// Grid points l, l+h, ..., plus u when the grid does not land on it.
inline std::vector<double> axis_grid(double l, double u, double h) {
  std::vector<double> pts;
  if (l == u) return {l};
  const auto steps = static_cast<std::size_t>(std::floor((u - l) / h + 1e-9));
  for (std::size_t k = 0; k <= steps; ++k) pts.push_back(std::min(u, l + static_cast<double>(k) * h));
  if (u - pts.back() > 1e-12 * std::max(1.0, std::abs(u))) pts.push_back(u);
  return pts;
}

/// Every strategy of one agent on the discretized set, lexicographic order.
inline std::vector<Strategy> agent_grid(const MixedIntegerBox& set, double h, std::size_t cap) {
  const std::size_t nd = set.n_d(), nc = set.n_c();
  std::vector<std::vector<double>> axes;
  for (const auto& d : set.discrete_domains) axes.push_back(d);
  if (nc > 0 && !(h > 0.0)) throw ArgumentError("grid step must be positive");
  for (std::size_t k = 0; k < nc; ++k) axes.push_back(axis_grid(set.lower[k], set.upper[k], h));
  std::size_t total = 1;
  for (const auto& a : axes) {
    if (total > cap / a.size()) throw CapacityError("agent grid exceeds the cap of " + std::to_string(cap));
    total *= a.size();
  }
  std::vector<Strategy> out;
  out.reserve(total);
  std::vector<std::size_t> idx(axes.size(), 0);
  const auto n = static_cast<Eigen::Index>(nd + nc);
  for (;;) {
    Strategy y(n);
    for (Eigen::Index k = 0; k < n; ++k) y[k] = axes[k][idx[k]];
    out.push_back(std::move(y));
    std::size_t k = axes.size();
    for (;;) {
      if (k == 0) return out;
      --k;
      if (++idx[k] < axes[k].size()) break;
      idx[k] = 0;
    }
  }
}

struct JointGrid {
  std::vector<std::vector<Strategy>> per_agent;
  std::size_t total = 1;
};

inline JointGrid joint_grid(const QuadraticMiGame& g, double h, std::size_t cap) {
  g.validate();
  JointGrid jg;
  for (std::size_t i = 0; i < g.agents(); ++i) {
    jg.per_agent.push_back(agent_grid(g.sets[i], h, cap));
    const std::size_t s = jg.per_agent.back().size();
    if (jg.total > cap / s) throw CapacityError("joint grid exceeds the cap of " + std::to_string(cap));
    jg.total *= s;
  }
  return jg;
}

/// Calls f(profile) for every joint grid profile, agent 0 most significant.
template <class F>
void for_each_profile(const JointGrid& jg, F&& f) {
  const std::size_t N = jg.per_agent.size();
  std::vector<std::size_t> idx(N, 0);
  StrategyProfile x(N);
  for (std::size_t i = 0; i < N; ++i) x[i] = jg.per_agent[i][0];
  for (;;) {
    f(static_cast<const StrategyProfile&>(x));
    std::size_t i = N;
    for (;;) {
      if (i == 0) return;
      --i;
      if (++idx[i] < jg.per_agent[i].size()) {
        x[i] = jg.per_agent[i][idx[i]];
        break;
      }
      idx[i] = 0;
      x[i] = jg.per_agent[i][0];
    }
  }
}

}  // namespace detail

inline constexpr std::size_t kDefaultJointCap = 1'000'000;

struct MasterResult {
  StrategyProfile profile;                // first minimizer in lexicographic order
  double value = 0.0;                     // P at the minimizer
  std::vector<StrategyProfile> minimizers;  // every grid profile attaining the minimum
};

/// Exhaustive minimization of the potential over the discretized joint set.
inline MasterResult brute_force_master(const QuadraticMiGame& g, double grid_step,
                                       std::size_t cap = kDefaultJointCap) {
  if (!g.has_symmetric_coupling())
    throw StateError("master problem needs an exact potential (C_ji = C_ij^T)");
  const auto jg = detail::joint_grid(g, grid_step, cap);
  MasterResult r;
  double best = std::numeric_limits<double>::infinity();
  detail::for_each_profile(jg, [&](const StrategyProfile& x) {
    const double P = static_cast<double>(detail::potential_formula(g, x));
    if (P < best) {
      best = P;
      r.minimizers.clear();
    }
    if (P == best) r.minimizers.push_back(x);
  });
  r.value = best;
  r.profile = r.minimizers.front();
  return r;
}

/// Every grid profile with no grid deviation improving any agent by more than eps.
inline std::vector<StrategyProfile> brute_force_ne_enumerate(const QuadraticMiGame& g, double grid_step,
                                                             double eps,
                                                             std::size_t cap = kDefaultJointCap) {
  if (!(eps >= 0.0)) throw ArgumentError("epsilon must be >= 0");
  const auto jg = detail::joint_grid(g, grid_step, cap);
  std::vector<StrategyProfile> out;
  detail::for_each_profile(jg, [&](const StrategyProfile& x) {
    for (std::size_t i = 0; i < g.agents(); ++i) {
      const double J = static_cast<double>(detail::cost_of(g, i, x[i], x));
      double best = J;
      for (const auto& y : jg.per_agent[i])
        best = std::min(best, static_cast<double>(detail::cost_of(g, i, y, x)));
      if (!(J - best <= eps)) return;
    }
    out.push_back(x);
  });
  return out;
}

/// Upper bound on how far the minimum of agent i's proximal cost over a
/// continuous grid of step h can sit above the true minimum:
/// sum_k L_k h / 2 with L_k bounding the k-th partial derivative on the box.
inline double lipschitz_slack(const QuadraticMiGame& g, std::size_t i, const StrategyProfile& x,
                              double grid_step, double tau = 0.0) {
  const auto& set = g.sets.at(i);
  const auto nd = static_cast<Eigen::Index>(set.n_d());
  const auto nc = static_cast<Eigen::Index>(set.n_c());
  if (nc == 0) return 0.0;
  const Eigen::MatrixXd Q = g.C[i][i] + g.C[i][i].transpose();
  const Eigen::VectorXd h = linear_term(g, i, x);
  Eigen::VectorXd mag(nd + nc);
  for (Eigen::Index k = 0; k < nd; ++k) {
    double m = 0.0;
    for (double v : set.discrete_domains[k]) m = std::max(m, std::abs(v));
    mag[k] = m;
  }
  for (Eigen::Index k = 0; k < nc; ++k)
    mag[nd + k] = std::max(std::abs(set.lower[k]), std::abs(set.upper[k]));
  double slack = 0.0;
  for (Eigen::Index k = nd; k < nd + nc; ++k) {
    const double L = std::abs(h[k]) + Q.row(k).cwiseAbs().dot(mag) + tau * g.icrf[i].max_slope();
    slack += 0.5 * L * grid_step;
  }
  return slack;
}

}  // namespace mineseek
