#pragma once

// Mixed-integer quadratic games
//
//   J_i(x) = (m_i - p_i)^T x_i + (sum_j C_ij x_j)^T x_i,   x_i in X_i,
//
// with X_i a box on the continuous coordinates times finite value sets on the
// discrete ones. Strategies are laid out discrete-first, then continuous.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mineseek/errors.hpp"
#include "mineseek/icrf.hpp"
#include "mineseek/random.hpp"

namespace mineseek {

using Strategy = Eigen::VectorXd;
using StrategyProfile = std::vector<Strategy>;

struct MixedIntegerBox {
  std::vector<std::vector<double>> discrete_domains;  // each strictly sorted, nonempty
  Eigen::VectorXd lower;                              // continuous box
  Eigen::VectorXd upper;

  std::size_t n_d() const { return discrete_domains.size(); }
  std::size_t n_c() const { return static_cast<std::size_t>(lower.size()); }
  std::size_t size() const { return n_d() + n_c(); }

  /// Number of discrete assignments, saturating at `limit + 1`.
  std::size_t discrete_assignments(std::size_t limit) const {
    std::size_t count = 1;
    for (const auto& d : discrete_domains) {
      if (count > limit / d.size()) return limit + 1;
      count *= d.size();
    }
    return count;
  }

  void validate() const {
    if (lower.size() != upper.size())
      throw ArgumentError("continuous bounds have different lengths");
    for (Eigen::Index k = 0; k < lower.size(); ++k) {
      if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]) || !(lower[k] <= upper[k]))
        throw ArgumentError("continuous bounds must be finite with lower <= upper");
    }
    for (const auto& d : discrete_domains) {
      if (d.empty()) throw ArgumentError("discrete domain must be nonempty");
      for (std::size_t j = 0; j < d.size(); ++j) {
        if (!std::isfinite(d[j])) throw ArgumentError("discrete domain values must be finite");
        if (j > 0 && !(d[j] > d[j - 1]))
          throw ArgumentError("discrete domain must be strictly sorted");
      }
    }
  }
};

/// Human-readable list of constraints x_i violates; empty iff feasible.
inline std::vector<std::string> feasibility_violations(const MixedIntegerBox& set,
                                                       const Strategy& x) {
  std::vector<std::string> out;
  if (static_cast<std::size_t>(x.size()) != set.size()) {
    out.push_back("length " + std::to_string(x.size()) + " != " + std::to_string(set.size()));
    return out;
  }
  for (std::size_t k = 0; k < set.n_d(); ++k) {
    const auto& d = set.discrete_domains[k];
    if (std::find(d.begin(), d.end(), x[k]) == d.end())
      out.push_back("discrete coordinate " + std::to_string(k) + " = " + std::to_string(x[k]) +
                    " is not in its domain");
  }
  for (std::size_t c = 0; c < set.n_c(); ++c) {
    const double v = x[set.n_d() + c];
    if (!(v >= set.lower[c] && v <= set.upper[c]))
      out.push_back("continuous coordinate " + std::to_string(set.n_d() + c) + " = " +
                    std::to_string(v) + " is outside [" + std::to_string(set.lower[c]) + ", " +
                    std::to_string(set.upper[c]) + "]");
  }
  return out;
}

inline bool feasible_contains(const MixedIntegerBox& set, const Strategy& x) {
  if (static_cast<std::size_t>(x.size()) != set.size()) return false;
  for (std::size_t k = 0; k < set.n_d(); ++k) {
    const auto& d = set.discrete_domains[k];
    if (std::find(d.begin(), d.end(), x[k]) == d.end()) return false;
  }
  for (std::size_t c = 0; c < set.n_c(); ++c) {
    const double v = x[set.n_d() + c];
    if (!(v >= set.lower[c] && v <= set.upper[c])) return false;
  }
  return true;
}

inline Strategy sample_feasible(const MixedIntegerBox& set, Rng& rng) {
  Strategy x(set.size());
  for (std::size_t k = 0; k < set.n_d(); ++k) {
    const auto& d = set.discrete_domains[k];
    x[k] = d[rng.below(d.size())];
  }
  for (std::size_t c = 0; c < set.n_c(); ++c)
    x[set.n_d() + c] = rng.uniform(set.lower[c], set.upper[c]);
  return x;
}

// ---------------------------------------------------------------------------

struct CournotParams {
  int N = 20;
  int n_d = 50;
  int n_c = 50;
  double price_lo = 10e3, price_hi = 20e3;  // EUR/good
  double cost_lo = 7e3, cost_hi = 12e3;     // EUR/good
  double ud_lo = 200.0, ud_hi = 400.0;      // discrete production level
  double uc_lo = 200.0, uc_hi = 400.0;      // continuous capacity
  double coupling = 0.1;                    // |C_ij| entries for i != j
  std::string icrf = "piecewise_affine";    // piecewise_affine | decomposable | l1
  FamilyParams family{};
  double icrf_range = 500.0;
  int icrf_segments = 8;

  bool operator==(const CournotParams&) const = default;
};

struct GenerationInfo {
  CournotParams params;
  std::uint64_t seed = 0;
};

struct QuadraticMiGame {
  std::vector<MixedIntegerBox> sets;
  std::vector<Eigen::VectorXd> m;
  std::vector<Eigen::VectorXd> p;
  std::vector<std::vector<Eigen::MatrixXd>> C;  // C[i][j] is n_i x n_j
  std::vector<IcrfSpec> icrf;
  std::optional<GenerationInfo> generation;

  std::size_t agents() const { return sets.size(); }
  std::size_t dim(std::size_t i) const { return sets[i].size(); }

  void validate() const {
    const std::size_t N = agents();
    if (N == 0) throw ArgumentError("game needs at least one agent");
    if (m.size() != N || p.size() != N || C.size() != N || icrf.size() != N)
      throw ArgumentError("per-agent data does not match the agent count");
    for (std::size_t i = 0; i < N; ++i) {
      sets[i].validate();
      const auto n = static_cast<Eigen::Index>(dim(i));
      if (n == 0) throw ArgumentError("agent " + std::to_string(i) + " has no variables");
      if (m[i].size() != n || p[i].size() != n)
        throw ArgumentError("m/p of agent " + std::to_string(i) + " have the wrong length");
      if (icrf[i].dimension() != dim(i))
        throw ArgumentError("ICRF of agent " + std::to_string(i) + " has the wrong dimension");
      if (C[i].size() != N) throw ArgumentError("coupling row has the wrong length");
      for (std::size_t j = 0; j < N; ++j) {
        if (C[i][j].rows() != n || C[i][j].cols() != static_cast<Eigen::Index>(dim(j)))
          throw ArgumentError("coupling block C[" + std::to_string(i) + "][" + std::to_string(j) +
                              "] has the wrong shape");
      }
    }
  }

  /// C_ji == C_ij^T for all i < j, up to a relative tolerance.
  bool has_symmetric_coupling(double rel_tol = 1e-12) const {
    for (std::size_t i = 0; i < agents(); ++i) {
      for (std::size_t j = i + 1; j < agents(); ++j) {
        if (C[i][j].size() == 0) continue;
        const double scale = std::max(1.0, C[i][j].cwiseAbs().maxCoeff());
        if ((C[j][i] - C[i][j].transpose()).cwiseAbs().maxCoeff() > rel_tol * scale)
          return false;
      }
    }
    return true;
  }
};

// ---------------------------------------------------------------------------
// Evaluation. Accumulation is in long double: Cournot costs reach 1e7 while
// solver tolerances are absolute 1e-8.

namespace detail {

inline void check_profile(const QuadraticMiGame& g, const StrategyProfile& x) {
  if (x.size() != g.agents())
    throw ArgumentError("profile has " + std::to_string(x.size()) + " agents, game has " +
                        std::to_string(g.agents()));
  for (std::size_t i = 0; i < g.agents(); ++i) {
    if (!feasible_contains(g.sets[i], x[i]))
      throw ArgumentError("strategy of agent " + std::to_string(i) + " is infeasible");
  }
}

inline long double dot_block(const Eigen::VectorXd& a, const Eigen::MatrixXd& M,
                             const Eigen::VectorXd& b) {
  long double s = 0.0L;
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    long double row = 0.0L;
    for (Eigen::Index c = 0; c < M.cols(); ++c)
      row += static_cast<long double>(M(r, c)) * b[c];
    s += static_cast<long double>(a[r]) * row;
  }
  return s;
}

/// J_i(y, x_{-i}) without feasibility checks.
inline long double cost_of(const QuadraticMiGame& g, std::size_t i, const Strategy& y,
                           const StrategyProfile& x) {
  long double s = 0.0L;
  for (Eigen::Index k = 0; k < y.size(); ++k)
    s += (static_cast<long double>(g.m[i][k]) - g.p[i][k]) * y[k];
  for (std::size_t j = 0; j < g.agents(); ++j)
    s += dot_block(y, g.C[i][j], j == i ? y : x[j]);
  return s;
}

inline long double potential_formula(const QuadraticMiGame& g, const StrategyProfile& x) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < g.agents(); ++i) {
    for (Eigen::Index k = 0; k < x[i].size(); ++k)
      s += (static_cast<long double>(g.m[i][k]) - g.p[i][k]) * x[i][k];
    s += dot_block(x[i], g.C[i][i], x[i]);
    for (std::size_t j = 0; j < i; ++j) s += dot_block(x[j], g.C[j][i], x[i]);
  }
  return s;
}

}  // namespace detail

/// J_i(x).
inline double cost_eval(const QuadraticMiGame& g, std::size_t i, const StrategyProfile& x) {
  if (i >= g.agents()) throw ArgumentError("agent index out of range");
  detail::check_profile(g, x);
  return static_cast<double>(detail::cost_of(g, i, x[i], x));
}

/// P(x) = sum_i ( h_i(x_i) + sum_{j<i} x_j^T C_ji x_i ).
inline double potential_eval(const QuadraticMiGame& g, const StrategyProfile& x) {
  detail::check_profile(g, x);
  if (!g.has_symmetric_coupling())
    throw StateError("potential requested for a game with C_ji != C_ij^T");
  return static_cast<double>(detail::potential_formula(g, x));
}

/// Linear coefficient of agent i's cost in its own strategy:
/// m_i - p_i + sum_{j != i} C_ij x_j.
inline Eigen::VectorXd linear_term(const QuadraticMiGame& g, std::size_t i,
                                   const StrategyProfile& x) {
  const auto n = static_cast<Eigen::Index>(g.dim(i));
  Eigen::VectorXd h(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    long double s = static_cast<long double>(g.m[i][r]) - g.p[i][r];
    for (std::size_t j = 0; j < g.agents(); ++j) {
      if (j == i) continue;
      for (Eigen::Index c = 0; c < g.C[i][j].cols(); ++c)
        s += static_cast<long double>(g.C[i][j](r, c)) * x[j][c];
    }
    h[r] = static_cast<double>(s);
  }
  return h;
}

struct PotentialViolation {
  std::size_t agent = 0;
  StrategyProfile x;
  Strategy y;
  double delta_potential = 0.0;
  double delta_cost = 0.0;
  double relative_error = 0.0;
};

struct PotentialReport {
  std::size_t samples = 0;
  double max_relative_error = 0.0;
  std::vector<PotentialViolation> violations;
  bool passed() const { return violations.empty(); }
};

/// Samples unilateral deviations (i, x, y_i) and checks
/// P(x_i, x_-i) - P(y_i, x_-i) == J_i(x_i, x_-i) - J_i(y_i, x_-i)
/// to |dP - dJ| / max(1, |dJ|) <= rel_tol.
inline PotentialReport potential_check_exact(const QuadraticMiGame& g, std::size_t sample_count,
                                             std::uint64_t seed, double rel_tol = 1e-9,
                                             std::size_t max_reported = 16) {
  g.validate();
  PotentialReport report;
  Rng rng(seed);
  for (std::size_t s = 0; s < sample_count; ++s) {
    StrategyProfile x(g.agents());
    for (std::size_t j = 0; j < g.agents(); ++j) x[j] = sample_feasible(g.sets[j], rng);
    const std::size_t i = rng.below(g.agents());
    StrategyProfile y = x;
    y[i] = sample_feasible(g.sets[i], rng);

    const long double dP = detail::potential_formula(g, x) - detail::potential_formula(g, y);
    const long double dJ = detail::cost_of(g, i, x[i], x) - detail::cost_of(g, i, y[i], x);
    const double err = static_cast<double>(std::abs(dP - dJ) / std::max(1.0L, std::abs(dJ)));
    report.max_relative_error = std::max(report.max_relative_error, err);
    ++report.samples;
    if (err > rel_tol && report.violations.size() < max_reported)
      report.violations.push_back(
          {i, x, y[i], static_cast<double>(dP), static_cast<double>(dJ), err});
  }
  return report;
}

// ---------------------------------------------------------------------------

inline IcrfSpec make_cournot_icrf(const CournotParams& prm, std::size_t n) {
  if (prm.icrf == "piecewise_affine")
    return piecewise_affine_approx(prm.family, prm.icrf_range, prm.icrf_segments, n);
  if (prm.icrf == "decomposable") return IcrfSpec::decomposable(prm.family, n);
  if (prm.icrf == "l1") return IcrfSpec::l1(n);
  throw ArgumentError("unknown Cournot ICRF '" + prm.icrf + "'");
}

/// Seeded Cournot oligopoly. Diagonal blocks C_ii = B^T B / n_i + I with
/// B ~ U(-1,1); off-diagonal C_ij (i < j) ~ U(-coupling, coupling) with
/// C_ji = C_ij^T. Positive entries are substitutes, negative complements.
inline QuadraticMiGame cournot_generate(const CournotParams& prm, std::uint64_t seed) {
  if (prm.N <= 0 || prm.n_d < 0 || prm.n_c < 0 || prm.n_d + prm.n_c <= 0)
    throw ArgumentError("Cournot dimensions must be positive");
  if (!(prm.price_lo <= prm.price_hi && prm.cost_lo <= prm.cost_hi && prm.ud_lo <= prm.ud_hi &&
        prm.uc_lo <= prm.uc_hi && prm.coupling >= 0.0))
    throw ArgumentError("Cournot parameter ranges are inverted");

  Rng rng(seed);
  const auto N = static_cast<std::size_t>(prm.N);
  const auto n = static_cast<Eigen::Index>(prm.n_d + prm.n_c);
  QuadraticMiGame g;
  g.generation = GenerationInfo{prm, seed};

  for (std::size_t i = 0; i < N; ++i) {
    const double ud = rng.uniform(prm.ud_lo, prm.ud_hi);
    const double uc = rng.uniform(prm.uc_lo, prm.uc_hi);
    MixedIntegerBox box;
    box.discrete_domains.assign(static_cast<std::size_t>(prm.n_d), ud > 0.0 ? std::vector<double>{0.0, ud}
                                                                            : std::vector<double>{0.0});
    box.lower = Eigen::VectorXd::Zero(prm.n_c);
    box.upper = Eigen::VectorXd::Constant(prm.n_c, uc);
    g.sets.push_back(std::move(box));

    Eigen::VectorXd price(n), cost(n);
    for (Eigen::Index k = 0; k < n; ++k) price[k] = rng.uniform(prm.price_lo, prm.price_hi);
    for (Eigen::Index k = 0; k < n; ++k) cost[k] = rng.uniform(prm.cost_lo, prm.cost_hi);
    g.p.push_back(std::move(price));
    g.m.push_back(std::move(cost));
    g.icrf.push_back(make_cournot_icrf(prm, static_cast<std::size_t>(n)));
  }

  g.C.assign(N, std::vector<Eigen::MatrixXd>(N));
  for (std::size_t i = 0; i < N; ++i) {
    Eigen::MatrixXd B(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) B(r, c) = rng.uniform(-1.0, 1.0);
    Eigen::MatrixXd D = B.transpose() * B / static_cast<double>(n);
    D += Eigen::MatrixXd::Identity(n, n);
    // symmetrize exactly
    g.C[i][i] = 0.5 * (D + D.transpose());
  }
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = i + 1; j < N; ++j) {
      Eigen::MatrixXd A(n, n);
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) A(r, c) = rng.uniform(-prm.coupling, prm.coupling);
      g.C[j][i] = A.transpose();
      g.C[i][j] = std::move(A);
    }
  }
  g.validate();
  return g;
}

/// Two agents, x_i in {0, 1}, J_1 = J_2 = -x_1 x_2. Equilibria (0,0) and (1,1);
/// the potential P = -x_1 x_2 is minimized only at (1,1).
inline QuadraticMiGame coordination_game(std::optional<IcrfSpec> icrf = std::nullopt) {
  QuadraticMiGame g;
  for (int i = 0; i < 2; ++i) {
    MixedIntegerBox box;
    box.discrete_domains = {{0.0, 1.0}};
    g.sets.push_back(box);
    g.m.push_back(Eigen::VectorXd::Zero(1));
    g.p.push_back(Eigen::VectorXd::Zero(1));
    g.icrf.push_back(icrf.value_or(IcrfSpec::l1(1)));
  }
  g.C.assign(2, std::vector<Eigen::MatrixXd>(2, Eigen::MatrixXd::Zero(1, 1)));
  g.C[0][1](0, 0) = -1.0;
  g.C[1][0](0, 0) = -1.0;
  g.validate();
  return g;
}

/// Profile with every agent at zero where feasible, else at its smallest
/// feasible value per coordinate.
inline StrategyProfile default_start(const QuadraticMiGame& g) {
  StrategyProfile x(g.agents());
  for (std::size_t i = 0; i < g.agents(); ++i) {
    const auto& s = g.sets[i];
    x[i] = Strategy::Zero(static_cast<Eigen::Index>(s.size()));
    for (std::size_t k = 0; k < s.n_d(); ++k) {
      const auto& d = s.discrete_domains[k];
      x[i][k] = std::find(d.begin(), d.end(), 0.0) != d.end() ? 0.0 : d.front();
    }
    for (std::size_t c = 0; c < s.n_c(); ++c)
      x[i][s.n_d() + c] = std::clamp(0.0, s.lower[c], s.upper[c]);
  }
  return x;
}

}  // namespace mineseek
