#include <gtest/gtest.h>

#include <algorithm>

#include <mineseek/seek.hpp>
#include <mineseek/verify.hpp>

#include "oracles.hpp"

using namespace mineseek;

namespace {

StrategyProfile pair(double a, double b) {
  return {Eigen::VectorXd::Constant(1, a), Eigen::VectorXd::Constant(1, b)};
}

bool contains(const std::vector<StrategyProfile>& set, const StrategyProfile& x) {
  return std::find(set.begin(), set.end(), x) != set.end();
}

QuadraticMiGame pure_discrete(std::uint64_t seed) {
  CournotParams prm;
  prm.N = 2;
  prm.n_d = 2;
  prm.n_c = 0;
  return cournot_generate(prm, seed);
}

/// Equilibrium check by hand: every agent, every alternative in its own grid.
bool hand_is_ne(const QuadraticMiGame& g, const StrategyProfile& x, double eps) {
  for (std::size_t i = 0; i < g.agents(); ++i) {
    const auto& d = g.sets[i].discrete_domains;
    const double J = oracle::cost(g, i, x[i], x);
    std::vector<std::size_t> idx(d.size(), 0);
    for (;;) {
      Strategy y(static_cast<Eigen::Index>(d.size()));
      for (std::size_t k = 0; k < d.size(); ++k) y[static_cast<Eigen::Index>(k)] = d[k][idx[k]];
      if (J - oracle::cost(g, i, y, x) > eps) return false;
      std::size_t k = d.size();
      bool done = true;
      while (k > 0) {
        --k;
        if (++idx[k] < d[k].size()) {
          done = false;
          break;
        }
        idx[k] = 0;
      }
      if (done) break;
    }
  }
  return true;
}

}  // namespace

TEST(CheckEpsilonMine, CoordinationEquilibria) {
  const auto g = coordination_game();
  const auto v11 = check_epsilon_mine(g, pair(1, 1), 0.0);
  EXPECT_TRUE(v11.is_equilibrium);
  EXPECT_EQ(v11.violations, (std::vector<double>{0.0, 0.0}));
  EXPECT_TRUE(check_epsilon_mine(g, pair(0, 0), 0.0).is_equilibrium);
}

TEST(CheckEpsilonMine, CoordinationNonEquilibrium) {
  const auto v = check_epsilon_mine(coordination_game(), pair(1, 0), 0.0);
  EXPECT_FALSE(v.is_equilibrium);
  EXPECT_EQ(v.violations[0], 0.0);
  EXPECT_EQ(v.violations[1], 1.0);
}

TEST(CheckEpsilonMine, LargeEpsilonAcceptsEverything) {
  CournotParams prm;
  prm.N = 2;
  prm.n_d = 2;
  prm.n_c = 2;
  const auto g = cournot_generate(prm, 4);
  Rng rng(4);
  for (int s = 0; s < 5; ++s) {
    StrategyProfile x{sample_feasible(g.sets[0], rng), sample_feasible(g.sets[1], rng)};
    EXPECT_TRUE(check_epsilon_mine(g, x, 1e12).is_equilibrium);
  }
}

TEST(CheckEpsilonMine, InfeasibleProfileThrows) {
  EXPECT_THROW(check_epsilon_mine(coordination_game(), pair(0.5, 0), 0.0), ArgumentError);
  EXPECT_THROW(check_epsilon_mine(coordination_game(), pair(0, 0), -1.0), ArgumentError);
}

TEST(BruteForceMaster, CoordinationGame) {
  const auto r = brute_force_master(coordination_game(), 1.0);
  EXPECT_EQ(r.profile, pair(1, 1));
  EXPECT_EQ(r.value, -1.0);
  EXPECT_EQ(r.minimizers.size(), 1u);
}

TEST(BruteForceMaster, ZeroGameReturnsFirstProfile) {
  auto g = coordination_game();
  g.C[0][1].setZero();
  g.C[1][0].setZero();
  const auto r = brute_force_master(g, 1.0);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.profile, pair(0, 0));
  EXPECT_EQ(r.minimizers.size(), 4u);
  EXPECT_EQ(brute_force_ne_enumerate(g, 1.0, 0.0).size(), 4u);
}

TEST(BruteForceMaster, CapacityError) {
  CournotParams prm;
  prm.N = 3;
  prm.n_d = 1;
  prm.n_c = 2;
  const auto g = cournot_generate(prm, 1);
  EXPECT_THROW(brute_force_master(g, 1.0), CapacityError);
  EXPECT_THROW(brute_force_ne_enumerate(g, 1.0, 0.0, 1000), CapacityError);
}

TEST(BruteForceNe, CoordinationSets) {
  const auto g = coordination_game();
  const auto ne0 = brute_force_ne_enumerate(g, 1.0, 0.0);
  EXPECT_EQ(ne0, (std::vector<StrategyProfile>{pair(0, 0), pair(1, 1)}));
  EXPECT_EQ(brute_force_ne_enumerate(g, 1.0, 1.0).size(), 4u);
  // the master problem misses the equilibrium (0,0)
  const auto master = brute_force_master(g, 1.0);
  EXPECT_TRUE(contains(ne0, pair(0, 0)));
  EXPECT_FALSE(contains(master.minimizers, pair(0, 0)));
}

TEST(BruteForceNe, MonotoneInEpsilon) {
  const auto g = pure_discrete(12);
  std::size_t last = 0;
  for (double eps : {0.0, 1e3, 1e5, 1e6, 1e7, 1e9}) {
    const auto s = brute_force_ne_enumerate(g, 1.0, eps);
    EXPECT_GE(s.size(), last);
    last = s.size();
  }
  EXPECT_EQ(last, 16u);
}

TEST(OracleConsistency, PureDiscreteInstances) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto g = pure_discrete(seed);
    const auto master = brute_force_master(g, 1.0);
    const auto ne = brute_force_ne_enumerate(g, 1.0, 0.0);
    EXPECT_TRUE(contains(ne, master.profile));
    EXPECT_TRUE(check_epsilon_mine(g, master.profile, 0.0).is_equilibrium);
    EXPECT_NEAR(master.value, oracle::potential(g, master.profile), 1e-9 * std::abs(master.value));
    // check_epsilon_mine agrees exactly with enumeration membership
    detail::for_each_profile(detail::joint_grid(g, 1.0, 1000), [&](const StrategyProfile& x) {
      const bool member = contains(ne, x);
      EXPECT_EQ(check_epsilon_mine(g, x, 0.0).is_equilibrium, member);
      EXPECT_EQ(hand_is_ne(g, x, 1e-6), member);
    });
  }
}

TEST(OracleConsistency, DeskMasterMinimizerIsExactEquilibrium) {
  const auto g = pure_discrete(42);
  EXPECT_TRUE(check_epsilon_mine(g, brute_force_master(g, 1.0).profile, 0.0).is_equilibrium);
}

TEST(LipschitzSlack, BoundsGridError) {
  CournotParams prm;
  prm.N = 2;
  prm.n_d = 1;
  prm.n_c = 2;
  prm.price_lo = prm.cost_lo = 9000;
  prm.price_hi = prm.cost_hi = 9400;
  const auto g = cournot_generate(prm, 6);
  Rng rng(6);
  StrategyProfile x{sample_feasible(g.sets[0], rng), sample_feasible(g.sets[1], rng)};
  EXPECT_EQ(lipschitz_slack(g, 0, x, 0.0), 0.0);
  const double h = g.sets[0].upper[0] / 20.0;
  const auto coarse = oracle::grid_best_response(g, 0, x, 0.0, 20);
  const auto exact = exact_proximal_br(g, 0, x, 0.0);
  EXPECT_LE(coarse.value - exact.value, lipschitz_slack(g, 0, x, h) + 1e-8);
}
