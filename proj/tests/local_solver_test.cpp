#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "dads/bounds.hpp"
#include "dads/diagnostics.hpp"
#include "dads/engine.hpp"
#include "dads/local_solver.hpp"
#include "test_support.hpp"

namespace dads {
namespace {

using testing::Rng;

std::vector<ProblemSpec> instances() {
  return {nonconvex_four_agent_problem(), testing::constrained_instance(), testing::two_agent_polynomial_instance()};
}

TEST(LocalLagrangianTest, ZeroMultipliersGiveObjective) {
  const auto spec = nonconvex_four_agent_problem();
  const auto cycle = make_cycle(4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (double x : {0.0, 0.5, 2.5, 7.0}) {
      EXPECT_DOUBLE_EQ(local_lagrangian(spec, cycle, i, Vec{x}, DualBlock::zeros_for(spec)),
                       eval_objective(spec, i, Vec{x}));
    }
  }
}

TEST(LocalLagrangianTest, OwnLambdaBlock) {
  const auto spec = nonconvex_four_agent_problem();
  DualBlock d = DualBlock::zeros_for(spec);
  d.lambda[0] = 0.2;
  EXPECT_NEAR(local_lagrangian(spec, make_cycle(4), 0, Vec{0.5}, d), -0.3, 1e-15);
}

TEST(LocalLagrangianTest, MatchesHandAssembledOracle) {
  Rng rng(5);
  for (const auto& spec : instances()) {
    const auto cycle = make_cycle(spec.n_agents);
    for (int s = 0; s < 200; ++s) {
      const std::size_t i = static_cast<std::size_t>(s) % spec.n_agents;
      const DualBlock d = testing::random_dual(rng, spec, 2.0);
      const Vec x = testing::random_vec(rng, spec.dim, spec.domain.lower[0], spec.domain.upper[0]);
      EXPECT_NEAR(local_lagrangian(spec, cycle, i, x, d), testing::lagrangian_oracle(spec, i, x, d), 1e-12);
    }
  }
}

TEST(LocalLagrangianTest, SumOverAgentsIsTheCoupledLagrangian) {
  Rng rng(8);
  for (const auto& spec : instances()) {
    const auto cycle = make_cycle(spec.n_agents);
    for (int s = 0; s < 50; ++s) {
      GlobalDual g = GlobalDual::zeros(spec);
      for (auto& mu : g.mu) mu = testing::random_vec(rng, spec.constraint_dim(), 0.0, 2.0);
      g.lambda = testing::random_vec(rng, spec.stacked_dim(), 0.0, 2.0);
      g.w = testing::random_vec(rng, spec.stacked_dim(), 0.0, 2.0);
      std::vector<Vec> x;
      for (std::size_t i = 0; i < spec.n_agents; ++i)
        x.push_back(testing::random_vec(rng, spec.dim, spec.domain.lower[0], spec.domain.upper[0]));
      const auto blocks = g.blocks();
      double sum = 0.0;
      for (std::size_t i = 0; i < spec.n_agents; ++i) sum += local_lagrangian(spec, cycle, i, x[i], blocks[i]);
      EXPECT_NEAR(sum, global_lagrangian(spec, cycle, x, g), 1e-10);
    }
  }
}

TEST(LocalLagrangianTest, RejectsBadShapes) {
  const auto spec = nonconvex_four_agent_problem();
  const auto cycle = make_cycle(4);
  DualBlock d = DualBlock::zeros_for(spec);
  EXPECT_THROW(local_lagrangian(spec, cycle, 0, Vec{0.5, 1.0}, d), InvalidInput);
  d.lambda.pop_back();
  EXPECT_THROW(local_lagrangian(spec, cycle, 0, Vec{0.5}, d), InvalidInput);
}

TEST(SolveLocalTest, QuadraticAgentAtZeroMultipliers) {
  const auto spec = nonconvex_four_agent_problem();
  const auto sol = solve_local(spec, make_cycle(4), 2, DualBlock::zeros_for(spec));
  EXPECT_EQ(sol.minimizer, Vec{0.0});
  EXPECT_DOUBLE_EQ(sol.value, 0.0625);
  EXPECT_EQ(sol.certified_gap, 0.0);
}

TEST(SolveLocalTest, FlatRegionBreaksTiesTowardsSmallest) {
  const auto spec = nonconvex_four_agent_problem();
  const auto sol = solve_local(spec, make_cycle(4), 0, DualBlock::zeros_for(spec));
  EXPECT_EQ(sol.minimizer, Vec{0.0});
  EXPECT_EQ(sol.value, 0.0);
}

TEST(SolveLocalTest, IncreasingAffineIsMinimisedAtLowerBound) {
  auto spec = nonconvex_four_agent_problem();
  spec.objectives[1] = Affine{{2.0}, 1.0};
  const auto sol = solve_local(spec, make_cycle(4), 1, DualBlock::zeros_for(spec));
  EXPECT_EQ(sol.minimizer, Vec{0.0});
  EXPECT_DOUBLE_EQ(sol.value, 1.0);
}

TEST(SolveLocalTest, GridTieBreakIsLexicographic) {
  auto spec = testing::two_agent_polynomial_instance();
  // Symmetric double well (x - 1)^2 (x - 2)^2 on [0, 3]; minima at 1 and 2.
  spec.objectives[0] = Polynomial{{4.0, -12.0, 13.0, -6.0, 1.0}};
  const auto sol = solve_local(spec, make_cycle(2), 0, DualBlock::zeros_for(spec));
  EXPECT_NEAR(sol.minimizer[0], 1.0, 1e-6);
  EXPECT_NEAR(sol.value, 0.0, 1e-12);
}

TEST(SolveLocalTest, MinimizerInsideBoxAndValueConsistent) {
  Rng rng(21);
  for (const auto& spec : instances()) {
    const auto cycle = make_cycle(spec.n_agents);
    for (int s = 0; s < 60; ++s) {
      const std::size_t i = static_cast<std::size_t>(s) % spec.n_agents;
      const DualBlock d = testing::random_dual(rng, spec, 3.0);
      const auto sol = solve_local(spec, cycle, i, d);
      EXPECT_TRUE(spec.domain.contains(sol.minimizer));
      EXPECT_NEAR(sol.value, local_lagrangian(spec, cycle, i, sol.minimizer, d), 1e-12);
      EXPECT_GE(sol.certified_gap, 0.0);
    }
  }
}

TEST(SolveLocalTest, MatchesDenseScanWithinCertifiedGap) {
  Rng rng(34);
  int trials = 0;
  for (const auto& spec : instances()) {
    const auto cycle = make_cycle(spec.n_agents);
    const std::size_t fine = 10 * SolverResolution{}.points_for(1);
    const double spacing = (spec.domain.upper[0] - spec.domain.lower[0]) / static_cast<double>(fine - 1);
    for (int s = 0; s < 40; ++s, ++trials) {
      const std::size_t i = static_cast<std::size_t>(s) % spec.n_agents;
      const DualBlock d = testing::random_dual(rng, spec, 3.0);
      const auto sol = solve_local(spec, cycle, i, d);
      const double scan = testing::dense_scan_minimum(spec, i, d, fine);
      const double scan_gap = lagrangian_lipschitz_bound(spec, cycle, i, d) * 0.5 * spacing;
      EXPECT_LE(sol.value, scan + sol.certified_gap + 1e-12);
      EXPECT_GE(sol.value, scan - scan_gap - 1e-12);
    }
  }
  EXPECT_GE(trials, 100);
}

TEST(SolveLocalTest, GridGapIsSmallAtDefaultResolution) {
  Rng rng(2);
  const auto spec = testing::two_agent_polynomial_instance();
  for (int s = 0; s < 20; ++s) {
    const auto sol = solve_local(spec, make_cycle(2), 0, testing::random_dual(rng, spec, 2.65));
    EXPECT_LE(sol.certified_gap, spec.epsilon / 10.0);
  }
}

TEST(SolveLocalTest, SupgradientInequality) {
  Rng rng(55);
  for (const auto& spec : instances()) {
    const auto cycle = make_cycle(spec.n_agents);
    for (int s = 0; s < 150; ++s) {
      const std::size_t i = static_cast<std::size_t>(s) % spec.n_agents;
      const DualBlock bar = testing::random_dual(rng, spec, 2.0);
      const auto sol_bar = solve_local(spec, cycle, i, bar);
      Vec x_bar = sol_bar.minimizer;
      for (int tries = 0; tries < 50; ++tries) {
        Vec cand = testing::random_vec(rng, spec.dim, spec.domain.lower[0], spec.domain.upper[0]);
        if (in_approx_marginal(spec, cycle, i, cand, bar, spec.epsilon, sol_bar.value)) {
          x_bar = cand;
          break;
        }
      }
      const DualBlock xi = testing::random_dual(rng, spec, 2.0);
      const auto sol = solve_local(spec, cycle, i, xi);
      const Vec d = build_supgradient(spec, cycle, i, x_bar);
      const double rhs = dot(d, subtract(xi.stacked(), bar.stacked())) + spec.epsilon + 1e-9;
      EXPECT_LE(sol.value - sol.certified_gap - sol_bar.value, rhs);
    }
  }
}

TEST(SolveLocalTest, LipschitzInDual) {
  Rng rng(77);
  for (auto spec : {nonconvex_four_agent_problem(), testing::constrained_instance()}) {
    const auto cycle = make_cycle(spec.n_agents);
    const double lip = dual_lipschitz_constant(spec, compute_bounds(spec, 1001));
    for (int s = 0; s < 100; ++s) {
      const std::size_t i = static_cast<std::size_t>(s) % spec.n_agents;
      const DualBlock a = testing::random_dual(rng, spec, 3.0);
      const DualBlock b = testing::random_dual(rng, spec, 3.0);
      const auto qa = solve_local(spec, cycle, i, a);
      const auto qb = solve_local(spec, cycle, i, b);
      EXPECT_LE(std::abs(qa.value - qb.value),
                lip * distance(a.stacked(), b.stacked()) + qa.certified_gap + qb.certified_gap + 1e-12);
    }
  }
}

TEST(SolveLocalTest, DualFunctionIsConcave) {
  Rng rng(99);
  for (const auto& spec : instances()) {
    const auto cycle = make_cycle(spec.n_agents);
    for (int s = 0; s < 60; ++s) {
      const std::size_t i = static_cast<std::size_t>(s) % spec.n_agents;
      const DualBlock a = testing::random_dual(rng, spec, 3.0);
      const DualBlock b = testing::random_dual(rng, spec, 3.0);
      const auto qa = solve_local(spec, cycle, i, a);
      const auto qb = solve_local(spec, cycle, i, b);
      for (double t : {0.25, 0.5, 0.75}) {
        Vec m = a.stacked();
        const Vec bs = b.stacked();
        for (std::size_t k = 0; k < m.size(); ++k) m[k] = t * m[k] + (1.0 - t) * bs[k];
        const DualBlock mid = DualBlock::from_stacked(m, spec.constraint_dim(), spec.stacked_dim());
        const auto qm = solve_local(spec, cycle, i, mid);
        const double gap = std::max({qa.certified_gap, qb.certified_gap, qm.certified_gap});
        EXPECT_GE(qm.value, t * qa.value + (1.0 - t) * qb.value - 2.0 * gap - 1e-12);
      }
    }
  }
}

TEST(ApproxMarginalTest, MinimizerIsAlwaysInside) {
  Rng rng(4);
  const auto spec = testing::constrained_instance();
  const auto cycle = make_cycle(3);
  for (int s = 0; s < 30; ++s) {
    const std::size_t i = static_cast<std::size_t>(s) % 3;
    const DualBlock d = testing::random_dual(rng, spec, 2.0);
    const auto sol = solve_local(spec, cycle, i, d);
    EXPECT_TRUE(in_approx_marginal(spec, cycle, i, sol.minimizer, d, 0.0, sol.value));
  }
}

TEST(ApproxMarginalTest, ZeroToleranceRejectsWorsePoint) {
  auto spec = nonconvex_four_agent_problem();
  const auto cycle = make_cycle(4);
  // f_4 = (x - 0.5)^2 is 0.01 above its minimum at x = 0.6.
  const auto d = DualBlock::zeros_for(spec);
  EXPECT_FALSE(in_approx_marginal(spec, cycle, 3, Vec{0.6}, d, 0.0, 0.0));
  EXPECT_TRUE(in_approx_marginal(spec, cycle, 3, Vec{0.6}, d, 0.0100001, 0.0));
}

TEST(ApproxMarginalTest, FlatRegionPoint) {
  const auto spec = nonconvex_four_agent_problem();
  EXPECT_TRUE(in_approx_marginal(spec, make_cycle(4), 0, Vec{0.05}, DualBlock::zeros_for(spec), 0.1, 0.0));
}

}  // namespace
}  // namespace dads
