#include <sstream>

#include <gtest/gtest.h>

#include "dads/graph.hpp"

namespace dads {
namespace {

WeightMatrix ring4() {
  return WeightMatrix({{0.5, 0.25, 0.0, 0.25}, {0.25, 0.5, 0.25, 0.0}, {0.0, 0.25, 0.5, 0.25}, {0.25, 0.0, 0.25, 0.5}});
}

TEST(WeightMatrixTest, RejectsNonSquareAndNonFinite) {
  EXPECT_THROW(WeightMatrix({{1.0, 0.0}, {0.0}}), InvalidInput);
  EXPECT_THROW(WeightMatrix({{std::nan(""), 0.0}, {0.0, 1.0}}), InvalidInput);
  EXPECT_THROW(WeightMatrix(std::vector<std::vector<double>>{}), InvalidInput);
}

TEST(WeightMatrixTest, EdgesPointFromNeighbourToAgent) {
  const WeightMatrix a({{0.5, 0.5, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}});
  ASSERT_EQ(a.edges().size(), 1u);
  EXPECT_EQ(a.edges().front(), (std::pair<std::size_t, std::size_t>{1, 0}));
  EXPECT_EQ(a.in_neighbors(0), std::vector<std::size_t>{1});
  EXPECT_TRUE(a.in_neighbors(1).empty());
}

TEST(NonDegeneracyTest, IdentityPasses) { EXPECT_TRUE(validate_nondegeneracy(WeightMatrix::identity(3), 0.5)); }

TEST(NonDegeneracyTest, SmallOffDiagonalFails) {
  const WeightMatrix a({{0.95, 0.05}, {0.05, 0.95}});
  EXPECT_FALSE(validate_nondegeneracy(a, 0.1));
}

TEST(NonDegeneracyTest, RingWithQuarterWeightsPasses) { EXPECT_TRUE(validate_nondegeneracy(ring4(), 0.25)); }

TEST(NonDegeneracyTest, SmallDiagonalFails) {
  const WeightMatrix a({{0.2, 0.8}, {0.8, 0.2}});
  EXPECT_FALSE(validate_nondegeneracy(a, 0.5));
}

TEST(NonDegeneracyTest, AlphaMinOutsideUnitIntervalThrows) {
  EXPECT_THROW(validate_nondegeneracy(WeightMatrix::identity(2), 0.0), InvalidInput);
  EXPECT_THROW(validate_nondegeneracy(WeightMatrix::identity(2), 1.5), InvalidInput);
}

TEST(BalancedTest, Examples) {
  EXPECT_TRUE(validate_balanced(WeightMatrix::identity(4)));
  EXPECT_TRUE(validate_balanced(WeightMatrix({{0.6, 0.4}, {0.4, 0.6}})));
  EXPECT_FALSE(validate_balanced(WeightMatrix({{0.5, 0.5, 0.0}, {0.5, 0.25, 0.25}, {0.5, 0.25, 0.25}})));
}

TEST(BalancedTest, InvariantUnderTransposition) {
  const std::vector<WeightMatrix> cases{
      ring4(), WeightMatrix({{0.6, 0.4}, {0.4, 0.6}}),
      WeightMatrix({{0.5, 0.5, 0.0}, {0.5, 0.25, 0.25}, {0.5, 0.25, 0.25}}),
      WeightMatrix({{0.7, 0.3, 0.0}, {0.0, 0.7, 0.3}, {0.3, 0.0, 0.7}})};
  for (const auto& a : cases) EXPECT_EQ(validate_balanced(a), validate_balanced(a.transposed()));
}

TEST(PeriodicConnectivityTest, StaticCompleteGraph) {
  const double third = 1.0 / 3.0;
  const auto s = static_schedule(WeightMatrix({{third, third, third}, {third, third, third}, {third, third, third}}), 1, 0.3);
  EXPECT_TRUE(validate_periodic_connectivity(s, 1, 10));
}

TEST(PeriodicConnectivityTest, AlternatingPathsFormACycle) {
  // Round A: 0 -> 1 and 2 -> 0. Round B: 1 -> 2. Union is the cycle 0 -> 1 -> 2 -> 0.
  WeightSchedule s;
  s.matrices.emplace_back(std::vector<std::vector<double>>{{0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}, {0.0, 0.0, 1.0}});
  s.matrices.emplace_back(std::vector<std::vector<double>>{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.5, 0.5}});
  EXPECT_TRUE(validate_periodic_connectivity(s, 2, 10));
  EXPECT_FALSE(validate_periodic_connectivity(s, 1, 10));
}

TEST(PeriodicConnectivityTest, AgentWithoutInEdgesFails) {
  WeightSchedule s;
  s.matrices.emplace_back(std::vector<std::vector<double>>{{0.5, 0.5, 0.0}, {0.5, 0.5, 0.0}, {0.0, 0.0, 1.0}});
  s.matrices.emplace_back(std::vector<std::vector<double>>{{0.5, 0.0, 0.5}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}});
  for (int b = 1; b <= 5; ++b) EXPECT_FALSE(validate_periodic_connectivity(s, b, 12));
}

TEST(PeriodicConnectivityTest, RejectsBadWindow) {
  const auto s = static_schedule(WeightMatrix::identity(2), 1, 0.5);
  EXPECT_THROW(validate_periodic_connectivity(s, 0, 5), InvalidInput);
  EXPECT_THROW(validate_periodic_connectivity(s, 4, 3), InvalidInput);
}

TEST(GossipTest, TwoAgentsAlwaysExchange) {
  const auto s = pairwise_gossip_schedule(2, 7);
  ASSERT_EQ(s.matrices.size(), 1u);
  EXPECT_EQ(s.at(0), WeightMatrix({{0.5, 0.5}, {0.5, 0.5}}));
  EXPECT_EQ(s.at(5), s.at(0));
}

TEST(GossipTest, FourAgentsSeedZeroIsThreePeriodic) {
  const auto s = pairwise_gossip_schedule(4, 0);
  EXPECT_EQ(s.period_hint, 3);
  EXPECT_TRUE(validate_periodic_connectivity(s, 3, 30));
}

TEST(GossipTest, RejectsTooFewAgents) {
  EXPECT_THROW(pairwise_gossip_schedule(1, 0), InvalidInput);
  EXPECT_THROW(pairwise_gossip_schedule(0, 0), InvalidInput);
}

TEST(GossipTest, DeterministicGivenSeed) {
  const auto a = pairwise_gossip_schedule(6, 42);
  const auto b = pairwise_gossip_schedule(6, 42);
  EXPECT_EQ(a.matrices, b.matrices);
}

TEST(GossipTest, EveryMatrixSatisfiesAssumptionsForSmallNetworks) {
  for (std::size_t n = 2; n <= 8; ++n) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto s = pairwise_gossip_schedule(n, seed);
      for (const auto& a : s.matrices) {
        EXPECT_TRUE(validate_nondegeneracy(a, 0.5)) << "n=" << n << " seed=" << seed;
        EXPECT_TRUE(validate_balanced(a)) << "n=" << n << " seed=" << seed;
        EXPECT_EQ(a.edges().size(), 2u);
      }
      EXPECT_TRUE(validate_periodic_connectivity(s, static_cast<int>(n - 1), 5 * static_cast<std::int64_t>(n)))
          << "n=" << n << " seed=" << seed;
    }
  }
}

TEST(CycleTest, FourAgentsMatchBandPairing) {
  const auto c = make_cycle(4);
  EXPECT_EQ(c.down(0), 1u);
  EXPECT_EQ(c.down(1), 2u);
  EXPECT_EQ(c.down(2), 3u);
  EXPECT_EQ(c.down(3), 0u);
}

TEST(CycleTest, TwoAgents) {
  const auto c = make_cycle(2);
  EXPECT_EQ(c.down(0), 1u);
  EXPECT_EQ(c.down(1), 0u);
}

TEST(CycleTest, UpInvertsDown) {
  for (std::size_t n = 2; n <= 64; ++n) {
    const auto c = make_cycle(n);
    std::vector<bool> hit(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(c.up(c.down(i)), i);
      EXPECT_EQ(c.down(c.up(i)), i);
      hit[c.down(i)] = true;
    }
    EXPECT_TRUE(std::all_of(hit.begin(), hit.end(), [](bool b) { return b; }));
  }
}

TEST(CycleTest, RejectsSingleAgent) { EXPECT_THROW(make_cycle(1), InvalidInput); }

TEST(WeightFileTest, ParsesBlocksAndComments) {
  std::istringstream in(
      "# two-agent schedule\n"
      "2\n"
      "0.5 0.5\n"
      "0.5 0.5\n"
      "\n"
      "2\n"
      "1 0   # no exchange\n"
      "0 1\n");
  const auto ms = parse_weight_matrices(in);
  ASSERT_EQ(ms.size(), 2u);
  EXPECT_EQ(ms[1], WeightMatrix::identity(2));
}

TEST(WeightFileTest, ReportsLineOfBadRow) {
  std::istringstream in("2\n0.5 0.5\n0.5 abc\n");
  try {
    parse_weight_matrices(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(WeightFileTest, RejectsShortBlockAndEmptyInput) {
  std::istringstream short_block("3\n1 0 0\n0 1 0\n");
  EXPECT_THROW(parse_weight_matrices(short_block), ParseError);
  std::istringstream empty("# nothing\n\n");
  EXPECT_THROW(parse_weight_matrices(empty), ParseError);
}

}  // namespace
}  // namespace dads
