#include <gtest/gtest.h>

#include "dads/consensus.hpp"
#include "test_support.hpp"

namespace dads {
namespace {

TEST(LexOrderTest, FirstDifferingCoordinateDecides) {
  EXPECT_TRUE(lex_less(Vec{1.0, 5.0}, Vec{2.0, 0.0}));
  EXPECT_TRUE(lex_less(Vec{1.0, 0.0}, Vec{1.0, 0.5}));
  EXPECT_FALSE(lex_less(Vec{1.0, 0.5}, Vec{1.0, 0.5}));
  EXPECT_EQ(lex_max(Vec{0.0, 9.0}, Vec{0.1, -9.0}), (Vec{0.1, -9.0}));
}

TEST(LexOrderTest, DimensionMismatchThrows) { EXPECT_THROW(lex_less(Vec{1.0}, Vec{1.0, 2.0}), InvalidInput); }

TEST(MaxConsensusTest, FourAgentGossipExample) {
  const auto s = pairwise_gossip_schedule(4, 0);
  const auto r = max_consensus({{0.2}, {0.5}, {0.3}, {0.1}}, s, 100);
  EXPECT_EQ(r.value, Vec{0.5});
  EXPECT_LE(r.rounds_used, 9);
}

TEST(MaxConsensusTest, AgreementTakesNoRounds) {
  const auto s = pairwise_gossip_schedule(3, 1);
  const auto r = max_consensus({{0.7, 1.0}, {0.7, 1.0}, {0.7, 1.0}}, s, 10);
  EXPECT_EQ(r.rounds_used, 0);
  EXPECT_EQ(r.value, (Vec{0.7, 1.0}));
}

TEST(MaxConsensusTest, StatesOnlyIncrease) {
  testing::Rng rng(6);
  const auto s = pairwise_gossip_schedule(6, 3);
  std::vector<Vec> states;
  for (int i = 0; i < 6; ++i) states.push_back(testing::random_vec(rng, 2, -1.0, 1.0));
  for (int k = 0; k < 20; ++k) {
    const auto next = max_consensus_step(states, s.at(k));
    for (std::size_t i = 0; i < states.size(); ++i) EXPECT_FALSE(lex_less(next[i], states[i]));
    states = next;
  }
}

TEST(MaxConsensusTest, ValueIsTheLexicographicMaximum) {
  testing::Rng rng(12);
  for (std::size_t n = 2; n <= 8; ++n) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto s = pairwise_gossip_schedule(n, seed);
      std::vector<Vec> states;
      for (std::size_t i = 0; i < n; ++i) states.push_back(testing::random_vec(rng, 2, 0.0, 1.0));
      Vec expected = states.front();
      for (const auto& v : states) expected = lex_max(expected, v);
      const auto r = max_consensus(states, s, static_cast<std::int64_t>(n - 1) * s.period_hint);
      EXPECT_EQ(r.value, expected);
    }
  }
}

TEST(MaxConsensusTest, DisconnectedScheduleThrows) {
  WeightSchedule s;
  s.matrices.push_back(WeightMatrix::identity(3));
  s.period_hint = 1;
  EXPECT_THROW(max_consensus({{1.0}, {2.0}, {3.0}}, s, 50), ConvergenceFailure);
}

TEST(AverageConsensusTest, PreservesSumPlusInputs) {
  testing::Rng rng(8);
  const auto s = pairwise_gossip_schedule(5, 2);
  std::vector<Vec> x, eta;
  for (int i = 0; i < 5; ++i) {
    x.push_back(testing::random_vec(rng, 3, -1.0, 1.0));
    eta.push_back(testing::random_vec(rng, 3, -0.1, 0.1));
  }
  for (int k = 0; k < 30; ++k) {
    const auto next = dynamic_average_step(x, eta, s.at(k));
    for (std::size_t c = 0; c < 3; ++c) {
      double before = 0.0, after = 0.0;
      for (std::size_t i = 0; i < 5; ++i) {
        before += x[i][c] + eta[i][c];
        after += next[i][c];
      }
      EXPECT_NEAR(after, before, 1e-12);
    }
    x = next;
  }
}

TEST(AverageConsensusTest, DecayingInputsReachAgreement) {
  testing::Rng rng(31);
  const auto s = pairwise_gossip_schedule(4, 0);
  std::vector<Vec> x(4, Vec{0.0});
  Vec c(4);
  for (double& v : c) v = testing::uniform(rng, -1.0, 1.0);
  bool reached = false;
  for (std::int64_t k = 0; k < 2000 && !reached; ++k) {
    std::vector<Vec> eta;
    for (double ci : c) eta.push_back(Vec{ci / static_cast<double>((k + 1) * (k + 1))});
    x = dynamic_average_step(x, eta, s.at(k));
    reached = disagreement(x) < 1e-3;
  }
  EXPECT_TRUE(reached);
}

TEST(AverageConsensusTest, ShapeMismatchThrows) {
  const auto a = WeightMatrix::identity(2);
  EXPECT_THROW(dynamic_average_step({{0.0}, {0.0}}, {{0.0}}, a), InvalidInput);
  EXPECT_THROW(dynamic_average_step({{0.0}, {0.0}}, {{0.0}, {0.0, 1.0}}, a), InvalidInput);
}

}  // namespace
}  // namespace dads
