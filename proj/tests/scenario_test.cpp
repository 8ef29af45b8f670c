#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "dads/scenario.hpp"
#include "dads/scenario_library.hpp"

namespace dads {
namespace {

const std::filesystem::path kScenarioDir = DADS_SCENARIO_DIR;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(ScenarioTest, FourAgentExampleLoads) {
  const Scenario sc = load_scenario("paper_example");
  EXPECT_EQ(sc.name, "paper_example");
  EXPECT_EQ(sc.problem, nonconvex_four_agent_problem());
  EXPECT_EQ(sc.engine.rounds, 150);
  EXPECT_EQ(sc.communication.kind, CommunicationSpec::Kind::kGossip);
  EXPECT_EQ(sc.reference.limit_point.size(), 4u);
  EXPECT_EQ(sc.reference.objective, 1.1844);
}

TEST(ScenarioTest, FilesMatchBundledText) {
  for (const auto& b : bundled_scenarios()) {
    const auto path = kScenarioDir / (std::string(b.name) + ".yaml");
    ASSERT_TRUE(std::filesystem::exists(path)) << path;
    EXPECT_EQ(read_file(path), std::string(b.text)) << b.name;
    EXPECT_TRUE(load_scenario(path.string()).same_content(load_bundled_scenario(b.name)));
  }
}

TEST(ScenarioTest, SerializeRoundTrips) {
  for (const auto& b : bundled_scenarios()) {
    const Scenario sc = load_bundled_scenario(b.name);
    const Scenario back = parse_scenario(serialize_scenario(sc));
    EXPECT_TRUE(back.same_content(sc)) << b.name;
    EXPECT_EQ(config_hash(back), config_hash(sc));
  }
}

TEST(ScenarioTest, HashChangesWithContent) {
  Scenario sc = load_bundled_scenario("paper_example");
  const std::string h = config_hash(sc);
  EXPECT_EQ(h.size(), 16u);
  sc.engine.rounds = 151;
  EXPECT_NE(config_hash(sc), h);
}

TEST(ScenarioTest, UnbalancedScheduleNamesAssumption) {
  try {
    load_scenario((kScenarioDir.parent_path() / "tests" / "data" / "unbalanced.yaml").string());
    FAIL() << "expected AssumptionViolation";
  } catch (const AssumptionViolation& e) {
    EXPECT_EQ(e.which(), Assumption::kBalanced);
    EXPECT_NE(std::string(e.what()).find("Assumption 2"), std::string::npos);
  }
}

TEST(ScenarioTest, ParseErrorCarriesLineNumber) {
  const std::string text = "name: broken\nagents: 4\ndimension: [1\n";
  try {
    parse_scenario(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
  }
}

TEST(ScenarioTest, BadFieldTypeCarriesLineNumber) {
  std::string text(kPaperExampleYaml);
  text.replace(text.find("epsilon: 0.1"), 12, "epsilon: tiny");
  try {
    parse_scenario(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 10"), std::string::npos) << e.what();
  }
}

TEST(ScenarioTest, UnknownFunctionKindRejected) {
  std::string text(kPaperExampleYaml);
  text.replace(text.find("kind: quadratic"), 15, "kind: cubic");
  EXPECT_THROW(parse_scenario(text), ParseError);
}

TEST(ScenarioTest, SlaterProposalsScenario) {
  const Scenario sc = load_bundled_scenario("ring_polynomial");
  EXPECT_FALSE(sc.problem.slater_point.has_value());
  EXPECT_EQ(sc.problem.slater_proposals.size(), 3u);
  EXPECT_EQ(sc.communication.kind, CommunicationSpec::Kind::kMatrices);
}

TEST(ScenarioTest, NonStrictSlaterPointRejected) {
  Scenario sc = load_bundled_scenario("constrained_quadratic");
  sc.problem.slater_point = Vec{3.0};
  try {
    validate_scenario(sc);
    FAIL();
  } catch (const AssumptionViolation& e) {
    EXPECT_EQ(e.which(), Assumption::kSlater);
  }
}

TEST(ScenarioTest, WeightFileResolvesAgainstScenarioDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "dads_scenario_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream w(dir / "ring.txt");
    w << "3\n0.5 0.25 0.25\n0.25 0.5 0.25\n0.25 0.25 0.5\n";
  }
  std::string text(kRingPolynomialYaml);
  const auto from = text.find("communication:");
  const auto to = text.find("solver:");
  text.replace(from, to - from, "communication:\n  kind: file\n  path: ring.txt\n  alpha_min: 0.25\n");
  {
    std::ofstream s(dir / "ring.yaml");
    s << text;
  }
  const Scenario sc = load_scenario((dir / "ring.yaml").string());
  const auto schedule = materialize_schedule(sc);
  ASSERT_EQ(schedule.matrices.size(), 1u);
  EXPECT_DOUBLE_EQ(schedule.at(0)(0, 1), 0.25);
}

TEST(ScenarioTest, UnknownNameRejected) { EXPECT_THROW(load_scenario("no_such_scenario"), InvalidInput); }

}  // namespace
}  // namespace dads
