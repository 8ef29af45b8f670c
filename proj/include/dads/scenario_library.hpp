#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dads/scenario.hpp"

namespace dads {

struct BundledScenario {
  std::string_view name;
  std::string_view text;
};

inline constexpr std::string_view kPaperExampleYaml = R"yaml(# Four agents on the real line with nonconvex objectives.
name: paper_example
description: four-agent nonconvex example, X = [0, 10], delta = 1
agents: 4
dimension: 1
domain:
  lower: [0]
  upper: [10]
delta: 1.0            # consensus band |x_i - x_{i+1}| <= delta
epsilon: 0.1          # accuracy of each local minimisation
theta: 0.35           # slack added to gamma in the dual radius
gamma_override: 2.65  # dual radius gamma + theta = 3.0
slater_point: [0.5]
objectives:
  - kind: piecewise_linear      # 0 on [0, 1], x - 1 on [1, 2], 1 afterwards
    breakpoints: [0, 1, 2]
    values: [0, 0, 1]
  - kind: piecewise_linear      # 1 up to 2, x - 1 on [2, 3], 2 afterwards
    breakpoints: [2, 3]
    values: [1, 2]
  - kind: quadratic             # (x + 0.25)^2
    a: [1]
    center: [-0.25]
  - kind: quadratic             # (x - 0.5)^2
    a: [1]
    center: [0.5]
constraints: []
communication:
  kind: gossip        # one random spanning-tree edge per round, weights 1/2
  seed: 0
  alpha_min: 0.5
  period: 0           # 0: N - 1 for gossip
solver:
  grid_points: 0      # 0: 4097 per axis for n <= 2, 129 for n = 3, 33 for n = 4
  refine_iterations: 100
  refine_tolerance: 1.0e-10
engine:
  rounds: 150
  seed: 0
  parallelism: 1
  step_size:
    kind: harmonic    # alpha(k) = scale / (k + 1)
    scale: 1.0
    power: 1.0
  stall:
    enabled: true
    tolerance: 1.0e-9
    window: 20
    min_rounds: 150
diagnostics:
  slackness_tolerance: 0.01
  oracle_grid_points: 41     # brute-force grid per axis for the relaxed optimum
  oracle_tolerance: 1.0e-3
  bounds_grid_points: 1001
reference:
  limit_point: [[0.2436], [0], [0], [0.1509]]
  objective: 1.1844
)yaml";

inline constexpr std::string_view kConstrainedQuadraticYaml = R"yaml(# Three quadratic agents with a shared cap x <= 3 that is slack at the optimum.
name: constrained_quadratic
description: three quadratic agents with one affine inequality constraint
agents: 3
dimension: 1
domain:
  lower: [-2]
  upper: [4]
delta: 1.0
epsilon: 0.01
theta: 0.5
slater_point: [0]
objectives:
  - kind: quadratic
    a: [1]
    center: [2]
  - kind: quadratic
    a: [1]
    center: [1.6]
  - kind: quadratic
    a: [1]
    center: [1.2]
constraints:
  - kind: affine      # x - 3 <= 0
    row: [1]
    offset: -3
communication:
  kind: gossip
  seed: 1
  alpha_min: 0.5
  period: 0
solver:
  grid_points: 0
  refine_iterations: 100
  refine_tolerance: 1.0e-10
engine:
  rounds: 1000
  seed: 0
  parallelism: 1
  step_size:
    kind: harmonic
    scale: 1.0
    power: 1.0
  stall:
    enabled: true
    tolerance: 1.0e-9
    window: 20
    min_rounds: 1000
diagnostics:
  slackness_tolerance: 0.01
  oracle_grid_points: 61
  oracle_tolerance: 1.0e-3
  bounds_grid_points: 1001
)yaml";

inline constexpr std::string_view kRingPolynomialYaml = R"yaml(# Polynomial objectives on a static three-agent ring; the Slater point is
# agreed on by max-consensus over the agents' proposals.
name: ring_polynomial
description: quartic objectives, static ring weights, grid-based local solver
agents: 3
dimension: 1
domain:
  lower: [-2]
  upper: [2]
delta: 0.75
epsilon: 0.01
theta: 0.5
slater_proposals: [[0], [0.5], [-1]]
objectives:
  - kind: polynomial    # x^4 - x, coefficients from degree 0 up
    coefficients: [0, -1, 0, 0, 1]
  - kind: polynomial    # x^4 + 0.5 x^2
    coefficients: [0, 0, 0.5, 0, 1]
  - kind: polynomial    # (x - 0.3)^2
    coefficients: [0.09, -0.6, 1]
constraints: []
communication:
  kind: matrices
  alpha_min: 0.3
  period: 1
  matrices:
    - [[0.4, 0.3, 0.3], [0.3, 0.4, 0.3], [0.3, 0.3, 0.4]]
solver:
  grid_points: 0
  refine_iterations: 100
  refine_tolerance: 1.0e-10
engine:
  rounds: 300
  seed: 0
  parallelism: 1
  step_size:
    kind: harmonic
    scale: 1.0
    power: 1.0
  stall:
    enabled: true
    tolerance: 1.0e-9
    window: 20
    min_rounds: 300
diagnostics:
  slackness_tolerance: 0.01
  oracle_grid_points: 81
  oracle_tolerance: 1.0e-3
  bounds_grid_points: 1001
)yaml";

inline const std::vector<BundledScenario>& bundled_scenarios() {
  static const std::vector<BundledScenario> all{
      {"paper_example", kPaperExampleYaml},
      {"constrained_quadratic", kConstrainedQuadraticYaml},
      {"ring_polynomial", kRingPolynomialYaml},
  };
  return all;
}

inline Scenario load_bundled_scenario(std::string_view name) {
  for (const auto& b : bundled_scenarios()) {
    if (b.name == name) {
      Scenario sc = parse_scenario(std::string(b.text));
      validate_scenario(sc);
      return sc;
    }
  }
  throw InvalidInput("no bundled scenario named '" + std::string(name) + "'");
}

/// A path to a scenario file, or the name of a bundled scenario.
inline Scenario load_scenario(const std::string& path_or_name) {
  if (std::filesystem::is_regular_file(path_or_name)) return load_scenario_file(path_or_name);
  const auto& all = bundled_scenarios();
  const bool bundled = std::any_of(all.begin(), all.end(), [&](const auto& b) { return b.name == path_or_name; });
  if (bundled) return load_bundled_scenario(path_or_name);
  throw InvalidInput("scenario '" + path_or_name + "' is neither a file nor a bundled scenario");
}

}  // namespace dads
