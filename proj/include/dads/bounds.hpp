#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dads/errors.hpp"
#include "dads/local_solver.hpp"
#include "dads/problem.hpp"

namespace dads {

/// Problem-wide constants derived from the data and the Slater point.
struct DerivedBounds {
  /// sup ||g(x)|| over X.
  double g_bound = 0.0;
  /// sup ||x|| over X.
  double h_bound = 0.0;
  /// min(min_l -g_l(z), delta); equals delta when there is no g.
  double beta = 0.0;
  /// (f_i(z) - inf_X f_i + epsilon) / beta per agent.
  Vec gamma_i;
  /// N * max_i gamma_i, or the override when one is set.
  double gamma = 0.0;
};

inline double slater_margin(const ProblemSpec& spec, std::span<const double> z) {
  double beta = spec.delta;
  for (double v : eval_constraint(spec, z)) beta = std::min(beta, -v);
  return beta;
}

/// Per-agent gamma_i at the Slater point. inf_X f_i comes from the global
/// local solver at zero multipliers, lowered by its certified gap so the
/// quotient stays an upper bound.
inline double agent_gamma(const ProblemSpec& spec, std::size_t agent, std::span<const double> slater,
                          const SolverResolution& resolution = {}) {
  const CyclicGraph cycle(spec.n_agents);
  const auto sol = solve_local(spec, cycle, agent, DualBlock::zeros_for(spec), resolution);
  const double inf_f = sol.value - sol.certified_gap;
  return (eval_objective(spec, agent, slater) - inf_f + spec.epsilon) / slater_margin(spec, slater);
}

inline DerivedBounds compute_bounds(const ProblemSpec& spec, std::size_t grid_points_per_dim,
                                    const SolverResolution& resolution = {}) {
  if (!spec.slater_point) throw PreconditionError("compute_bounds needs a Slater point");
  const Vec& z = *spec.slater_point;
  if (!is_strict_slater(spec, z)) {
    throw PreconditionError("Slater point must lie in X with every g component strictly negative");
  }

  DerivedBounds out;
  double g2 = 0.0;
  for (const auto& g : spec.constraints) {
    const Range r = g.range_over(spec.domain, grid_points_per_dim);
    const double m = std::max(std::abs(r.min), std::abs(r.max));
    g2 += m * m;
  }
  out.g_bound = std::sqrt(g2);
  out.h_bound = spec.domain.max_norm();
  out.beta = slater_margin(spec, z);

  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < spec.n_agents; ++i) {
    out.gamma_i.push_back(agent_gamma(spec, i, z, resolution));
    worst = std::max(worst, out.gamma_i.back());
  }
  out.gamma = spec.gamma_override ? *spec.gamma_override : static_cast<double>(spec.n_agents) * worst;
  return out;
}

}  // namespace dads
