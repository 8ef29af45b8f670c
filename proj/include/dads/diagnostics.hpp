#pragma once

// Brute-force oracles and end-of-run verdicts for the relaxed problem.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dads/bounds.hpp"
#include "dads/engine.hpp"
#include "dads/errors.hpp"
#include "dads/graph.hpp"
#include "dads/local_solver.hpp"
#include "dads/problem.hpp"
#include "dads/vector_ops.hpp"

namespace dads {

inline constexpr double kFeasibilityTolerance = 1e-9;
inline constexpr double kDefaultSlacknessTolerance = 1e-2;

/// A global dual point: per-agent mu_i plus one shared lambda and w.
struct GlobalDual {
  std::vector<Vec> mu;
  Vec lambda;
  Vec w;

  static GlobalDual zeros(const ProblemSpec& spec) {
    return {std::vector<Vec>(spec.n_agents, Vec(spec.constraint_dim(), 0.0)), Vec(spec.stacked_dim(), 0.0),
            Vec(spec.stacked_dim(), 0.0)};
  }

  std::vector<DualBlock> blocks() const {
    std::vector<DualBlock> out;
    for (const auto& m : mu) out.push_back(DualBlock{m, lambda, w});
    return out;
  }

  Vec stacked() const {
    Vec out;
    for (const auto& m : mu) out.insert(out.end(), m.begin(), m.end());
    out.insert(out.end(), lambda.begin(), lambda.end());
    out.insert(out.end(), w.begin(), w.end());
    return out;
  }

  double norm() const { return dads::norm(stacked()); }
};

/// Each agent's mu with the network average of lambda^i and w^i.
inline GlobalDual consensus_dual(const std::vector<DualBlock>& duals) {
  if (duals.empty()) throw InvalidInput("no dual blocks");
  GlobalDual g{{}, Vec(duals.front().lambda.size(), 0.0), Vec(duals.front().w.size(), 0.0)};
  const double inv = 1.0 / static_cast<double>(duals.size());
  for (const auto& d : duals) {
    g.mu.push_back(d.mu);
    for (std::size_t k = 0; k < g.lambda.size(); ++k) {
      g.lambda[k] += inv * d.lambda[k];
      g.w[k] += inv * d.w[k];
    }
  }
  return g;
}

namespace detail {

inline Vec grid_axis(double lo, double hi, std::size_t points) {
  points = std::max<std::size_t>(points, 2);
  Vec out(points);
  for (std::size_t j = 0; j < points; ++j)
    out[j] = j + 1 == points ? hi : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(points - 1);
  return out;
}

/// Every point of the box grid, first coordinate most significant.
inline std::vector<Vec> box_grid(const BoxSet& box, std::size_t points) {
  std::vector<Vec> axes;
  for (std::size_t k = 0; k < box.dim(); ++k) axes.push_back(grid_axis(box.lower[k], box.upper[k], points));
  std::vector<Vec> out{Vec{}};
  for (const auto& axis : axes) {
    std::vector<Vec> next;
    next.reserve(out.size() * axis.size());
    for (const auto& prefix : out) {
      for (double v : axis) {
        Vec p = prefix;
        p.push_back(v);
        next.push_back(std::move(p));
      }
    }
    out = std::move(next);
  }
  return out;
}

inline double grid_spacing(const BoxSet& box, std::size_t points) {
  double s = 0.0;
  for (std::size_t k = 0; k < box.dim(); ++k) {
    const double h = (box.upper[k] - box.lower[k]) / static_cast<double>(std::max<std::size_t>(points, 2) - 1);
    s += h * h;
  }
  return std::sqrt(s);
}

inline constexpr double kGridBandSlack = 1e-12;

inline bool within_band(const Vec& a, const Vec& b, double delta) {
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::abs(a[k] - b[k]) > delta + kGridBandSlack) return false;
  return true;
}

}  // namespace detail

struct PrimalOptimum {
  double value = std::numeric_limits<double>::infinity();
  std::vector<Vec> minimizer;
};

/// Exhaustive search over the grid of X^N for the relaxed problem: every x_i
/// satisfies g(x_i) <= 0 and neighbours on the cycle differ by at most delta.
inline PrimalOptimum brute_force_primal_optimum(const ProblemSpec& spec, const CyclicGraph& cycle,
                                                std::size_t grid_points) {
  if (spec.n_agents * spec.dim > 6) throw CapabilityError("brute-force relaxed optimum needs N*n <= 6");
  if (cycle.size() != spec.n_agents) throw InvalidInput("cycle size differs from the agent count");
  const auto grid = detail::box_grid(spec.domain, grid_points);
  std::vector<std::size_t> feasible;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const Vec g = eval_constraint(spec, grid[p]);
    if (std::all_of(g.begin(), g.end(), [](double v) { return v <= 0.0; })) feasible.push_back(p);
  }
  std::vector<Vec> values(spec.n_agents, Vec(grid.size()));
  for (std::size_t i = 0; i < spec.n_agents; ++i)
    for (std::size_t p : feasible) values[i][p] = spec.objectives[i](grid[p]);

  PrimalOptimum best;
  std::vector<std::size_t> choice(spec.n_agents);
  // Agents are placed in index order; agent i-1's successor on the cycle is i.
  std::function<void(std::size_t, double)> place = [&](std::size_t i, double partial) {
    if (i == spec.n_agents) {
      if (!detail::within_band(grid[choice[spec.n_agents - 1]], grid[choice[0]], spec.delta)) return;
      if (partial < best.value) {
        best.value = partial;
        best.minimizer.clear();
        for (std::size_t c : choice) best.minimizer.push_back(grid[c]);
      }
      return;
    }
    for (std::size_t p : feasible) {
      if (i > 0 && !detail::within_band(grid[choice[i - 1]], grid[p], spec.delta)) continue;
      choice[i] = p;
      place(i + 1, partial + values[i][p]);
    }
  };
  place(0, 0.0);
  if (best.minimizer.empty()) throw PreconditionError("no feasible grid point for the relaxed problem");
  return best;
}

struct ConsensusOptimum {
  double value = std::numeric_limits<double>::infinity();
  Vec minimizer;
};

/// Grid minimum of sum_i f_i(z) over X with g(z) <= 0 (exact agreement).
inline ConsensusOptimum brute_force_primal_optimum_P(const ProblemSpec& spec, std::size_t grid_points) {
  if (spec.dim > 2) throw CapabilityError("brute-force consensus optimum needs n <= 2");
  ConsensusOptimum best;
  for (const auto& z : detail::box_grid(spec.domain, grid_points)) {
    const Vec g = eval_constraint(spec, z);
    if (!std::all_of(g.begin(), g.end(), [](double v) { return v <= 0.0; })) continue;
    double s = 0.0;
    for (std::size_t i = 0; i < spec.n_agents; ++i) s += spec.objectives[i](z);
    if (s < best.value) {
      best.value = s;
      best.minimizer = z;
    }
  }
  if (best.minimizer.empty()) throw PreconditionError("no feasible grid point");
  return best;
}

/// The coupled Lagrangian, written with the band constraints as they appear
/// in the relaxed problem (not in the per-agent rearranged form).
inline double global_lagrangian(const ProblemSpec& spec, const CyclicGraph& cycle, const std::vector<Vec>& x_stack,
                                const GlobalDual& xi) {
  double total = 0.0;
  for (std::size_t i = 0; i < spec.n_agents; ++i) {
    const Vec& xi_ = x_stack[i];
    const Vec& xd = x_stack[cycle.down(i)];
    total += spec.objectives[i](xi_);
    const Vec g = eval_constraint(spec, xi_);
    for (std::size_t l = 0; l < g.size(); ++l) total += xi.mu[i][l] * g[l];
    for (std::size_t k = 0; k < spec.dim; ++k) {
      const double lam = xi.lambda[i * spec.dim + k];
      const double w = xi.w[i * spec.dim + k];
      total += lam * (-xi_[k] + xd[k] - spec.delta);
      total += w * (xi_[k] - xd[k] - spec.delta);
    }
  }
  return total;
}

struct DualValue {
  double value = 0.0;
  double certified_gap = 0.0;
};

/// Q(xi) = sum_i Q_i(xi_i); every block must carry the same lambda and w.
inline DualValue dual_value(const ProblemSpec& spec, const CyclicGraph& cycle, const std::vector<DualBlock>& xi,
                            const SolverResolution& resolution = {}) {
  require_same_size(xi.size(), spec.n_agents, "dual stack");
  for (const auto& b : xi) {
    if (b.lambda != xi.front().lambda || b.w != xi.front().w) {
      throw InvalidInput("dual_value needs identical lambda and w in every block");
    }
  }
  DualValue out;
  for (std::size_t i = 0; i < spec.n_agents; ++i) {
    const auto sol = solve_local(spec, cycle, i, xi[i], resolution);
    out.value += sol.value;
    out.certified_gap += sol.certified_gap;
  }
  return out;
}

inline DualValue dual_value(const ProblemSpec& spec, const CyclicGraph& cycle, const GlobalDual& xi,
                            const SolverResolution& resolution = {}) {
  return dual_value(spec, cycle, xi.blocks(), resolution);
}

struct JointGridValue {
  double value = std::numeric_limits<double>::infinity();
  /// Bound on value - inf over X^N from the grid spacing.
  double tolerance = 0.0;
};

/// inf over the grid of X^N of the coupled Lagrangian, minimising all agents jointly.
inline JointGridValue joint_grid_dual_value(const ProblemSpec& spec, const CyclicGraph& cycle, const GlobalDual& xi,
                                            std::size_t grid_points) {
  if (spec.n_agents * spec.dim > 4) throw CapabilityError("joint grid needs N*n <= 4");
  const auto grid = detail::box_grid(spec.domain, grid_points);
  JointGridValue out;
  std::vector<std::size_t> idx(spec.n_agents, 0);
  std::vector<Vec> x(spec.n_agents);
  for (bool done = false; !done;) {
    for (std::size_t i = 0; i < spec.n_agents; ++i) x[i] = grid[idx[i]];
    out.value = std::min(out.value, global_lagrangian(spec, cycle, x, xi));
    for (std::size_t i = spec.n_agents;;) {
      if (i == 0) {
        done = true;
        break;
      }
      --i;
      if (++idx[i] < grid.size()) break;
      idx[i] = 0;
    }
  }
  const double half = 0.5 * detail::grid_spacing(spec.domain, grid_points);
  const auto blocks = xi.blocks();
  for (std::size_t i = 0; i < spec.n_agents; ++i)
    out.tolerance += lagrangian_lipschitz_bound(spec, cycle, i, blocks[i]) * half;
  return out;
}

struct DualAscentResult {
  double value = -std::numeric_limits<double>::infinity();
  GlobalDual xi;
};

/// Coordinate ascent on Q from xi = 0 with a shrinking step; a lower bound on d*.
inline DualAscentResult approximate_dual_optimum(const ProblemSpec& spec, const CyclicGraph& cycle,
                                                 double initial_step = 1.0, double min_step = 1e-4,
                                                 const SolverResolution& resolution = {}) {
  DualAscentResult best{dual_value(spec, cycle, GlobalDual::zeros(spec), resolution).value, GlobalDual::zeros(spec)};
  auto coordinate = [&](GlobalDual& g, std::size_t c) -> double& {
    const std::size_t m = spec.constraint_dim();
    const std::size_t mu_total = m * spec.n_agents;
    if (c < mu_total) return g.mu[c / m][c % m];
    c -= mu_total;
    if (c < g.lambda.size()) return g.lambda[c];
    return g.w[c - g.lambda.size()];
  };
  const std::size_t coords = spec.constraint_dim() * spec.n_agents + 2 * spec.stacked_dim();
  for (double step = initial_step; step >= min_step; step *= 0.5) {
    for (bool improved = true; improved;) {
      improved = false;
      for (std::size_t c = 0; c < coords; ++c) {
        for (double dir : {+1.0, -1.0}) {
          GlobalDual trial = best.xi;
          double& v = coordinate(trial, c);
          v = std::max(0.0, v + dir * step);
          const double q = dual_value(spec, cycle, trial, resolution).value;
          if (q > best.value + 1e-12) {
            best = {q, std::move(trial)};
            improved = true;
          }
        }
      }
    }
  }
  return best;
}

/// Grid search for max Q over [0, radius]^d for tiny instances (d = mN + 2nN <= 6).
inline DualAscentResult dual_grid_argmax(const ProblemSpec& spec, const CyclicGraph& cycle, double radius,
                                         std::size_t points, const SolverResolution& resolution = {}) {
  const std::size_t m = spec.constraint_dim();
  const std::size_t d = m * spec.n_agents + 2 * spec.stacked_dim();
  if (d > 6) throw CapabilityError("dual grid search needs at most 6 dual coordinates");
  const Vec axis = detail::grid_axis(0.0, radius, points);
  DualAscentResult best;
  std::vector<std::size_t> idx(d, 0);
  for (bool done = false; !done;) {
    GlobalDual g = GlobalDual::zeros(spec);
    for (std::size_t c = 0; c < d; ++c) {
      const double v = axis[idx[c]];
      if (c < m * spec.n_agents) {
        g.mu[c / m][c % m] = v;
      } else if (c - m * spec.n_agents < spec.stacked_dim()) {
        g.lambda[c - m * spec.n_agents] = v;
      } else {
        g.w[c - m * spec.n_agents - spec.stacked_dim()] = v;
      }
    }
    const double q = dual_value(spec, cycle, g, resolution).value;
    if (q > best.value) best = {q, std::move(g)};
    for (std::size_t c = d;;) {
      if (c == 0) {
        done = true;
        break;
      }
      --c;
      if (++idx[c] < axis.size()) break;
      idx[c] = 0;
    }
  }
  return best;
}

struct FeasibilityReport {
  double max_constraint_violation = 0.0;
  double max_band_violation = 0.0;
  double max_box_violation = 0.0;
  /// Per band constraint, in approximate_problem_constraints order.
  Vec band_violations;
  bool feasible = false;

  double worst() const { return std::max({max_constraint_violation, max_band_violation, max_box_violation}); }
};

inline FeasibilityReport feasibility_report(const ProblemSpec& spec, const CyclicGraph& cycle,
                                            const std::vector<Vec>& x_stack) {
  require_same_size(x_stack.size(), spec.n_agents, "primal stack");
  FeasibilityReport r;
  for (std::size_t i = 0; i < spec.n_agents; ++i) {
    require_same_size(x_stack[i].size(), spec.dim, "primal estimate");
    for (double g : eval_constraint(spec, x_stack[i])) r.max_constraint_violation = std::max(r.max_constraint_violation, g);
    for (std::size_t k = 0; k < spec.dim; ++k) {
      r.max_box_violation = std::max({r.max_box_violation, spec.domain.lower[k] - x_stack[i][k],
                                      x_stack[i][k] - spec.domain.upper[k]});
    }
  }
  for (const auto& band : approximate_problem_constraints(spec, cycle)) {
    r.band_violations.push_back(band.max_violation(x_stack));
    r.max_band_violation = std::max(r.max_band_violation, r.band_violations.back());
  }
  r.feasible = r.worst() <= kFeasibilityTolerance;
  return r;
}

struct SlacknessResidual {
  double lambda_term = 0.0;  // <-Delta - x_i + x_down, lambda_i>
  double w_term = 0.0;       // <-Delta + x_i - x_down, w_i>
  double mu_term = 0.0;      // <g(x_i), mu_i>
};

struct SlacknessReport {
  std::vector<SlacknessResidual> per_agent;
  double max_abs = 0.0;
  double tolerance = kDefaultSlacknessTolerance;
  bool passes = false;
};

inline SlacknessReport complementary_slackness_report(const ProblemSpec& spec, const CyclicGraph& cycle,
                                                      const std::vector<Vec>& x_stack, const GlobalDual& xi,
                                                      double tolerance = kDefaultSlacknessTolerance) {
  require_same_size(x_stack.size(), spec.n_agents, "primal stack");
  SlacknessReport r;
  r.tolerance = tolerance;
  for (std::size_t i = 0; i < spec.n_agents; ++i) {
    const Vec& x = x_stack[i];
    const Vec& xd = x_stack[cycle.down(i)];
    SlacknessResidual s;
    for (std::size_t k = 0; k < spec.dim; ++k) {
      s.lambda_term += (-spec.delta - x[k] + xd[k]) * xi.lambda[i * spec.dim + k];
      s.w_term += (-spec.delta + x[k] - xd[k]) * xi.w[i * spec.dim + k];
    }
    s.mu_term = dot(eval_constraint(spec, x), xi.mu[i]);
    r.max_abs = std::max({r.max_abs, std::abs(s.lambda_term), std::abs(s.w_term), std::abs(s.mu_term)});
    r.per_agent.push_back(s);
  }
  r.passes = r.max_abs <= tolerance;
  return r;
}

struct SuboptimalityVerdict {
  double objective = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool passes = false;
};

/// sum_i f_i(x_i) must land in [p* - tol, p* + N*eps + tol].
inline SuboptimalityVerdict suboptimality_verdict(const ProblemSpec& spec, const CyclicGraph& cycle,
                                                  const std::vector<Vec>& x_stack, double p_star_delta,
                                                  double tolerance) {
  if (!feasibility_report(spec, cycle, x_stack).feasible) {
    throw PreconditionError("suboptimality is only defined for feasible primal stacks");
  }
  SuboptimalityVerdict v;
  v.objective = total_objective(spec, x_stack);
  v.lower = p_star_delta - tolerance;
  v.upper = p_star_delta + static_cast<double>(spec.n_agents) * spec.epsilon + tolerance;
  v.passes = v.objective >= v.lower && v.objective <= v.upper;
  return v;
}

struct DualBoundVerdict {
  double norm = 0.0;
  double gamma = 0.0;
  bool passes = false;
};

inline DualBoundVerdict dual_bound_check(const DerivedBounds& bounds, const GlobalDual& xi) {
  DualBoundVerdict v{xi.norm(), bounds.gamma, false};
  v.passes = v.norm <= v.gamma;
  return v;
}

/// Lipschitz constant used for Q_i: G + 4H + 2 sqrt(m) delta + sqrt(n) delta.
inline double dual_lipschitz_constant(const ProblemSpec& spec, const DerivedBounds& bounds) {
  return bounds.g_bound + 4.0 * bounds.h_bound +
         2.0 * std::sqrt(static_cast<double>(spec.constraint_dim())) * spec.delta +
         std::sqrt(static_cast<double>(spec.dim)) * spec.delta;
}

/// Slack of the one-round iterate inequality for a probe point in M^N
/// (per-agent mu with shared lambda, w):
///   rhs - lhs, where
///   lhs = sum_i ||e_i - a D_i||^2
///   rhs = a^2 sum_i ||D_i||^2 + sum_i (||xi_i(k) - p_i||^2 - ||xi_i(k+1) - p_i||^2)
///       + 2a sum_i <D_i, v_i(k) - p_i>.
/// Non-negative up to rounding whenever the mixing matrix is doubly stochastic.
inline double basic_iterate_slack(const RoundRecord& round, const GlobalDual& probe) {
  const auto blocks = probe.blocks();
  require_same_size(blocks.size(), round.agents.size(), "probe blocks");
  const double a = round.alpha;
  double lhs = 0.0;
  double rhs = 0.0;
  for (std::size_t i = 0; i < round.agents.size(); ++i) {
    const AgentRecord& r = round.agents[i];
    const Vec p = blocks[i].stacked();
    const Vec v = r.mixed.stacked();
    const Vec e = subtract(r.dual_after.stacked(), v);
    lhs += squared_norm(axpy(e, -a, r.supgradient));
    rhs += a * a * squared_norm(r.supgradient);
    rhs += squared_norm(subtract(r.dual_before.stacked(), p)) - squared_norm(subtract(r.dual_after.stacked(), p));
    rhs += 2.0 * a * dot(r.supgradient, subtract(v, p));
  }
  return rhs - lhs;
}

}  // namespace dads
