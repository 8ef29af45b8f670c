#pragma once

// Independent oracles and random instances shared by the test binaries.
// Nothing here calls into the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dads/local_solver.hpp"
#include "dads/problem.hpp"
#include "dads/vector_ops.hpp"

namespace dads::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Vec random_vec(Rng& rng, std::size_t n, double lo, double hi) {
  Vec v(n);
  for (double& x : v) x = uniform(rng, lo, hi);
  return v;
}

/// Random nonnegative dual block with components in [0, hi].
inline DualBlock random_dual(Rng& rng, const ProblemSpec& spec, double hi) {
  return DualBlock{random_vec(rng, spec.constraint_dim(), 0.0, hi), random_vec(rng, spec.stacked_dim(), 0.0, hi),
                   random_vec(rng, spec.stacked_dim(), 0.0, hi)};
}

/// Euclidean projection onto {v >= 0} intersected with the ball of the given
/// radius by Dykstra's alternating projections.
inline Vec dykstra_projection(const Vec& z, double radius, int iterations = 20000, double tol = 1e-14) {
  const std::size_t n = z.size();
  Vec x = z, p(n, 0.0), q(n, 0.0), y(n);
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t k = 0; k < n; ++k) y[k] = std::max(0.0, x[k] + p[k]);
    for (std::size_t k = 0; k < n; ++k) p[k] = x[k] + p[k] - y[k];
    Vec u(n);
    for (std::size_t k = 0; k < n; ++k) u[k] = y[k] + q[k];
    double nu = 0.0;
    for (double v : u) nu += v * v;
    nu = std::sqrt(nu);
    Vec next = u;
    if (nu > radius)
      for (double& v : next) v *= radius / nu;
    for (std::size_t k = 0; k < n; ++k) q[k] = y[k] + q[k] - next[k];
    double change = 0.0;
    for (std::size_t k = 0; k < n; ++k) change = std::max(change, std::abs(next[k] - x[k]));
    x = next;
    if (change < tol) break;
  }
  return x;
}

/// Piecewise-linear interpolation written out by hand.
inline double pwl_oracle(const Vec& xs, const Vec& ys, double t) {
  if (t <= xs.front()) return ys.front();
  if (t >= xs.back()) return ys.back();
  std::size_t k = 0;
  while (!(t >= xs[k] && t <= xs[k + 1])) ++k;
  const double s = (t - xs[k]) / (xs[k + 1] - xs[k]);
  return ys[k] * (1.0 - s) + ys[k + 1] * s;
}

/// Horner-free polynomial evaluation.
inline double poly_oracle(const Vec& c, double t) {
  double total = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) total += c[k] * std::pow(t, static_cast<double>(k));
  return total;
}

/// The local Lagrangian assembled from the problem data directly.
inline double lagrangian_oracle(const ProblemSpec& spec, std::size_t agent, const Vec& x, const DualBlock& d) {
  const std::size_t n = spec.dim;
  const std::size_t up = (agent + spec.n_agents - 1) % spec.n_agents;
  double v = eval_objective(spec, agent, x);
  const Vec g = eval_constraint(spec, x);
  for (std::size_t l = 0; l < g.size(); ++l) v += d.mu[l] * g[l];
  for (std::size_t k = 0; k < n; ++k) {
    v += (-d.lambda[agent * n + k] + d.lambda[up * n + k]) * x[k];
    v += (d.w[agent * n + k] - d.w[up * n + k]) * x[k];
    v -= spec.delta * (d.lambda[agent * n + k] + d.w[agent * n + k]);
  }
  return v;
}

/// Dense scan of a one-dimensional local Lagrangian.
inline double dense_scan_minimum(const ProblemSpec& spec, std::size_t agent, const DualBlock& d, std::size_t points) {
  double best = std::numeric_limits<double>::infinity();
  const double lo = spec.domain.lower[0];
  const double hi = spec.domain.upper[0];
  for (std::size_t s = 0; s < points; ++s) {
    const double t = lo + (hi - lo) * static_cast<double>(s) / static_cast<double>(points - 1);
    best = std::min(best, lagrangian_oracle(spec, agent, Vec{t}, d));
  }
  return best;
}

/// Three agents on [-1, 2] with one affine constraint x - 1.5 <= 0 and mixed objective kinds.
inline ProblemSpec constrained_instance() {
  ProblemSpec p;
  p.n_agents = 3;
  p.dim = 1;
  p.domain = BoxSet{{-1.0}, {2.0}};
  p.objectives = {Quadratic{{1.0}, {1.8}, 0.0}, PiecewiseLinear{{-1.0, 0.0, 1.0, 2.0}, {1.0, 0.2, 0.5, -0.3}},
                  Polynomial{{0.0, -0.5, -1.0, 0.0, 0.6}}};
  p.constraints = {Affine{{1.0}, -1.5}};
  p.delta = 0.5;
  p.epsilon = 0.05;
  p.theta = 0.5;
  p.slater_point = Vec{0.0};
  return p;
}

/// Two agents in the plane, quadratic objectives, unit-disc constraint.
inline ProblemSpec planar_instance() {
  ProblemSpec p;
  p.n_agents = 2;
  p.dim = 2;
  p.domain = BoxSet{{-1.0, -1.0}, {1.0, 1.0}};
  p.objectives = {Quadratic{{1.0, 0.5}, {0.8, -0.2}, 0.0}, Quadratic{{0.3, 1.0}, {-0.4, 0.6}, 0.1}};
  p.constraints = {Quadratic{{1.0, 1.0}, {0.0, 0.0}, -1.0}};
  p.delta = 0.4;
  p.epsilon = 0.05;
  p.theta = 0.5;
  p.slater_point = Vec{0.0, 0.0};
  return p;
}

/// Two agents on [0, 3] with nonconvex polynomial objectives and no constraint.
inline ProblemSpec two_agent_polynomial_instance() {
  ProblemSpec p;
  p.n_agents = 2;
  p.dim = 1;
  p.domain = BoxSet{{0.0}, {3.0}};
  p.objectives = {Polynomial{{1.0, -2.0, 0.5, 0.3, -0.1}}, Polynomial{{0.0, 1.0, -1.5, 0.4}}};
  p.delta = 0.5;
  p.epsilon = 0.05;
  p.theta = 0.5;
  p.slater_point = Vec{1.0};
  return p;
}

}  // namespace dads::testing
