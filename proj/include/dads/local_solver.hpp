#pragma once

// The local Lagrangian L_i(x, xi_i) and its global minimisation over the box X.
//
//   L_i(x, xi_i) = f_i(x) + <mu_i, g(x)> + <-lambda_i + lambda_up, x>
//                + <w_i - w_up, x> - <lambda_i, Delta> - <w_i, Delta>
//
// where lambda_i, lambda_up, w_i, w_up are the length-n blocks of the agent's
// full multiplier estimates at its own index and at its cycle predecessor.
// The minimum value is the local dual function Q_i(xi_i).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "dads/errors.hpp"
#include "dads/graph.hpp"
#include "dads/problem.hpp"
#include "dads/vector_ops.hpp"

namespace dads {

/// One agent's dual estimate xi_i = (mu_i, lambda^i, w^i).
struct DualBlock {
  Vec mu;
  Vec lambda;
  Vec w;

  static DualBlock zeros(std::size_t m, std::size_t stacked) {
    return DualBlock{Vec(m, 0.0), Vec(stacked, 0.0), Vec(stacked, 0.0)};
  }

  static DualBlock zeros_for(const ProblemSpec& spec) { return zeros(spec.constraint_dim(), spec.stacked_dim()); }

  /// Splits a stacked (mu, lambda, w) vector.
  static DualBlock from_stacked(std::span<const double> v, std::size_t m, std::size_t stacked) {
    require_same_size(v.size(), m + 2 * stacked, "stacked dual");
    DualBlock d;
    d.mu.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m));
    d.lambda.assign(v.begin() + static_cast<std::ptrdiff_t>(m), v.begin() + static_cast<std::ptrdiff_t>(m + stacked));
    d.w.assign(v.begin() + static_cast<std::ptrdiff_t>(m + stacked), v.end());
    return d;
  }

  Vec stacked() const {
    Vec out;
    out.reserve(mu.size() + lambda.size() + w.size());
    out.insert(out.end(), mu.begin(), mu.end());
    out.insert(out.end(), lambda.begin(), lambda.end());
    out.insert(out.end(), w.begin(), w.end());
    return out;
  }

  double norm() const { return std::sqrt(squared_norm(mu) + squared_norm(lambda) + squared_norm(w)); }

  bool nonnegative() const {
    auto ok = [](const Vec& v) { return std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; }); };
    return ok(mu) && ok(lambda) && ok(w);
  }

  bool operator==(const DualBlock&) const = default;
};

struct LocalSolution {
  Vec minimizer;
  double value = 0.0;
  /// Upper bound on value - (true minimum); zero for the analytic paths.
  double certified_gap = 0.0;
};

struct SolverResolution {
  /// Grid points per dimension; 0 selects the default for the dimension.
  std::size_t grid_points = 0;
  std::size_t refine_iterations = 100;
  double refine_tolerance = 1e-10;

  std::size_t points_for(std::size_t dim) const {
    if (grid_points != 0) return std::max<std::size_t>(grid_points, 2);
    switch (dim) {
      case 1:
      case 2:
        return 4097;
      case 3:
        return 129;
      default:
        return 33;
    }
  }

  bool operator==(const SolverResolution&) const = default;
};

inline constexpr std::size_t kMaxExhaustiveDim = 4;

namespace detail {

inline void check_dual_shape(const ProblemSpec& spec, const DualBlock& dual) {
  require_same_size(dual.mu.size(), spec.constraint_dim(), "dual mu");
  require_same_size(dual.lambda.size(), spec.stacked_dim(), "dual lambda");
  require_same_size(dual.w.size(), spec.stacked_dim(), "dual w");
}

/// The multiplier terms of L_i collapse to <coef, x> + constant.
struct LinearTerm {
  Vec coef;
  double constant = 0.0;
};

inline LinearTerm linear_term(const ProblemSpec& spec, const CyclicGraph& cycle, std::size_t agent,
                              const DualBlock& dual) {
  const std::size_t n = spec.dim;
  const std::size_t own = agent * n;
  const std::size_t up = cycle.up(agent) * n;
  LinearTerm t{Vec(n, 0.0), 0.0};
  for (std::size_t k = 0; k < n; ++k) {
    t.coef[k] = -dual.lambda[own + k] + dual.lambda[up + k] + dual.w[own + k] - dual.w[up + k];
    t.constant -= spec.delta * (dual.lambda[own + k] + dual.w[own + k]);
  }
  return t;
}

inline double lagrangian_value(const ProblemSpec& spec, std::size_t agent, const DualBlock& dual,
                               const LinearTerm& lin, std::span<const double> x) {
  double v = spec.objectives[agent](x) + dot(lin.coef, x) + lin.constant;
  for (std::size_t l = 0; l < spec.constraint_dim(); ++l) v += dual.mu[l] * spec.constraints[l](x);
  return v;
}

/// Minimiser of a*x^2 + b*x on [lo, hi], smallest one on ties.
inline double minimize_quadratic_1d(double a, double b, double lo, double hi) {
  if (a > 0.0) return std::clamp(-b / (2.0 * a), lo, hi);
  if (a == 0.0) return b < 0.0 ? hi : lo;
  const double f_lo = a * lo * lo + b * lo;
  const double f_hi = a * hi * hi + b * hi;
  return f_hi < f_lo ? hi : lo;
}

/// Separable quadratic coefficients: L = sum_k A_k x_k^2 + B_k x_k + const.
/// Valid when every function in L is quadratic or affine.
inline void accumulate_separable(const ScalarFunction& f, double weight, Vec& quad, Vec& lin) {
  if (const auto* q = std::get_if<Quadratic>(&f.kind())) {
    for (std::size_t k = 0; k < quad.size(); ++k) {
      quad[k] += weight * q->a[k];
      lin[k] -= weight * 2.0 * q->a[k] * q->center[k];
    }
  } else if (const auto* a = std::get_if<Affine>(&f.kind())) {
    for (std::size_t k = 0; k < lin.size(); ++k) lin[k] += weight * a->row[k];
  }
}

inline bool constraints_affine(const ProblemSpec& spec) {
  return std::all_of(spec.constraints.begin(), spec.constraints.end(),
                     [](const ScalarFunction& g) { return std::holds_alternative<Affine>(g.kind()); });
}

inline bool constraints_quadratic_or_affine(const ProblemSpec& spec) {
  return std::all_of(spec.constraints.begin(), spec.constraints.end(),
                     [](const ScalarFunction& g) { return g.is_quadratic_or_affine(); });
}

}  // namespace detail

inline double local_lagrangian(const ProblemSpec& spec, const CyclicGraph& cycle, std::size_t agent,
                               std::span<const double> x, const DualBlock& dual) {
  if (agent >= spec.n_agents) throw InvalidInput("agent index out of range");
  require_same_size(x.size(), spec.dim, "lagrangian argument");
  detail::check_dual_shape(spec, dual);
  return detail::lagrangian_value(spec, agent, dual, detail::linear_term(spec, cycle, agent, dual), x);
}

/// Lipschitz bound of x -> L_i(x, dual) over the box.
inline double lagrangian_lipschitz_bound(const ProblemSpec& spec, const CyclicGraph& cycle, std::size_t agent,
                                         const DualBlock& dual) {
  double lip = spec.objectives[agent].lipschitz_bound(spec.domain);
  for (std::size_t l = 0; l < spec.constraint_dim(); ++l)
    lip += std::abs(dual.mu[l]) * spec.constraints[l].lipschitz_bound(spec.domain);
  lip += norm(detail::linear_term(spec, cycle, agent, dual).coef);
  return lip;
}

/// True when solve_local uses a closed-form minimiser for this agent.
namespace detail {

/// Upper bound on |h''| over the box for a one-dimensional function; piecewise-linear
/// pieces count as zero because their breakpoints are grid nodes.
inline double curvature_bound_1d(const ScalarFunction& f, const BoxSet& box) {
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Quadratic>) {
          return 2.0 * std::abs(k.a[0]);
        } else if constexpr (std::is_same_v<T, Polynomial>) {
          const double r = std::max(std::abs(box.lower[0]), std::abs(box.upper[0]));
          double s = 0.0;
          for (std::size_t d = 2; d < k.coefficients.size(); ++d) {
            s += static_cast<double>(d * (d - 1)) * std::abs(k.coefficients[d]) * std::pow(r, static_cast<double>(d - 2));
          }
          return s;
        } else {
          return 0.0;
        }
      },
      f.kind());
}

inline void add_breakpoints(const ScalarFunction& f, double lo, double hi, Vec& nodes) {
  if (const auto* pwl = std::get_if<PiecewiseLinear>(&f.kind())) {
    for (double b : pwl->breakpoints)
      if (b > lo && b < hi) nodes.push_back(b);
  }
}

/// Uniform grid plus breakpoints, golden-section refinement around the best
/// node. The gap certificate is the smaller of a Lipschitz bound and a
/// curvature bound: between nodes a and b, L >= min(L(a), L(b)) - C (b - a)^2 / 8.
inline LocalSolution solve_grid_1d(const ProblemSpec& spec, const CyclicGraph& cycle, std::size_t agent,
                                   const DualBlock& dual, const LinearTerm& lin, const SolverResolution& resolution) {
  const double lo = spec.domain.lower[0];
  const double hi = spec.domain.upper[0];
  const std::size_t points = resolution.points_for(1);
  Vec nodes;
  nodes.reserve(points + 8);
  for (std::size_t j = 0; j + 1 < points; ++j)
    nodes.push_back(lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(points - 1));
  nodes.push_back(hi);
  add_breakpoints(spec.objectives[agent], lo, hi, nodes);
  for (const auto& g : spec.constraints) add_breakpoints(g, lo, hi, nodes);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  auto value_at = [&](double t) { return lagrangian_value(spec, agent, dual, lin, std::span<const double>(&t, 1)); };
  Vec values(nodes.size());
  std::size_t best_j = 0;
  double max_cell = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    values[j] = value_at(nodes[j]);
    if (values[j] < values[best_j]) best_j = j;
    if (j > 0) max_cell = std::max(max_cell, nodes[j] - nodes[j - 1]);
  }

  constexpr double kInvPhi = 0.6180339887498949;
  double best_x = nodes[best_j];
  double best = values[best_j];
  double a = nodes[best_j > 0 ? best_j - 1 : 0];
  double b = nodes[std::min(best_j + 1, nodes.size() - 1)];
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = value_at(c);
  double fd = value_at(d);
  for (std::size_t it = 0; it < 64 * resolution.refine_iterations && b - a > resolution.refine_tolerance; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = value_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = value_at(d);
    }
  }
  const double t = fc <= fd ? c : d;
  if (std::min(fc, fd) < best) {
    best_x = t;
    best = std::min(fc, fd);
  }

  double curvature = curvature_bound_1d(spec.objectives[agent], spec.domain);
  for (std::size_t l = 0; l < spec.constraint_dim(); ++l)
    curvature += std::abs(dual.mu[l]) * curvature_bound_1d(spec.constraints[l], spec.domain);
  const double slack = std::min(lagrangian_lipschitz_bound(spec, cycle, agent, dual) * 0.5 * max_cell,
                                curvature * max_cell * max_cell / 8.0);
  return LocalSolution{Vec{best_x}, best, std::max(0.0, best - values[best_j] + slack)};
}

}  // namespace detail

inline bool has_analytic_minimizer(const ProblemSpec& spec, std::size_t agent) {
  const auto& f = spec.objectives[agent];
  if (f.is_quadratic_or_affine() && detail::constraints_quadratic_or_affine(spec)) return true;
  return std::holds_alternative<PiecewiseLinear>(f.kind()) && detail::constraints_affine(spec);
}

/// Globally minimises L_i(., dual) over X. Quadratic/affine data and
/// piecewise-linear objectives with affine constraints are solved in closed
/// form; anything else falls back to an exhaustive grid plus golden-section
/// refinement, with a certificate on the gap.
inline LocalSolution solve_local(const ProblemSpec& spec, const CyclicGraph& cycle, std::size_t agent,
                                 const DualBlock& dual, const SolverResolution& resolution = {}) {
  if (agent >= spec.n_agents) throw InvalidInput("agent index out of range");
  detail::check_dual_shape(spec, dual);
  const std::size_t n = spec.dim;
  const BoxSet& box = spec.domain;
  const auto lin = detail::linear_term(spec, cycle, agent, dual);
  const auto& f = spec.objectives[agent];

  auto finish = [&](Vec x, double gap) {
    const double value = detail::lagrangian_value(spec, agent, dual, lin, x);
    return LocalSolution{std::move(x), value, gap};
  };

  if (f.is_quadratic_or_affine() && detail::constraints_quadratic_or_affine(spec)) {
    Vec quad(n, 0.0);
    Vec linear = lin.coef;
    detail::accumulate_separable(f, 1.0, quad, linear);
    for (std::size_t l = 0; l < spec.constraint_dim(); ++l)
      detail::accumulate_separable(spec.constraints[l], dual.mu[l], quad, linear);
    Vec x(n);
    for (std::size_t k = 0; k < n; ++k)
      x[k] = detail::minimize_quadratic_1d(quad[k], linear[k], box.lower[k], box.upper[k]);
    return finish(std::move(x), 0.0);
  }

  if (const auto* pwl = std::get_if<PiecewiseLinear>(&f.kind()); pwl && detail::constraints_affine(spec)) {
    // Linear between consecutive candidates, so the minimum sits on one of them.
    const double lo = box.lower[0];
    const double hi = box.upper[0];
    Vec candidates{lo};
    for (double b : pwl->breakpoints)
      if (b > lo && b < hi) candidates.push_back(b);
    candidates.push_back(hi);
    double best_x = lo;
    double best = std::numeric_limits<double>::infinity();
    for (double c : candidates) {
      const double v = detail::lagrangian_value(spec, agent, dual, lin, std::span<const double>(&c, 1));
      if (v < best) {
        best = v;
        best_x = c;
      }
    }
    return finish(Vec{best_x}, 0.0);
  }

  if (n == 1) return detail::solve_grid_1d(spec, cycle, agent, dual, lin, resolution);

  if (n > kMaxExhaustiveDim) {
    throw CapabilityError("exhaustive local solve supports dimension <= 4, got " + std::to_string(n));
  }

  const std::size_t points = resolution.points_for(n);
  Vec step(n);
  for (std::size_t k = 0; k < n; ++k) step[k] = (box.upper[k] - box.lower[k]) / static_cast<double>(points - 1);
  auto coordinate = [&](std::size_t k, std::size_t j) {
    return j + 1 == points ? box.upper[k] : box.lower[k] + step[k] * static_cast<double>(j);
  };

  // Lexicographic scan: first coordinate is the most significant, strict '<'
  // keeps the smallest minimiser among ties.
  std::vector<std::size_t> idx(n, 0);
  Vec x(n), best_x(n);
  double best = std::numeric_limits<double>::infinity();
  for (bool done = false; !done;) {
    for (std::size_t k = 0; k < n; ++k) x[k] = coordinate(k, idx[k]);
    const double v = detail::lagrangian_value(spec, agent, dual, lin, x);
    if (v < best) {
      best = v;
      best_x = x;
    }
    for (std::size_t k = n;;) {
      if (k == 0) {
        done = true;
        break;
      }
      --k;
      if (++idx[k] < points) break;
      idx[k] = 0;
    }
  }

  // Coordinate-wise golden-section search inside the best cell's neighbourhood.
  constexpr double kInvPhi = 0.6180339887498949;
  Vec cur = best_x;
  double cur_value = best;
  for (std::size_t sweep = 0; sweep < resolution.refine_iterations; ++sweep) {
    const double before = cur_value;
    for (std::size_t k = 0; k < n; ++k) {
      double a = std::max(box.lower[k], best_x[k] - step[k]);
      double b = std::min(box.upper[k], best_x[k] + step[k]);
      Vec probe = cur;
      auto eval_at = [&](double t) {
        probe[k] = t;
        return detail::lagrangian_value(spec, agent, dual, lin, probe);
      };
      double c = b - kInvPhi * (b - a);
      double d = a + kInvPhi * (b - a);
      double fc = eval_at(c);
      double fd = eval_at(d);
      while (b - a > resolution.refine_tolerance) {
        if (fc <= fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - kInvPhi * (b - a);
          fc = eval_at(c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + kInvPhi * (b - a);
          fd = eval_at(d);
        }
      }
      const double t = fc <= fd ? c : d;
      const double ft = std::min(fc, fd);
      if (ft < cur_value) {
        cur[k] = t;
        cur_value = ft;
      }
    }
    if (!(cur_value < before - resolution.refine_tolerance)) break;
  }

  double half_diag = 0.0;
  for (double h : step) half_diag += 0.25 * h * h;
  const double gap = lagrangian_lipschitz_bound(spec, cycle, agent, dual) * std::sqrt(half_diag);
  return finish(box.clamp(cur), gap);
}

/// Membership in the epsilon-approximate marginal set at this dual point.
inline bool in_approx_marginal(const ProblemSpec& spec, const CyclicGraph& cycle, std::size_t agent,
                               std::span<const double> x, const DualBlock& dual, double eps, double q_value) {
  return local_lagrangian(spec, cycle, agent, x, dual) <= q_value + eps;
}

}  // namespace dads
