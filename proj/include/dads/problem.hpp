#pragma once

// Primal problem data: per-agent objectives, the shared inequality
// constraint g, the box X, and the relaxation parameters delta/epsilon/theta.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dads/errors.hpp"
#include "dads/graph.hpp"
#include "dads/vector_ops.hpp"

namespace dads {

/// sum_k a_k (x_k - c_k)^2 + b
struct Quadratic {
  Vec a;
  Vec center;
  double offset = 0.0;
  bool operator==(const Quadratic&) const = default;
};

/// One-dimensional, linear between breakpoints and constant outside them.
struct PiecewiseLinear {
  Vec breakpoints;
  Vec values;
  bool operator==(const PiecewiseLinear&) const = default;
};

/// One-dimensional, coefficients in increasing degree.
struct Polynomial {
  Vec coefficients;
  bool operator==(const Polynomial&) const = default;
};

/// row . x + offset
struct Affine {
  Vec row;
  double offset = 0.0;
  bool operator==(const Affine&) const = default;
};

struct BoxSet {
  Vec lower;
  Vec upper;

  std::size_t dim() const noexcept { return lower.size(); }

  void validate() const {
    require_same_size(lower.size(), upper.size(), "box bounds");
    if (lower.empty()) throw InvalidInput("box must have dimension >= 1");
    for (std::size_t k = 0; k < lower.size(); ++k) {
      if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]) || lower[k] > upper[k]) {
        throw InvalidInput("box bounds must be finite with lower <= upper");
      }
    }
  }

  bool contains(std::span<const double> x) const {
    if (x.size() != dim()) return false;
    for (std::size_t k = 0; k < dim(); ++k)
      if (!(x[k] >= lower[k] && x[k] <= upper[k])) return false;
    return true;
  }

  Vec clamp(std::span<const double> x) const {
    require_same_size(x.size(), dim(), "box clamp");
    Vec out(x.begin(), x.end());
    for (std::size_t k = 0; k < dim(); ++k) out[k] = std::clamp(out[k], lower[k], upper[k]);
    return out;
  }

  /// Largest Euclidean norm attained on the box.
  double max_norm() const {
    double s = 0.0;
    for (std::size_t k = 0; k < dim(); ++k) {
      const double m = std::max(std::abs(lower[k]), std::abs(upper[k]));
      s += m * m;
    }
    return std::sqrt(s);
  }

  bool operator==(const BoxSet&) const = default;
};

struct Range {
  double min;
  double max;
};

/// A continuous function R^n -> R drawn from a closed set of parametric kinds.
class ScalarFunction {
 public:
  using Kind = std::variant<Quadratic, PiecewiseLinear, Polynomial, Affine>;

  ScalarFunction() : kind_(Affine{}) {}
  ScalarFunction(Kind kind) : kind_(std::move(kind)) { validate_parameters(); }  // NOLINT implicit
  ScalarFunction(Quadratic k) : ScalarFunction(Kind(std::move(k))) {}         // NOLINT implicit
  ScalarFunction(PiecewiseLinear k) : ScalarFunction(Kind(std::move(k))) {}   // NOLINT implicit
  ScalarFunction(Polynomial k) : ScalarFunction(Kind(std::move(k))) {}        // NOLINT implicit
  ScalarFunction(Affine k) : ScalarFunction(Kind(std::move(k))) {}            // NOLINT implicit

  const Kind& kind() const noexcept { return kind_; }

  std::string kind_name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Quadratic>) return "quadratic";
          if constexpr (std::is_same_v<T, PiecewiseLinear>) return "piecewise_linear";
          if constexpr (std::is_same_v<T, Polynomial>) return "polynomial";
          if constexpr (std::is_same_v<T, Affine>) return "affine";
        },
        kind_);
  }

  /// Dimension the function is defined for; 1-d kinds report 1.
  std::size_t dim() const {
    return std::visit(
        [](const auto& k) -> std::size_t {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Quadratic>) return k.a.size();
          if constexpr (std::is_same_v<T, Affine>) return k.row.size();
          return 1;
        },
        kind_);
  }

  bool is_quadratic_or_affine() const {
    return std::holds_alternative<Quadratic>(kind_) || std::holds_alternative<Affine>(kind_);
  }

  double operator()(std::span<const double> x) const {
    require_same_size(x.size(), dim(), "function evaluation");
    return std::visit([&](const auto& k) { return evaluate(k, x); }, kind_);
  }

  /// Upper bound on the gradient norm over the box (a Lipschitz constant there).
  double lipschitz_bound(const BoxSet& box) const {
    require_same_size(box.dim(), dim(), "lipschitz bound");
    return std::visit(
        [&](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Quadratic>) {
            double s = 0.0;
            for (std::size_t i = 0; i < k.a.size(); ++i) {
              const double r = std::max(std::abs(box.lower[i] - k.center[i]), std::abs(box.upper[i] - k.center[i]));
              const double g = 2.0 * std::abs(k.a[i]) * r;
              s += g * g;
            }
            return std::sqrt(s);
          } else if constexpr (std::is_same_v<T, Affine>) {
            return norm(k.row);
          } else if constexpr (std::is_same_v<T, PiecewiseLinear>) {
            double slope = 0.0;
            for (std::size_t i = 1; i < k.breakpoints.size(); ++i) {
              slope = std::max(slope, std::abs((k.values[i] - k.values[i - 1]) / (k.breakpoints[i] - k.breakpoints[i - 1])));
            }
            return slope;
          } else {
            const double r = std::max(std::abs(box.lower[0]), std::abs(box.upper[0]));
            double s = 0.0;
            for (std::size_t d = 1; d < k.coefficients.size(); ++d) {
              s += static_cast<double>(d) * std::abs(k.coefficients[d]) * std::pow(r, static_cast<double>(d - 1));
            }
            return s;
          }
        },
        kind_);
  }

  /// Range of the function over the box. Exact for every kind except
  /// polynomials, which are scanned on `grid_points` points.
  Range range_over(const BoxSet& box, std::size_t grid_points) const {
    require_same_size(box.dim(), dim(), "range");
    return std::visit(
        [&](const auto& k) -> Range {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Quadratic>) {
            Range r{k.offset, k.offset};
            for (std::size_t i = 0; i < k.a.size(); ++i) {
              const double lo = box.lower[i] - k.center[i];
              const double hi = box.upper[i] - k.center[i];
              const double far = std::max(lo * lo, hi * hi);
              const double near = (lo <= 0.0 && hi >= 0.0) ? 0.0 : std::min(lo * lo, hi * hi);
              r.min += k.a[i] >= 0.0 ? k.a[i] * near : k.a[i] * far;
              r.max += k.a[i] >= 0.0 ? k.a[i] * far : k.a[i] * near;
            }
            return r;
          } else if constexpr (std::is_same_v<T, Affine>) {
            Range r{k.offset, k.offset};
            for (std::size_t i = 0; i < k.row.size(); ++i) {
              const double a = k.row[i] * box.lower[i];
              const double b = k.row[i] * box.upper[i];
              r.min += std::min(a, b);
              r.max += std::max(a, b);
            }
            return r;
          } else if constexpr (std::is_same_v<T, PiecewiseLinear>) {
            const double lo = box.lower[0];
            const double hi = box.upper[0];
            Range r{evaluate(k, std::span<const double>(&lo, 1)), evaluate(k, std::span<const double>(&lo, 1))};
            auto take = [&](double v) {
              r.min = std::min(r.min, v);
              r.max = std::max(r.max, v);
            };
            take(evaluate(k, std::span<const double>(&hi, 1)));
            for (std::size_t i = 0; i < k.breakpoints.size(); ++i)
              if (k.breakpoints[i] > lo && k.breakpoints[i] < hi) take(k.values[i]);
            return r;
          } else {
            const double lo = box.lower[0];
            const double hi = box.upper[0];
            const std::size_t points = std::max<std::size_t>(grid_points, 2);
            Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
            for (std::size_t j = 0; j < points; ++j) {
              const double x = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(points - 1);
              const double v = evaluate(k, std::span<const double>(&x, 1));
              r.min = std::min(r.min, v);
              r.max = std::max(r.max, v);
            }
            return r;
          }
        },
        kind_);
  }

  bool operator==(const ScalarFunction&) const = default;

 private:
  static double evaluate(const Quadratic& q, std::span<const double> x) {
    double s = q.offset;
    for (std::size_t i = 0; i < x.size(); ++i) s += q.a[i] * (x[i] - q.center[i]) * (x[i] - q.center[i]);
    return s;
  }
  static double evaluate(const Affine& f, std::span<const double> x) { return dot(f.row, x) + f.offset; }
  static double evaluate(const Polynomial& p, std::span<const double> x) {
    double s = 0.0;
    for (auto it = p.coefficients.rbegin(); it != p.coefficients.rend(); ++it) s = s * x[0] + *it;
    return s;
  }
  static double evaluate(const PiecewiseLinear& f, std::span<const double> x) {
    const double z = x[0];
    const auto& bp = f.breakpoints;
    if (z <= bp.front()) return f.values.front();
    if (z >= bp.back()) return f.values.back();
    const auto upper = std::upper_bound(bp.begin(), bp.end(), z);
    const std::size_t i = static_cast<std::size_t>(upper - bp.begin());
    const double t = (z - bp[i - 1]) / (bp[i] - bp[i - 1]);
    return f.values[i - 1] + t * (f.values[i] - f.values[i - 1]);
  }

  void validate_parameters() const {
    std::visit(
        [](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Quadratic>) {
            if (k.a.empty()) throw InvalidInput("quadratic needs at least one coordinate");
            require_same_size(k.a.size(), k.center.size(), "quadratic coefficients");
          } else if constexpr (std::is_same_v<T, Affine>) {
            if (k.row.empty()) throw InvalidInput("affine function needs a non-empty row");
          } else if constexpr (std::is_same_v<T, Polynomial>) {
            if (k.coefficients.empty()) throw InvalidInput("polynomial needs at least one coefficient");
          } else {
            if (k.breakpoints.empty()) throw InvalidInput("piecewise-linear function needs breakpoints");
            require_same_size(k.breakpoints.size(), k.values.size(), "piecewise-linear breakpoints/values");
            for (std::size_t i = 1; i < k.breakpoints.size(); ++i) {
              if (!(k.breakpoints[i] > k.breakpoints[i - 1])) {
                throw InvalidInput("piecewise-linear breakpoints must be strictly increasing");
              }
            }
          }
        },
        kind_);
  }

  Kind kind_;
};

struct ProblemSpec {
  std::size_t n_agents = 0;
  std::size_t dim = 1;
  std::vector<ScalarFunction> objectives;
  /// Components g_1..g_m; may be empty.
  std::vector<ScalarFunction> constraints;
  BoxSet domain;
  double delta = 1.0;
  double epsilon = 0.1;
  double theta = 0.35;
  std::optional<Vec> slater_point;
  /// Per-agent Slater candidates, reconciled by max-consensus when no common point is given.
  std::vector<Vec> slater_proposals;
  std::optional<double> gamma_override;

  std::size_t constraint_dim() const noexcept { return constraints.size(); }
  std::size_t stacked_dim() const noexcept { return dim * n_agents; }
  /// Length of one agent's dual block (mu, lambda, w).
  std::size_t dual_dim() const noexcept { return constraint_dim() + 2 * stacked_dim(); }

  void validate() const {
    if (n_agents < 2) throw InvalidInput("problem needs at least 2 agents");
    if (dim < 1) throw InvalidInput("problem dimension must be >= 1");
    if (objectives.size() != n_agents) throw InvalidInput("need exactly one objective per agent");
    domain.validate();
    require_same_size(domain.dim(), dim, "domain");
    for (const auto& f : objectives) require_same_size(f.dim(), dim, "objective");
    for (const auto& g : constraints) require_same_size(g.dim(), dim, "constraint component");
    if (!(delta > 0.0)) throw InvalidInput("delta must be positive");
    if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be positive");
    if (!(theta > 0.0)) throw InvalidInput("theta must be positive");
    if (gamma_override && !(*gamma_override > 0.0)) throw InvalidInput("gamma override must be positive");
    if (slater_point) require_same_size(slater_point->size(), dim, "slater point");
    if (!slater_proposals.empty()) {
      if (slater_proposals.size() != n_agents) throw InvalidInput("need one Slater proposal per agent");
      for (const auto& p : slater_proposals) require_same_size(p.size(), dim, "slater proposal");
    }
  }

  bool operator==(const ProblemSpec&) const = default;
};

inline double eval_objective(const ProblemSpec& spec, std::size_t agent, std::span<const double> x) {
  if (agent >= spec.n_agents) throw InvalidInput("agent index out of range");
  require_same_size(x.size(), spec.dim, "objective argument");
  return spec.objectives[agent](x);
}

inline Vec eval_constraint(const ProblemSpec& spec, std::span<const double> x) {
  require_same_size(x.size(), spec.dim, "constraint argument");
  Vec out;
  out.reserve(spec.constraint_dim());
  for (const auto& g : spec.constraints) out.push_back(g(x));
  return out;
}

inline double total_objective(const ProblemSpec& spec, const std::vector<Vec>& x_stack) {
  require_same_size(x_stack.size(), spec.n_agents, "primal stack");
  double s = 0.0;
  for (std::size_t i = 0; i < spec.n_agents; ++i) s += eval_objective(spec, i, x_stack[i]);
  return s;
}

/// True iff z lies in X and every g component is strictly negative there.
inline bool is_strict_slater(const ProblemSpec& spec, std::span<const double> z) {
  if (!spec.domain.contains(z)) return false;
  for (double v : eval_constraint(spec, z))
    if (!(v < 0.0)) return false;
  return true;
}

/// One band constraint of the relaxed problem:
///   sign = +1:  -x_i + x_{down} - delta <= 0
///   sign = -1:   x_i - x_{down} - delta <= 0
struct BandConstraint {
  std::size_t agent;
  std::size_t down;
  int sign;
  double delta;

  /// Left-hand side per coordinate.
  Vec lhs(const std::vector<Vec>& x_stack) const {
    const Vec& xi = x_stack.at(agent);
    const Vec& xd = x_stack.at(down);
    Vec out(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k) out[k] = sign * (xd[k] - xi[k]) - delta;
    return out;
  }

  double max_violation(const std::vector<Vec>& x_stack) const {
    const Vec v = lhs(x_stack);
    return std::max(0.0, *std::max_element(v.begin(), v.end()));
  }
};

/// The 2N band constraints coupling each agent to its cycle successor.
inline std::vector<BandConstraint> approximate_problem_constraints(const ProblemSpec& spec, const CyclicGraph& cycle) {
  if (cycle.size() != spec.n_agents) throw InvalidInput("cycle size differs from the agent count");
  std::vector<BandConstraint> out;
  out.reserve(2 * spec.n_agents);
  for (std::size_t i = 0; i < spec.n_agents; ++i) {
    out.push_back({i, cycle.down(i), +1, spec.delta});
    out.push_back({i, cycle.down(i), -1, spec.delta});
  }
  return out;
}

/// Four agents on X = [0, 10] with two non-convex piecewise-linear objectives
/// and two convex quadratics; no inequality constraint.
inline ProblemSpec nonconvex_four_agent_problem() {
  ProblemSpec spec;
  spec.n_agents = 4;
  spec.dim = 1;
  spec.objectives = {
      PiecewiseLinear{{0.0, 1.0, 2.0}, {0.0, 0.0, 1.0}},
      PiecewiseLinear{{2.0, 3.0}, {1.0, 2.0}},
      Quadratic{{1.0}, {-0.25}, 0.0},
      Quadratic{{1.0}, {0.5}, 0.0},
  };
  spec.domain = BoxSet{{0.0}, {10.0}};
  spec.delta = 1.0;
  spec.epsilon = 0.1;
  spec.theta = 0.35;
  spec.slater_point = Vec{0.5};
  spec.gamma_override = 2.65;
  return spec;
}

}  // namespace dads
