#pragma once

// Distributed approximate dual subgradient iteration.
//
// Every agent i keeps a primal estimate x_i(k) in X and a dual block
// xi_i(k) = (mu_i, lambda^i, w^i). Round k:
//   1. mix:   v_i(k) = (mu_i(k), sum_j a^i_j(k) lambda^j(k), sum_j a^i_j(k) w^j(k))
//   2. primal (k >= 1): keep x_i(k-1) if L_i(x_i(k-1), v_i(k)) <= Q_i(v_i(k)) + eps,
//      otherwise jump to a global minimiser of L_i(., v_i(k))
//   3. dual:  xi_i(k+1) = P_M[v_i(k) + alpha(k) D_i(k)], with D_i(k) the
//      approximate supgradient built from x_i(k) and M the nonnegative part of
//      the ball of radius gamma + theta.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dads/bounds.hpp"
#include "dads/consensus.hpp"
#include "dads/errors.hpp"
#include "dads/graph.hpp"
#include "dads/local_solver.hpp"
#include "dads/problem.hpp"
#include "dads/vector_ops.hpp"

namespace dads {

/// alpha(k) = a / (k+1)^p. Harmonic is p = 1.
struct StepSizeSchedule {
  enum class Kind { kHarmonic, kPower };
  Kind kind = Kind::kHarmonic;
  double scale = 1.0;
  double power = 1.0;

  void validate() const {
    if (!(scale > 0.0)) throw InvalidInput("step-size scale must be positive");
    if (kind == Kind::kPower && !(power > 0.5 && power <= 1.0)) {
      throw InvalidInput("step-size power must lie in (0.5, 1]");
    }
  }

  double operator()(std::int64_t k) const {
    const double base = static_cast<double>(k + 1);
    return kind == Kind::kHarmonic ? scale / base : scale / std::pow(base, power);
  }

  bool operator==(const StepSizeSchedule&) const = default;
};

/// v_i(k): the agent's own mu with consensus-mixed lambda and w. mu is never mixed.
struct MixedDual {
  Vec mu;
  Vec v_lambda;
  Vec v_w;

  DualBlock as_block() const { return DualBlock{mu, v_lambda, v_w}; }
  Vec stacked() const { return as_block().stacked(); }
};

struct AgentState {
  Vec primal;
  DualBlock dual;
  /// Last round in which the primal estimate moved.
  std::optional<std::int64_t> last_settle_round;
};

struct StallDetection {
  bool enabled = true;
  double tolerance = 1e-9;
  std::int64_t window = 20;
  std::int64_t min_rounds = 150;

  bool operator==(const StallDetection&) const = default;
};

struct EngineConfig {
  std::int64_t rounds = 150;
  StepSizeSchedule step;
  /// Empty: every agent starts at the lower corner of X.
  std::vector<Vec> initial_primal;
  /// Empty: every agent starts at zero.
  std::vector<DualBlock> initial_dual;
  SolverResolution solver;
  StallDetection stall;
  std::size_t parallelism = 1;
  std::uint64_t seed = 0;

  bool operator==(const EngineConfig&) const = default;
};

struct EngineState {
  ProblemSpec spec;
  WeightSchedule schedule;
  CyclicGraph cycle{2};
  Vec slater;
  std::int64_t slater_consensus_rounds = 0;
  Vec gamma_i;
  double gamma = 0.0;
  std::int64_t gamma_consensus_rounds = 0;
  double radius = 0.0;
  std::vector<AgentState> agents;
};

/// Checks Assumptions 1-3 on every matrix of a periodic schedule.
inline void validate_assumptions(const WeightSchedule& schedule, std::size_t n_agents) {
  if (schedule.matrices.empty()) throw InvalidInput("empty weight schedule");
  if (schedule.n_agents() != n_agents) {
    throw InvalidInput("weight schedule has " + std::to_string(schedule.n_agents()) + " agents, problem has " +
                       std::to_string(n_agents));
  }
  for (std::size_t k = 0; k < schedule.matrices.size(); ++k) {
    if (!validate_nondegeneracy(schedule.matrices[k], schedule.alpha_min)) {
      throw AssumptionViolation(Assumption::kNonDegeneracy,
                                "matrix " + std::to_string(k) + " has a weight below alpha_min");
    }
    if (!validate_balanced(schedule.matrices[k])) {
      throw AssumptionViolation(Assumption::kBalanced, "matrix " + std::to_string(k) + " is not doubly stochastic");
    }
  }
  const int period = schedule.period_hint;
  if (period < 1) throw InvalidInput("connectivity period must be >= 1");
  // Windows starting at 0..size-1 cover every window of a periodic schedule.
  const auto horizon = static_cast<std::int64_t>(schedule.matrices.size()) + period - 1;
  if (!validate_periodic_connectivity(schedule, period, horizon)) {
    throw AssumptionViolation(Assumption::kPeriodicConnectivity,
                              "some window of " + std::to_string(period) + " rounds is not strongly connected");
  }
}

inline std::int64_t max_consensus_budget(const WeightSchedule& schedule) {
  return static_cast<std::int64_t>(schedule.n_agents() - 1) * schedule.period_hint +
         static_cast<std::int64_t>(schedule.matrices.size());
}

/// Fixes the common Slater point and gamma by max-consensus, then sets the
/// initial primal and dual states.
inline EngineState initialize(const ProblemSpec& spec, const WeightSchedule& schedule, const CyclicGraph& cycle,
                              std::vector<Vec> init_primal, std::vector<DualBlock> init_dual,
                              const SolverResolution& resolution = {}) {
  spec.validate();
  if (cycle.size() != spec.n_agents) throw InvalidInput("cycle size differs from the agent count");
  require_same_size(schedule.n_agents(), spec.n_agents, "weight schedule agents");

  EngineState st;
  st.spec = spec;
  st.schedule = schedule;
  st.cycle = cycle;

  if (spec.slater_point) {
    if (!is_strict_slater(spec, *spec.slater_point)) {
      throw AssumptionViolation(Assumption::kSlater, "the given Slater point is not strictly feasible in X");
    }
    st.slater = *spec.slater_point;
  } else {
    if (spec.slater_proposals.empty()) throw AssumptionViolation(Assumption::kSlater, "no Slater point or proposals");
    for (std::size_t i = 0; i < spec.n_agents; ++i) {
      if (!is_strict_slater(spec, spec.slater_proposals[i])) {
        throw AssumptionViolation(Assumption::kSlater,
                                  "agent " + std::to_string(i + 1) + " proposes a point that is not strictly feasible");
      }
    }
    const auto agreed = max_consensus(spec.slater_proposals, schedule, max_consensus_budget(schedule));
    st.slater = agreed.value;
    st.slater_consensus_rounds = agreed.rounds_used;
  }
  st.spec.slater_point = st.slater;

  std::vector<Vec> gammas;
  for (std::size_t i = 0; i < spec.n_agents; ++i) {
    st.gamma_i.push_back(agent_gamma(st.spec, i, st.slater, resolution));
    gammas.push_back(Vec{st.gamma_i.back()});
  }
  const auto agreed_gamma = max_consensus(gammas, schedule, max_consensus_budget(schedule));
  st.gamma_consensus_rounds = agreed_gamma.rounds_used;
  st.gamma = spec.gamma_override ? *spec.gamma_override
                                 : static_cast<double>(spec.n_agents) * agreed_gamma.value.front();
  st.radius = st.gamma + spec.theta;

  if (init_primal.empty()) init_primal.assign(spec.n_agents, spec.domain.lower);
  if (init_dual.empty()) init_dual.assign(spec.n_agents, DualBlock::zeros_for(spec));
  require_same_size(init_primal.size(), spec.n_agents, "initial primal states");
  require_same_size(init_dual.size(), spec.n_agents, "initial dual states");
  for (std::size_t i = 0; i < spec.n_agents; ++i) {
    if (!spec.domain.contains(init_primal[i])) throw InvalidInput("initial primal state outside X");
    require_same_size(init_dual[i].mu.size(), spec.constraint_dim(), "initial mu");
    require_same_size(init_dual[i].lambda.size(), spec.stacked_dim(), "initial lambda");
    require_same_size(init_dual[i].w.size(), spec.stacked_dim(), "initial w");
    if (!init_dual[i].nonnegative()) throw InvalidInput("initial dual state must be componentwise nonnegative");
    st.agents.push_back(AgentState{std::move(init_primal[i]), std::move(init_dual[i]), std::nullopt});
  }
  return st;
}

inline std::vector<MixedDual> mix_duals(const std::vector<AgentState>& states, const WeightMatrix& a) {
  require_same_size(states.size(), a.size(), "dual mixing");
  std::vector<MixedDual> out;
  out.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const std::size_t len = states[i].dual.lambda.size();
    MixedDual m{states[i].dual.mu, Vec(len, 0.0), Vec(len, 0.0)};
    for (std::size_t j = 0; j < states.size(); ++j) {
      const double aij = a(i, j);
      if (aij == 0.0) continue;
      for (std::size_t k = 0; k < len; ++k) {
        m.v_lambda[k] += aij * states[j].dual.lambda[k];
        m.v_w[k] += aij * states[j].dual.w[k];
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

struct PrimalStep {
  Vec primal;
  double q_value = 0.0;
  double certified_gap = 0.0;
  bool changed = false;
};

/// Solves the local problem once at the mixed dual and keeps the previous
/// primal when it is still epsilon-optimal.
inline PrimalStep primal_step(const ProblemSpec& spec, const CyclicGraph& cycle, std::size_t agent,
                              const MixedDual& mixed, const Vec& previous_primal, double eps,
                              const SolverResolution& resolution = {}) {
  const DualBlock v = mixed.as_block();
  const LocalSolution sol = solve_local(spec, cycle, agent, v, resolution);
  if (in_approx_marginal(spec, cycle, agent, previous_primal, v, eps, sol.value)) {
    return {previous_primal, sol.value, sol.certified_gap, false};
  }
  return {sol.minimizer, sol.value, sol.certified_gap, sol.minimizer != previous_primal};
}

/// D_i: mu-part g(x); lambda-part -Delta - x at block i and x at block up(i);
/// w-part -Delta + x at block i and -x at block up(i); zero elsewhere.
inline Vec build_supgradient(const ProblemSpec& spec, const CyclicGraph& cycle, std::size_t agent,
                             std::span<const double> primal) {
  require_same_size(primal.size(), spec.dim, "supgradient primal");
  const std::size_t m = spec.constraint_dim();
  const std::size_t n = spec.dim;
  const std::size_t stacked = spec.stacked_dim();
  Vec d(m + 2 * stacked, 0.0);
  const Vec g = eval_constraint(spec, primal);
  std::copy(g.begin(), g.end(), d.begin());
  const std::size_t own = agent * n;
  const std::size_t up = cycle.up(agent) * n;
  for (std::size_t k = 0; k < n; ++k) {
    d[m + own + k] = -spec.delta - primal[k];
    d[m + up + k] = primal[k];
    d[m + stacked + own + k] = -spec.delta + primal[k];
    d[m + stacked + up + k] = -primal[k];
  }
  return d;
}

/// Euclidean projection onto {v >= 0, ||v|| <= radius}: clamp, then rescale.
inline Vec project_to_M(std::span<const double> v, double radius) {
  if (!(radius > 0.0)) throw InvalidInput("projection radius must be positive");
  Vec out(v.begin(), v.end());
  for (double& x : out) x = std::max(x, 0.0);
  const double nrm = norm(out);
  if (nrm > radius) {
    const double s = radius / nrm;
    for (double& x : out) x *= s;
  }
  return out;
}

struct DualStep {
  DualBlock dual;
  /// e_i(k) = xi_i(k+1) - v_i(k)
  Vec displacement;
};

inline DualStep dual_step(const MixedDual& mixed, std::span<const double> supgradient, double alpha, double radius) {
  if (!(alpha > 0.0)) throw InvalidInput("step size must be positive");
  const Vec v = mixed.stacked();
  const Vec next = project_to_M(axpy(v, alpha, supgradient), radius);
  return {DualBlock::from_stacked(next, mixed.mu.size(), mixed.v_lambda.size()), subtract(next, v)};
}

struct AgentRecord {
  Vec primal;
  /// xi_i(k), before the update.
  DualBlock dual_before;
  MixedDual mixed;
  Vec supgradient;
  /// xi_i(k+1)
  DualBlock dual_after;
  double q_value = 0.0;
  double certified_gap = 0.0;
  double objective = 0.0;
  double e_norm = 0.0;
  bool changed = false;
  /// Largest violation among g(x_i) <= 0 and the two band constraints owned by i.
  double feasibility_violation = 0.0;
};

struct RoundRecord {
  std::int64_t round = 0;
  double alpha = 0.0;
  std::vector<AgentRecord> agents;
  double total_objective = 0.0;
  double lambda_disagreement = 0.0;
  double w_disagreement = 0.0;
  double max_dual_change = 0.0;
};

struct InitRecord {
  std::vector<Vec> primal;
  std::vector<DualBlock> dual;
  std::vector<double> q_value;
  std::vector<double> objective;
  double total_objective = 0.0;
};

struct RunTrace {
  std::uint64_t seed = 0;
  std::string config_hash;
  Vec slater;
  Vec gamma_i;
  double gamma = 0.0;
  double radius = 0.0;
  std::int64_t slater_consensus_rounds = 0;
  std::int64_t gamma_consensus_rounds = 0;
  InitRecord init;
  std::vector<RoundRecord> rounds;
  std::vector<std::optional<std::int64_t>> settle_round;
  bool stalled = false;

  /// Primal estimates after the last executed round (initial ones for an empty run).
  std::vector<Vec> final_primal() const {
    if (rounds.empty()) return init.primal;
    std::vector<Vec> out;
    for (const auto& a : rounds.back().agents) out.push_back(a.primal);
    return out;
  }

  std::vector<DualBlock> final_dual() const {
    if (rounds.empty()) return init.dual;
    std::vector<DualBlock> out;
    for (const auto& a : rounds.back().agents) out.push_back(a.dual_after);
    return out;
  }
};

namespace detail {

inline double agent_violation(const ProblemSpec& spec, const CyclicGraph& cycle, std::size_t agent,
                              const std::vector<Vec>& x_stack) {
  double v = 0.0;
  for (double g : eval_constraint(spec, x_stack[agent])) v = std::max(v, g);
  const BandConstraint plus{agent, cycle.down(agent), +1, spec.delta};
  const BandConstraint minus{agent, cycle.down(agent), -1, spec.delta};
  v = std::max({v, plus.max_violation(x_stack), minus.max_violation(x_stack)});
  return v;
}

template <typename Fn>
void for_each_agent(std::size_t n_agents, std::size_t parallelism, Fn&& fn) {
  const std::size_t workers = std::clamp<std::size_t>(parallelism, 1, n_agents);
  if (workers == 1) {
    for (std::size_t i = 0; i < n_agents; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n_agents; i += workers) fn(i);
    });
  }
}

}  // namespace detail

/// Runs `config.rounds` rounds (or until a stall is detected) and returns the full trace.
inline RunTrace run(EngineState state, const EngineConfig& config) {
  config.step.validate();
  if (config.rounds < 0) throw InvalidInput("round budget must be >= 0");
  const ProblemSpec& spec = state.spec;
  const CyclicGraph& cycle = state.cycle;
  const std::size_t n_agents = spec.n_agents;

  RunTrace trace;
  trace.seed = config.seed;
  trace.slater = state.slater;
  trace.gamma_i = state.gamma_i;
  trace.gamma = state.gamma;
  trace.radius = state.radius;
  trace.slater_consensus_rounds = state.slater_consensus_rounds;
  trace.gamma_consensus_rounds = state.gamma_consensus_rounds;
  for (std::size_t i = 0; i < n_agents; ++i) {
    const auto& a = state.agents[i];
    trace.init.primal.push_back(a.primal);
    trace.init.dual.push_back(a.dual);
    trace.init.q_value.push_back(solve_local(spec, cycle, i, a.dual, config.solver).value);
    trace.init.objective.push_back(eval_objective(spec, i, a.primal));
    trace.init.total_objective += trace.init.objective.back();
  }

  std::int64_t quiet_rounds = 0;
  for (std::int64_t k = 0; k < config.rounds; ++k) {
    const double alpha = config.step(k);
    const auto mixed = mix_duals(state.agents, state.schedule.at(k));

    RoundRecord rec;
    rec.round = k;
    rec.alpha = alpha;
    rec.agents.resize(n_agents);

    detail::for_each_agent(n_agents, config.parallelism, [&](std::size_t i) {
      const AgentState& a = state.agents[i];
      AgentRecord& r = rec.agents[i];
      r.dual_before = a.dual;
      r.mixed = mixed[i];
      if (k >= 1) {
        auto step = primal_step(spec, cycle, i, mixed[i], a.primal, spec.epsilon, config.solver);
        r.primal = std::move(step.primal);
        r.q_value = step.q_value;
        r.certified_gap = step.certified_gap;
        r.changed = step.changed;
      } else {
        const auto sol = solve_local(spec, cycle, i, mixed[i].as_block(), config.solver);
        r.primal = a.primal;
        r.q_value = sol.value;
        r.certified_gap = sol.certified_gap;
      }
      r.supgradient = build_supgradient(spec, cycle, i, r.primal);
      auto ds = dual_step(mixed[i], r.supgradient, alpha, state.radius);
      r.dual_after = std::move(ds.dual);
      r.e_norm = norm(ds.displacement);
      r.objective = eval_objective(spec, i, r.primal);
    });

    // Sequential reductions in agent order keep traces independent of the thread count.
    std::vector<Vec> x_stack, lambdas, ws;
    bool any_changed = false;
    for (std::size_t i = 0; i < n_agents; ++i) {
      AgentRecord& r = rec.agents[i];
      AgentState& a = state.agents[i];
      x_stack.push_back(r.primal);
      lambdas.push_back(r.dual_after.lambda);
      ws.push_back(r.dual_after.w);
      rec.total_objective += r.objective;
      rec.max_dual_change = std::max(rec.max_dual_change, distance(r.dual_after.stacked(), a.dual.stacked()));
      if (r.changed) {
        a.last_settle_round = k;
        any_changed = true;
      }
      a.primal = r.primal;
      a.dual = r.dual_after;
    }
    for (std::size_t i = 0; i < n_agents; ++i)
      rec.agents[i].feasibility_violation = detail::agent_violation(spec, cycle, i, x_stack);
    rec.lambda_disagreement = disagreement(lambdas);
    rec.w_disagreement = disagreement(ws);

    quiet_rounds = (!any_changed && rec.max_dual_change < config.stall.tolerance) ? quiet_rounds + 1 : 0;
    trace.rounds.push_back(std::move(rec));
    if (config.stall.enabled && quiet_rounds >= config.stall.window && k + 1 >= config.stall.min_rounds) {
      trace.stalled = true;
      break;
    }
  }

  for (const auto& a : state.agents) trace.settle_round.push_back(a.last_settle_round);
  return trace;
}

}  // namespace dads
