#pragma once

// Trace, summary, verdict, and plot-data files for a run.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dads/bounds.hpp"
#include "dads/diagnostics.hpp"
#include "dads/engine.hpp"
#include "dads/scenario.hpp"

namespace dads {

/// Shortest text that is stable across platforms: 17 significant digits.
inline std::string format_double(double v) {
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Column names of trace.csv for a problem.
inline std::vector<std::string> trace_columns(const ProblemSpec& spec) {
  std::vector<std::string> cols{"round", "agent", "alpha"};
  for (std::size_t k = 0; k < spec.dim; ++k) cols.push_back("x" + std::to_string(k + 1));
  for (const char* c : {"dual_norm", "q_value", "objective", "e_norm", "feasibility_violation", "lambda_disagreement",
                        "w_disagreement", "changed"}) {
    cols.emplace_back(c);
  }
  for (std::size_t k = 0; k < spec.constraint_dim(); ++k) cols.push_back("mu" + std::to_string(k + 1));
  for (std::size_t k = 0; k < spec.stacked_dim(); ++k) cols.push_back("lambda" + std::to_string(k + 1));
  for (std::size_t k = 0; k < spec.stacked_dim(); ++k) cols.push_back("w" + std::to_string(k + 1));
  return cols;
}

namespace detail {

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
  out << '\n';
}

inline void append_all(std::vector<std::string>& row, const Vec& v) {
  for (double x : v) row.push_back(format_double(x));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(const std::string& text, std::size_t line, const std::string& column) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw InvalidInput("trace line " + std::to_string(line) + ": column '" + column + "' is not a number");
  }
  return v;
}

}  // namespace detail

/// Writes one row per agent for the initial state (round -1) and one per agent per round.
inline void write_trace_csv(std::ostream& out, const ProblemSpec& spec, const CyclicGraph& cycle,
                            const RunTrace& trace) {
  detail::write_row(out, trace_columns(spec));
  const std::size_t n_agents = spec.n_agents;

  std::vector<Vec> lambdas, ws;
  for (const auto& d : trace.init.dual) {
    lambdas.push_back(d.lambda);
    ws.push_back(d.w);
  }
  const double lam_dis = disagreement(lambdas);
  const double w_dis = disagreement(ws);
  for (std::size_t i = 0; i < n_agents; ++i) {
    const DualBlock& d = trace.init.dual[i];
    std::vector<std::string> row{"-1", std::to_string(i + 1), "0"};
    detail::append_all(row, trace.init.primal[i]);
    row.push_back(format_double(d.norm()));
    row.push_back(format_double(trace.init.q_value[i]));
    row.push_back(format_double(trace.init.objective[i]));
    row.push_back("0");
    row.push_back(format_double(detail::agent_violation(spec, cycle, i, trace.init.primal)));
    row.push_back(format_double(lam_dis));
    row.push_back(format_double(w_dis));
    row.push_back("0");
    detail::append_all(row, d.mu);
    detail::append_all(row, d.lambda);
    detail::append_all(row, d.w);
    detail::write_row(out, row);
  }

  for (const RoundRecord& rec : trace.rounds) {
    for (std::size_t i = 0; i < n_agents; ++i) {
      const AgentRecord& r = rec.agents[i];
      std::vector<std::string> row{std::to_string(rec.round), std::to_string(i + 1), format_double(rec.alpha)};
      detail::append_all(row, r.primal);
      row.push_back(format_double(r.dual_after.norm()));
      row.push_back(format_double(r.q_value));
      row.push_back(format_double(r.objective));
      row.push_back(format_double(r.e_norm));
      row.push_back(format_double(r.feasibility_violation));
      row.push_back(format_double(rec.lambda_disagreement));
      row.push_back(format_double(rec.w_disagreement));
      row.push_back(r.changed ? "1" : "0");
      detail::append_all(row, r.dual_after.mu);
      detail::append_all(row, r.dual_after.lambda);
      detail::append_all(row, r.dual_after.w);
      detail::write_row(out, row);
    }
  }
}

/// The last recorded round of a trace: x_i and xi_i for every agent.
struct TraceState {
  std::int64_t round = -1;
  std::vector<Vec> primal;
  std::vector<DualBlock> dual;
  std::size_t data_rows = 0;
};

/// Reads a trace written by write_trace_csv. A header that does not match the
/// problem, malformed rows, or a trace without data rows raise InvalidInput.
inline TraceState read_trace_final_state(std::istream& in, const ProblemSpec& spec) {
  const auto expected = trace_columns(spec);
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw InvalidInput("trace is empty");
  const auto header = detail::split_csv_line(line);
  if (header != expected) {
    throw InvalidInput("trace schema mismatch: expected " + std::to_string(expected.size()) +
                       " columns starting with 'round,agent,alpha' for this scenario");
  }

  const std::size_t n = spec.dim;
  const std::size_t m = spec.constraint_dim();
  const std::size_t s = spec.stacked_dim();
  const std::size_t dual_start = 3 + n + 8;

  TraceState st;
  st.primal.assign(spec.n_agents, Vec{});
  st.dual.assign(spec.n_agents, DualBlock{});
  std::vector<bool> seen(spec.n_agents, false);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != expected.size()) {
      throw InvalidInput("trace line " + std::to_string(line_no) + ": expected " + std::to_string(expected.size()) +
                         " fields, found " + std::to_string(cells.size()));
    }
    Vec v(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) v[c] = detail::parse_number(cells[c], line_no, expected[c]);
    const auto round = static_cast<std::int64_t>(v[0]);
    const auto agent = static_cast<std::int64_t>(v[1]);
    if (agent < 1 || agent > static_cast<std::int64_t>(spec.n_agents)) {
      throw InvalidInput("trace line " + std::to_string(line_no) + ": agent index out of range");
    }
    if (round < st.round) throw InvalidInput("trace line " + std::to_string(line_no) + ": rounds go backwards");
    if (round > st.round) {
      st.round = round;
      seen.assign(spec.n_agents, false);
    }
    const auto i = static_cast<std::size_t>(agent - 1);
    seen[i] = true;
    st.primal[i].assign(v.begin() + 3, v.begin() + 3 + static_cast<std::ptrdiff_t>(n));
    auto at = v.begin() + static_cast<std::ptrdiff_t>(dual_start);
    st.dual[i].mu.assign(at, at + static_cast<std::ptrdiff_t>(m));
    st.dual[i].lambda.assign(at + static_cast<std::ptrdiff_t>(m), at + static_cast<std::ptrdiff_t>(m + s));
    st.dual[i].w.assign(at + static_cast<std::ptrdiff_t>(m + s), at + static_cast<std::ptrdiff_t>(m + 2 * s));
    ++st.data_rows;
  }
  if (st.data_rows == 0) throw InvalidInput("trace has a header but no data rows");
  for (std::size_t i = 0; i < spec.n_agents; ++i) {
    if (!seen[i]) {
      throw InvalidInput("trace round " + std::to_string(st.round) + " has no row for agent " + std::to_string(i + 1));
    }
  }
  return st;
}

/// Per-round agent states, one column per agent coordinate.
inline void write_states_csv(std::ostream& out, const ProblemSpec& spec, const RunTrace& trace) {
  std::vector<std::string> header{"round"};
  for (std::size_t i = 0; i < spec.n_agents; ++i) {
    for (std::size_t k = 0; k < spec.dim; ++k) {
      header.push_back("agent" + std::to_string(i + 1) + (spec.dim > 1 ? "_x" + std::to_string(k + 1) : ""));
    }
  }
  detail::write_row(out, header);
  auto emit = [&](std::int64_t round, const std::vector<Vec>& xs) {
    std::vector<std::string> row{std::to_string(round)};
    for (const auto& x : xs) detail::append_all(row, x);
    detail::write_row(out, row);
  };
  if (trace.rounds.empty()) {
    emit(0, trace.init.primal);
    return;
  }
  for (const auto& rec : trace.rounds) {
    std::vector<Vec> xs;
    for (const auto& a : rec.agents) xs.push_back(a.primal);
    emit(rec.round, xs);
  }
}

/// Per-round global objective sum_i f_i(x_i(k)).
inline void write_objective_csv(std::ostream& out, const RunTrace& trace) {
  out << "round,objective\n";
  if (trace.rounds.empty()) {
    out << "0," << format_double(trace.init.total_objective) << '\n';
    return;
  }
  for (const auto& rec : trace.rounds) out << rec.round << ',' << format_double(rec.total_objective) << '\n';
}

struct Verdict {
  std::string name;
  /// Asserted verdicts decide the exit code; the rest are informational.
  bool asserted = true;
  bool evaluated = true;
  bool passed = false;
  nlohmann::ordered_json detail;
};

struct VerdictSet {
  std::vector<Verdict> items;

  bool all_asserted_passed() const {
    for (const auto& v : items)
      if (v.asserted && v.evaluated && !v.passed) return false;
    return true;
  }

  const Verdict* find(const std::string& name) const {
    for (const auto& v : items)
      if (v.name == name) return &v;
    return nullptr;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json out;
    out["all_asserted_passed"] = all_asserted_passed();
    auto& list = out["verdicts"] = nlohmann::ordered_json::array();
    for (const auto& v : items) {
      nlohmann::ordered_json j;
      j["name"] = v.name;
      j["asserted"] = v.asserted;
      j["evaluated"] = v.evaluated;
      j["passed"] = v.passed;
      j["detail"] = v.detail;
      list.push_back(std::move(j));
    }
    return out;
  }
};

/// Largest grid the brute-force relaxed optimum is attempted on.
inline constexpr double kOracleGridBudget = 5e7;

/// Diagnostics on a limit point: feasibility, suboptimality against the
/// brute-force relaxed optimum, complementary slackness, and the dual bound.
inline VerdictSet evaluate_verdicts(const Scenario& sc, const EngineState& state, const std::vector<Vec>& x_stack,
                                    const std::vector<DualBlock>& duals) {
  const ProblemSpec& spec = state.spec;
  const CyclicGraph& cycle = state.cycle;
  VerdictSet set;

  const FeasibilityReport feas = feasibility_report(spec, cycle, x_stack);
  {
    Verdict v{"feasibility", true, true, feas.feasible, {}};
    v.detail["tolerance"] = kFeasibilityTolerance;
    v.detail["max_constraint_violation"] = feas.max_constraint_violation;
    v.detail["max_band_violation"] = feas.max_band_violation;
    v.detail["max_box_violation"] = feas.max_box_violation;
    set.items.push_back(std::move(v));
  }

  {
    Verdict v{"suboptimality", true, true, false, {}};
    const std::size_t points = sc.diagnostics.oracle_grid_points;
    const double cells = std::pow(static_cast<double>(points), static_cast<double>(spec.dim * spec.n_agents));
    v.detail["objective"] = total_objective(spec, x_stack);
    if (spec.n_agents * spec.dim > 6 || cells > kOracleGridBudget) {
      v.evaluated = false;
      v.detail["skipped"] = "instance too large for the brute-force oracle";
    } else {
      const PrimalOptimum opt = brute_force_primal_optimum(spec, cycle, points);
      // The grid optimum overestimates p*; widen the lower end by how far f can drop within one grid cell.
      double slack = sc.diagnostics.oracle_tolerance;
      const double cell = detail::grid_spacing(spec.domain, points);
      for (const auto& f : spec.objectives) slack += f.lipschitz_bound(spec.domain) * cell;
      v.detail["p_star_grid"] = opt.value;
      v.detail["oracle_grid_points"] = points;
      v.detail["raw_interval"] = {opt.value - static_cast<double>(spec.n_agents) * spec.epsilon,
                                    opt.value + static_cast<double>(spec.n_agents) * spec.epsilon};
      if (!feas.feasible) {
        v.detail["reason"] = "limit point is infeasible";
      } else {
        const SuboptimalityVerdict s =
            suboptimality_verdict(spec, cycle, x_stack, opt.value, sc.diagnostics.oracle_tolerance);
        const double lower = opt.value - slack;
        v.passed = s.objective >= lower && s.objective <= s.upper;
        v.detail["interval"] = {lower, s.upper};
      }
    }
    set.items.push_back(std::move(v));
  }

  const GlobalDual avg = consensus_dual(duals);
  {
    const SlacknessReport cs =
        complementary_slackness_report(spec, cycle, x_stack, avg, sc.diagnostics.slackness_tolerance);
    Verdict v{"complementary_slackness", true, true, cs.passes, {}};
    v.detail["tolerance"] = cs.tolerance;
    v.detail["max_abs_residual"] = cs.max_abs;
    set.items.push_back(std::move(v));
  }

  {
    DerivedBounds b;
    b.gamma = state.gamma;
    const DualBoundVerdict db = dual_bound_check(b, avg);
    Verdict v{"dual_bound", false, true, db.passes, {}};
    v.detail["dual_norm"] = db.norm;
    v.detail["gamma"] = db.gamma;
    v.detail["radius"] = state.radius;
    set.items.push_back(std::move(v));
  }
  return set;
}

inline nlohmann::ordered_json vec_json(const Vec& v) { return nlohmann::ordered_json(v); }

inline nlohmann::ordered_json summary_json(const Scenario& sc, const EngineState& state, const RunTrace& trace,
                                           std::int64_t rounds_requested, const VerdictSet& verdicts) {
  const ProblemSpec& spec = state.spec;
  const auto x = trace.final_primal();
  const auto duals = trace.final_dual();
  nlohmann::ordered_json j;
  j["scenario"] = sc.name;
  j["seed"] = trace.seed;
  j["config_hash"] = trace.config_hash;
  j["rounds_requested"] = rounds_requested;
  j["rounds_executed"] = trace.rounds.size();
  j["stalled"] = trace.stalled;
  j["slater_point"] = vec_json(trace.slater);
  j["slater_consensus_rounds"] = trace.slater_consensus_rounds;
  j["gamma_i"] = vec_json(trace.gamma_i);
  j["gamma"] = trace.gamma;
  j["gamma_consensus_rounds"] = trace.gamma_consensus_rounds;
  j["dual_radius"] = trace.radius;
  j["limit_point"] = x;
  j["objective"] = total_objective(spec, x);
  auto& settle = j["settle_round"] = nlohmann::ordered_json::array();
  for (const auto& t : trace.settle_round) settle.push_back(t ? nlohmann::ordered_json(*t) : nlohmann::ordered_json());

  double max_dual_norm = 0.0;
  bool nonnegative = true;
  for (const auto& d : trace.init.dual) max_dual_norm = std::max(max_dual_norm, d.norm());
  for (const auto& rec : trace.rounds) {
    for (const auto& a : rec.agents) {
      max_dual_norm = std::max(max_dual_norm, a.dual_after.norm());
      nonnegative = nonnegative && a.dual_after.nonnegative();
    }
  }
  auto& res = j["residuals"];
  res["feasibility"] = feasibility_report(spec, state.cycle, x).worst();
  res["complementary_slackness"] =
      complementary_slackness_report(spec, state.cycle, x, consensus_dual(duals), sc.diagnostics.slackness_tolerance)
          .max_abs;
  res["lambda_disagreement"] = trace.rounds.empty() ? 0.0 : trace.rounds.back().lambda_disagreement;
  res["w_disagreement"] = trace.rounds.empty() ? 0.0 : trace.rounds.back().w_disagreement;
  res["max_dual_norm"] = max_dual_norm;
  res["duals_nonnegative"] = nonnegative;
  double max_gap = 0.0;
  for (const auto& r : trace.rounds)
    for (const auto& a : r.agents) max_gap = std::max(max_gap, a.certified_gap);
  res["max_solver_gap"] = max_gap;
  res["solver_gap_limit"] = spec.epsilon / 10.0;

  if (!sc.reference.limit_point.empty() || sc.reference.objective) {
    auto& ref = j["reference"];
    if (!sc.reference.limit_point.empty()) {
      ref["limit_point"] = sc.reference.limit_point;
      if (sc.reference.limit_point.size() == x.size()) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (x[i].size() == sc.reference.limit_point[i].size()) d2 += squared_norm(subtract(x[i], sc.reference.limit_point[i]));
        }
        ref["distance"] = std::sqrt(d2);
      }
    }
    if (sc.reference.objective) ref["objective"] = *sc.reference.objective;
  }
  j["all_asserted_verdicts_passed"] = verdicts.all_asserted_passed();
  return j;
}

}  // namespace dads
