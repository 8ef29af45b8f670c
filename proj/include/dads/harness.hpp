#pragma once

// run / verify / validate orchestration shared by the command-line tool and tests.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <thread>

#include "dads/engine.hpp"
#include "dads/report.hpp"
#include "dads/scenario.hpp"
#include "dads/scenario_library.hpp"

namespace dads {

enum ExitCode : int { kExitSuccess = 0, kExitVerdictFailure = 1, kExitInputError = 2 };

inline constexpr const char* kOutputDirEnv = "DADS_OUTPUT_DIR";

/// Explicit directory, else $DADS_OUTPUT_DIR, else ./dads_out.
inline std::filesystem::path resolve_output_dir(const std::optional<std::string>& explicit_dir) {
  if (explicit_dir && !explicit_dir->empty()) return *explicit_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "dads_out";
}

/// Worker threads used when none is requested: one per agent, capped by the hardware.
inline std::size_t default_parallelism(std::size_t n_agents) {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  return std::clamp<std::size_t>(n_agents, 1, hw);
}

struct RunOptions {
  std::optional<std::int64_t> rounds;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> parallelism;
  std::optional<std::string> output_dir;
};

struct RunOutcome {
  Scenario scenario;
  EngineState state;
  RunTrace trace;
  VerdictSet verdicts;
  std::filesystem::path output_dir;
};

/// Applies CLI overrides, initializes, and runs the engine. No files are written.
inline RunOutcome execute(Scenario sc, const RunOptions& opts) {
  if (opts.rounds) sc.engine.rounds = *opts.rounds;
  if (opts.seed) {
    sc.communication.seed = *opts.seed;
    sc.engine.seed = *opts.seed;
  }
  validate_scenario(sc);
  const WeightSchedule schedule = materialize_schedule(sc);
  const CyclicGraph cycle = make_cycle(sc.problem.n_agents);

  EngineConfig cfg = sc.engine;
  cfg.parallelism = opts.parallelism.value_or(default_parallelism(sc.problem.n_agents));

  RunOutcome out;
  out.state = initialize(sc.problem, schedule, cycle, cfg.initial_primal, cfg.initial_dual, cfg.solver);
  out.trace = run(out.state, cfg);
  out.trace.config_hash = config_hash(sc);
  out.verdicts = evaluate_verdicts(sc, out.state, out.trace.final_primal(), out.trace.final_dual());
  out.scenario = std::move(sc);
  return out;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

inline void print_verdicts(std::ostream& log, const VerdictSet& set) {
  for (const auto& v : set.items) {
    const char* status = !v.evaluated ? "SKIP" : v.passed ? "PASS" : "FAIL";
    log << "  " << status << "  " << v.name << (v.asserted ? "" : " (recorded only)") << '\n';
  }
}

}  // namespace detail

/// Writes trace.csv, summary.json, verdict.json, states.csv, and objective.csv.
inline void write_run_outputs(const RunOutcome& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto f = detail::open_output(dir / "trace.csv");
    write_trace_csv(f, r.state.spec, r.state.cycle, r.trace);
  }
  {
    auto f = detail::open_output(dir / "states.csv");
    write_states_csv(f, r.state.spec, r.trace);
  }
  {
    auto f = detail::open_output(dir / "objective.csv");
    write_objective_csv(f, r.trace);
  }
  {
    auto f = detail::open_output(dir / "summary.json");
    f << summary_json(r.scenario, r.state, r.trace, r.scenario.engine.rounds, r.verdicts).dump(2) << '\n';
  }
  {
    auto f = detail::open_output(dir / "verdict.json");
    f << r.verdicts.to_json().dump(2) << '\n';
  }
}

inline int run_command(const Scenario& sc, const RunOptions& opts, std::ostream& log) {
  RunOutcome r = execute(sc, opts);
  r.output_dir = resolve_output_dir(opts.output_dir);
  write_run_outputs(r, r.output_dir);
  log << "scenario " << r.scenario.name << ": " << r.trace.rounds.size() << " rounds"
      << (r.trace.stalled ? " (stalled)" : "") << ", objective "
      << format_double(total_objective(r.state.spec, r.trace.final_primal())) << '\n';
  detail::print_verdicts(log, r.verdicts);
  log << "outputs in " << r.output_dir.string() << '\n';
  return r.verdicts.all_asserted_passed() ? kExitSuccess : kExitVerdictFailure;
}

/// Re-runs the diagnostics on the last round of a recorded trace and writes
/// verify.json next to the trace (or into the explicit directory).
inline int verify_command(const Scenario& sc, const std::string& trace_path,
                          const std::optional<std::string>& output_dir, std::ostream& log) {
  validate_scenario(sc);
  std::ifstream in(trace_path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open trace: " + trace_path);
  const TraceState st = read_trace_final_state(in, sc.problem);

  const EngineState state = initialize(sc.problem, materialize_schedule(sc), make_cycle(sc.problem.n_agents), {}, {},
                                       sc.engine.solver);
  const VerdictSet verdicts = evaluate_verdicts(sc, state, st.primal, st.dual);

  std::filesystem::path dir = output_dir && !output_dir->empty()
                                  ? std::filesystem::path(*output_dir)
                                  : std::filesystem::path(trace_path).parent_path();
  if (dir.empty()) dir = ".";
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j = verdicts.to_json();
  j["trace"] = trace_path;
  j["round"] = st.round;
  j["limit_point"] = st.primal;
  {
    auto f = detail::open_output(dir / "verify.json");
    f << j.dump(2) << '\n';
  }
  log << "verified " << trace_path << " at round " << st.round << '\n';
  detail::print_verdicts(log, verdicts);
  return verdicts.all_asserted_passed() ? kExitSuccess : kExitVerdictFailure;
}

/// Assumption checks only; throws AssumptionViolation on failure.
inline int validate_command(const Scenario& sc, std::ostream& log) {
  validate_scenario(sc);
  const WeightSchedule s = materialize_schedule(sc);
  log << "scenario " << sc.name << ": " << s.matrices.size() << " weight matrices, period " << s.period_hint
      << "; assumptions 1, 2, 3 and the Slater condition hold\n";
  return kExitSuccess;
}

}  // namespace dads
