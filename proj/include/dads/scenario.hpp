#pragma once

// Scenario files: one YAML document with the problem, the communication
// schedule, engine settings, and diagnostic tolerances.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "dads/diagnostics.hpp"
#include "dads/engine.hpp"
#include "dads/errors.hpp"
#include "dads/graph.hpp"
#include "dads/problem.hpp"

namespace dads {

struct CommunicationSpec {
  enum class Kind { kGossip, kMatrices, kFile };
  Kind kind = Kind::kGossip;
  std::uint64_t seed = 0;
  double alpha_min = 0.5;
  /// Connectivity period B; 0 means N-1 for gossip and 1 otherwise.
  int period = 0;
  std::vector<WeightMatrix> matrices;
  std::string path;

  bool operator==(const CommunicationSpec&) const = default;
};

struct DiagnosticsConfig {
  double slackness_tolerance = kDefaultSlacknessTolerance;
  std::size_t oracle_grid_points = 41;
  double oracle_tolerance = 1e-3;
  std::size_t bounds_grid_points = 1001;

  bool operator==(const DiagnosticsConfig&) const = default;
};

/// Values reported elsewhere for the same instance; echoed in summaries, never asserted.
struct ReferenceValues {
  std::vector<Vec> limit_point;
  std::optional<double> objective;

  bool operator==(const ReferenceValues&) const = default;
};

struct Scenario {
  std::string name;
  std::string description;
  ProblemSpec problem;
  CommunicationSpec communication;
  EngineConfig engine;
  DiagnosticsConfig diagnostics;
  ReferenceValues reference;
  /// Directory relative paths in the file resolve against.
  std::string base_dir = ".";

  bool same_content(const Scenario& o) const {
    return name == o.name && description == o.description && problem == o.problem &&
           communication == o.communication && engine == o.engine && diagnostics == o.diagnostics &&
           reference == o.reference;
  }
};

namespace detail {

inline std::string where(const YAML::Node& node) {
  const auto mark = node.Mark();
  if (mark.is_null()) return "";
  return "line " + std::to_string(mark.line + 1) + ": ";
}

template <typename T>
T field(const YAML::Node& parent, const std::string& key) {
  const YAML::Node node = parent[key];
  if (!node) throw ParseError(where(parent) + "missing field '" + key + "'");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ParseError(where(node) + "field '" + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const YAML::Node& parent, const std::string& key, T fallback) {
  const YAML::Node node = parent[key];
  if (!node || node.IsNull()) return fallback;
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ParseError(where(node) + "field '" + key + "' has the wrong type");
  }
}

inline ScalarFunction parse_function(const YAML::Node& node) {
  const auto kind = field<std::string>(node, "kind");
  try {
    if (kind == "quadratic") {
      return Quadratic{field<Vec>(node, "a"), field<Vec>(node, "center"), field_or<double>(node, "offset", 0.0)};
    }
    if (kind == "piecewise_linear") return PiecewiseLinear{field<Vec>(node, "breakpoints"), field<Vec>(node, "values")};
    if (kind == "polynomial") return Polynomial{field<Vec>(node, "coefficients")};
    if (kind == "affine") return Affine{field<Vec>(node, "row"), field_or<double>(node, "offset", 0.0)};
  } catch (const InvalidInput& e) {
    throw ParseError(where(node) + e.what());
  }
  throw ParseError(where(node) + "unknown function kind '" + kind + "'");
}

inline void emit_function(YAML::Emitter& out, const ScalarFunction& f) {
  out << YAML::BeginMap << YAML::Key << "kind" << YAML::Value << f.kind_name();
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        auto flow = [&](const char* key, const Vec& v) {
          out << YAML::Key << key << YAML::Value << YAML::Flow << v;
        };
        if constexpr (std::is_same_v<T, Quadratic>) {
          flow("a", k.a);
          flow("center", k.center);
          out << YAML::Key << "offset" << YAML::Value << k.offset;
        } else if constexpr (std::is_same_v<T, PiecewiseLinear>) {
          flow("breakpoints", k.breakpoints);
          flow("values", k.values);
        } else if constexpr (std::is_same_v<T, Polynomial>) {
          flow("coefficients", k.coefficients);
        } else {
          flow("row", k.row);
          out << YAML::Key << "offset" << YAML::Value << k.offset;
        }
      },
      f.kind());
  out << YAML::EndMap;
}

inline std::vector<std::vector<double>> matrix_rows(const WeightMatrix& m) {
  std::vector<std::vector<double>> rows(m.size(), std::vector<double>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) rows[i][j] = m(i, j);
  return rows;
}

}  // namespace detail

/// Builds the weight schedule a scenario describes, optionally with a different gossip seed.
inline WeightSchedule materialize_schedule(const Scenario& sc, std::optional<std::uint64_t> seed = std::nullopt) {
  const auto& c = sc.communication;
  const std::size_t n = sc.problem.n_agents;
  switch (c.kind) {
    case CommunicationSpec::Kind::kGossip: {
      auto s = pairwise_gossip_schedule(n, seed.value_or(c.seed), c.alpha_min);
      if (c.period > 0) s.period_hint = c.period;
      return s;
    }
    case CommunicationSpec::Kind::kMatrices: {
      WeightSchedule s;
      s.matrices = c.matrices;
      s.period_hint = c.period > 0 ? c.period : 1;
      s.alpha_min = c.alpha_min;
      return s;
    }
    case CommunicationSpec::Kind::kFile: {
      const auto path = std::filesystem::path(sc.base_dir) / c.path;
      return load_weight_schedule(path.string(), c.period > 0 ? c.period : 1, c.alpha_min);
    }
  }
  throw InvalidInput("unknown communication kind");
}

/// Assumptions 1-3 on the schedule and the Slater data; throws AssumptionViolation.
inline void validate_scenario(const Scenario& sc) {
  sc.problem.validate();
  validate_assumptions(materialize_schedule(sc), sc.problem.n_agents);
  const auto& p = sc.problem;
  if (p.slater_point) {
    if (!is_strict_slater(p, *p.slater_point)) {
      throw AssumptionViolation(Assumption::kSlater, "slater_point is not strictly feasible in X");
    }
  } else if (p.slater_proposals.empty()) {
    throw AssumptionViolation(Assumption::kSlater, "neither slater_point nor slater_proposals given");
  } else {
    for (std::size_t i = 0; i < p.slater_proposals.size(); ++i) {
      if (!is_strict_slater(p, p.slater_proposals[i])) {
        throw AssumptionViolation(Assumption::kSlater,
                                  "slater_proposals[" + std::to_string(i) + "] is not strictly feasible in X");
      }
    }
  }
  if (sc.engine.rounds < 0) throw InvalidInput("engine.rounds must be >= 0");
  sc.engine.step.validate();
}

/// Parses scenario text without running the assumption validators.
inline Scenario parse_scenario(const std::string& text, const std::string& base_dir = ".") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ParseError("scenario must be a YAML mapping");

  Scenario sc;
  sc.base_dir = base_dir;
  sc.name = detail::field_or<std::string>(root, "name", "unnamed");
  sc.description = detail::field_or<std::string>(root, "description", "");

  ProblemSpec& p = sc.problem;
  p.n_agents = detail::field<std::size_t>(root, "agents");
  p.dim = detail::field<std::size_t>(root, "dimension");
  const YAML::Node domain = root["domain"];
  if (!domain) throw ParseError("missing field 'domain'");
  p.domain = BoxSet{detail::field<Vec>(domain, "lower"), detail::field<Vec>(domain, "upper")};
  p.delta = detail::field<double>(root, "delta");
  p.epsilon = detail::field<double>(root, "epsilon");
  p.theta = detail::field<double>(root, "theta");
  if (root["gamma_override"] && !root["gamma_override"].IsNull()) p.gamma_override = detail::field<double>(root, "gamma_override");
  if (root["slater_point"] && !root["slater_point"].IsNull()) p.slater_point = detail::field<Vec>(root, "slater_point");
  p.slater_proposals = detail::field_or<std::vector<Vec>>(root, "slater_proposals", {});

  const YAML::Node objectives = root["objectives"];
  if (!objectives || !objectives.IsSequence()) throw ParseError(detail::where(root) + "'objectives' must be a list");
  for (const auto& f : objectives) p.objectives.push_back(detail::parse_function(f));
  if (const YAML::Node constraints = root["constraints"]; constraints && !constraints.IsNull()) {
    if (!constraints.IsSequence()) throw ParseError(detail::where(constraints) + "'constraints' must be a list");
    for (const auto& g : constraints) p.constraints.push_back(detail::parse_function(g));
  }

  if (const YAML::Node comm = root["communication"]) {
    auto& c = sc.communication;
    const auto kind = detail::field_or<std::string>(comm, "kind", "gossip");
    c.seed = detail::field_or<std::uint64_t>(comm, "seed", 0);
    c.alpha_min = detail::field_or<double>(comm, "alpha_min", 0.5);
    c.period = detail::field_or<int>(comm, "period", 0);
    if (kind == "gossip") {
      c.kind = CommunicationSpec::Kind::kGossip;
    } else if (kind == "matrices") {
      c.kind = CommunicationSpec::Kind::kMatrices;
      const YAML::Node mats = comm["matrices"];
      if (!mats || !mats.IsSequence()) throw ParseError(detail::where(comm) + "'matrices' must be a list");
      for (const auto& m : mats) {
        try {
          c.matrices.emplace_back(m.as<std::vector<std::vector<double>>>());
        } catch (const YAML::Exception&) {
          throw ParseError(detail::where(m) + "weight matrix must be a list of numeric rows");
        } catch (const InvalidInput& e) {
          throw ParseError(detail::where(m) + e.what());
        }
      }
    } else if (kind == "file") {
      c.kind = CommunicationSpec::Kind::kFile;
      c.path = detail::field<std::string>(comm, "path");
    } else {
      throw ParseError(detail::where(comm) + "unknown communication kind '" + kind + "'");
    }
  }

  if (const YAML::Node solver = root["solver"]) {
    auto& r = sc.engine.solver;
    r.grid_points = detail::field_or<std::size_t>(solver, "grid_points", r.grid_points);
    r.refine_iterations = detail::field_or<std::size_t>(solver, "refine_iterations", r.refine_iterations);
    r.refine_tolerance = detail::field_or<double>(solver, "refine_tolerance", r.refine_tolerance);
  }

  if (const YAML::Node engine = root["engine"]) {
    auto& e = sc.engine;
    e.rounds = detail::field_or<std::int64_t>(engine, "rounds", e.rounds);
    e.seed = detail::field_or<std::uint64_t>(engine, "seed", e.seed);
    e.parallelism = detail::field_or<std::size_t>(engine, "parallelism", e.parallelism);
    if (const YAML::Node step = engine["step_size"]) {
      const auto kind = detail::field_or<std::string>(step, "kind", "harmonic");
      if (kind == "harmonic") {
        e.step.kind = StepSizeSchedule::Kind::kHarmonic;
      } else if (kind == "power") {
        e.step.kind = StepSizeSchedule::Kind::kPower;
      } else {
        throw ParseError(detail::where(step) + "unknown step-size kind '" + kind + "'");
      }
      e.step.scale = detail::field_or<double>(step, "scale", 1.0);
      e.step.power = detail::field_or<double>(step, "power", 1.0);
    }
    e.initial_primal = detail::field_or<std::vector<Vec>>(engine, "initial_primal", {});
    if (const YAML::Node duals = engine["initial_dual"]; duals && !duals.IsNull()) {
      for (const auto& d : duals) {
        e.initial_dual.push_back(DualBlock{detail::field_or<Vec>(d, "mu", {}), detail::field<Vec>(d, "lambda"),
                                           detail::field<Vec>(d, "w")});
      }
    }
    if (const YAML::Node stall = engine["stall"]) {
      e.stall.enabled = detail::field_or<bool>(stall, "enabled", e.stall.enabled);
      e.stall.tolerance = detail::field_or<double>(stall, "tolerance", e.stall.tolerance);
      e.stall.window = detail::field_or<std::int64_t>(stall, "window", e.stall.window);
      e.stall.min_rounds = detail::field_or<std::int64_t>(stall, "min_rounds", e.stall.min_rounds);
    }
  }

  if (const YAML::Node diag = root["diagnostics"]) {
    auto& d = sc.diagnostics;
    d.slackness_tolerance = detail::field_or<double>(diag, "slackness_tolerance", d.slackness_tolerance);
    d.oracle_grid_points = detail::field_or<std::size_t>(diag, "oracle_grid_points", d.oracle_grid_points);
    d.oracle_tolerance = detail::field_or<double>(diag, "oracle_tolerance", d.oracle_tolerance);
    d.bounds_grid_points = detail::field_or<std::size_t>(diag, "bounds_grid_points", d.bounds_grid_points);
  }

  if (const YAML::Node ref = root["reference"]) {
    sc.reference.limit_point = detail::field_or<std::vector<Vec>>(ref, "limit_point", {});
    if (ref["objective"]) sc.reference.objective = detail::field<double>(ref, "objective");
  }
  return sc;
}

inline Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  auto parent = std::filesystem::path(path).parent_path();
  Scenario sc = parse_scenario(buf.str(), parent.empty() ? "." : parent.string());
  validate_scenario(sc);
  return sc;
}

/// Canonical YAML text for a scenario; parse_scenario(serialize_scenario(s)) reproduces s.
inline std::string serialize_scenario(const Scenario& sc) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  const ProblemSpec& p = sc.problem;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << sc.name;
  if (!sc.description.empty()) out << YAML::Key << "description" << YAML::Value << sc.description;
  out << YAML::Key << "agents" << YAML::Value << p.n_agents;
  out << YAML::Key << "dimension" << YAML::Value << p.dim;
  out << YAML::Key << "domain" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "lower" << YAML::Value << YAML::Flow << p.domain.lower;
  out << YAML::Key << "upper" << YAML::Value << YAML::Flow << p.domain.upper;
  out << YAML::EndMap;
  out << YAML::Key << "delta" << YAML::Value << p.delta;
  out << YAML::Key << "epsilon" << YAML::Value << p.epsilon;
  out << YAML::Key << "theta" << YAML::Value << p.theta;
  if (p.gamma_override) out << YAML::Key << "gamma_override" << YAML::Value << *p.gamma_override;
  if (p.slater_point) out << YAML::Key << "slater_point" << YAML::Value << YAML::Flow << *p.slater_point;
  if (!p.slater_proposals.empty()) {
    out << YAML::Key << "slater_proposals" << YAML::Value << YAML::Flow << p.slater_proposals;
  }
  out << YAML::Key << "objectives" << YAML::Value << YAML::BeginSeq;
  for (const auto& f : p.objectives) detail::emit_function(out, f);
  out << YAML::EndSeq;
  out << YAML::Key << "constraints" << YAML::Value << YAML::BeginSeq;
  for (const auto& g : p.constraints) detail::emit_function(out, g);
  out << YAML::EndSeq;

  const auto& c = sc.communication;
  out << YAML::Key << "communication" << YAML::Value << YAML::BeginMap;
  switch (c.kind) {
    case CommunicationSpec::Kind::kGossip:
      out << YAML::Key << "kind" << YAML::Value << "gossip";
      break;
    case CommunicationSpec::Kind::kMatrices:
      out << YAML::Key << "kind" << YAML::Value << "matrices";
      out << YAML::Key << "matrices" << YAML::Value << YAML::BeginSeq;
      for (const auto& m : c.matrices) out << YAML::Flow << detail::matrix_rows(m);
      out << YAML::EndSeq;
      break;
    case CommunicationSpec::Kind::kFile:
      out << YAML::Key << "kind" << YAML::Value << "file";
      out << YAML::Key << "path" << YAML::Value << c.path;
      break;
  }
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "alpha_min" << YAML::Value << c.alpha_min;
  out << YAML::Key << "period" << YAML::Value << c.period;
  out << YAML::EndMap;

  const auto& r = sc.engine.solver;
  out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "grid_points" << YAML::Value << r.grid_points;
  out << YAML::Key << "refine_iterations" << YAML::Value << r.refine_iterations;
  out << YAML::Key << "refine_tolerance" << YAML::Value << r.refine_tolerance;
  out << YAML::EndMap;

  const auto& e = sc.engine;
  out << YAML::Key << "engine" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "rounds" << YAML::Value << e.rounds;
  out << YAML::Key << "seed" << YAML::Value << e.seed;
  out << YAML::Key << "parallelism" << YAML::Value << e.parallelism;
  out << YAML::Key << "step_size" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << (e.step.kind == StepSizeSchedule::Kind::kHarmonic ? "harmonic" : "power");
  out << YAML::Key << "scale" << YAML::Value << e.step.scale;
  out << YAML::Key << "power" << YAML::Value << e.step.power;
  out << YAML::EndMap;
  if (!e.initial_primal.empty()) out << YAML::Key << "initial_primal" << YAML::Value << YAML::Flow << e.initial_primal;
  if (!e.initial_dual.empty()) {
    out << YAML::Key << "initial_dual" << YAML::Value << YAML::BeginSeq;
    for (const auto& d : e.initial_dual) {
      out << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "mu" << YAML::Value << d.mu;
      out << YAML::Key << "lambda" << YAML::Value << d.lambda;
      out << YAML::Key << "w" << YAML::Value << d.w;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  out << YAML::Key << "stall" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "enabled" << YAML::Value << e.stall.enabled;
  out << YAML::Key << "tolerance" << YAML::Value << e.stall.tolerance;
  out << YAML::Key << "window" << YAML::Value << e.stall.window;
  out << YAML::Key << "min_rounds" << YAML::Value << e.stall.min_rounds;
  out << YAML::EndMap;
  out << YAML::EndMap;

  const auto& d = sc.diagnostics;
  out << YAML::Key << "diagnostics" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "slackness_tolerance" << YAML::Value << d.slackness_tolerance;
  out << YAML::Key << "oracle_grid_points" << YAML::Value << d.oracle_grid_points;
  out << YAML::Key << "oracle_tolerance" << YAML::Value << d.oracle_tolerance;
  out << YAML::Key << "bounds_grid_points" << YAML::Value << d.bounds_grid_points;
  out << YAML::EndMap;

  if (!sc.reference.limit_point.empty() || sc.reference.objective) {
    out << YAML::Key << "reference" << YAML::Value << YAML::BeginMap;
    if (!sc.reference.limit_point.empty()) {
      out << YAML::Key << "limit_point" << YAML::Value << YAML::Flow << sc.reference.limit_point;
    }
    if (sc.reference.objective) out << YAML::Key << "objective" << YAML::Value << *sc.reference.objective;
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

/// 64-bit FNV-1a of the canonical scenario text, as 16 hex digits.
inline std::string config_hash(const Scenario& sc) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : serialize_scenario(sc)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace dads
