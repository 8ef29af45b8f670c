#pragma once

// Communication topologies: weight matrices A(k), switching schedules, the
// assumption validators, and the fixed directed cycle that couples the
// consensus-band constraints.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/strong_components.hpp>

#include "dads/errors.hpp"

namespace dads {

inline constexpr double kStochasticTolerance = 1e-12;

/// Square matrix of mixing weights. Entry (i, j) is the weight agent i puts
/// on in-neighbour j.
class WeightMatrix {
 public:
  WeightMatrix() = default;

  explicit WeightMatrix(const std::vector<std::vector<double>>& rows) : n_(rows.size()) {
    if (n_ == 0) throw InvalidInput("weight matrix must have at least one row");
    data_.reserve(n_ * n_);
    for (const auto& row : rows) {
      if (row.size() != n_) {
        throw InvalidInput("weight matrix is not square: row of length " + std::to_string(row.size()) +
                           " in a " + std::to_string(n_) + "-agent matrix");
      }
      for (double v : row) {
        if (!std::isfinite(v)) throw InvalidInput("weight matrix entry is not finite");
        data_.push_back(v);
      }
    }
  }

  static WeightMatrix identity(std::size_t n) {
    std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) rows[i][i] = 1.0;
    return WeightMatrix(rows);
  }

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  WeightMatrix transposed() const {
    std::vector<std::vector<double>> rows(n_, std::vector<double>(n_));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) rows[j][i] = (*this)(i, j);
    return WeightMatrix(rows);
  }

  /// Directed edges (j -> i) carrying non-zero weight, self loops excluded.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        if (i != j && (*this)(i, j) > 0.0) out.emplace_back(j, i);
    return out;
  }

  std::vector<std::size_t> in_neighbors(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n_; ++j)
      if (j != i && (*this)(i, j) > 0.0) out.push_back(j);
    return out;
  }

  bool operator==(const WeightMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Periodic switching topology: round k uses matrices[k mod size].
struct WeightSchedule {
  std::vector<WeightMatrix> matrices;
  int period_hint = 1;
  double alpha_min = 0.5;

  const WeightMatrix& at(std::int64_t k) const {
    if (matrices.empty()) throw InvalidInput("empty weight schedule");
    if (k < 0) throw InvalidInput("negative round index");
    return matrices[static_cast<std::size_t>(k) % matrices.size()];
  }

  std::size_t n_agents() const { return matrices.empty() ? 0 : matrices.front().size(); }
};

/// Assumption 1: diagonal >= alpha_min; off-diagonal entries are 0 or in [alpha_min, 1].
inline bool validate_nondegeneracy(const WeightMatrix& a, double alpha_min) {
  if (!(alpha_min > 0.0 && alpha_min <= 1.0)) throw InvalidInput("alpha_min must lie in (0, 1]");
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double v = a(i, j);
      if (v < 0.0) return false;
      if (i == j) {
        if (v < alpha_min) return false;
      } else if (v != 0.0 && (v < alpha_min || v > 1.0)) {
        return false;
      }
    }
  }
  return true;
}

/// Assumption 2: doubly stochastic within kStochasticTolerance.
inline bool validate_balanced(const WeightMatrix& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    double col = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row += a(i, j);
      col += a(j, i);
    }
    if (std::abs(row - 1.0) > kStochasticTolerance || std::abs(col - 1.0) > kStochasticTolerance) return false;
  }
  return true;
}

inline bool is_strongly_connected(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  if (n <= 1) return true;
  using Graph = boost::adjacency_list<boost::vecS, boost::vecS, boost::directedS>;
  Graph g(n);
  for (const auto& [from, to] : edges) boost::add_edge(from, to, g);
  std::vector<int> component(n);
  return boost::strong_components(g, component.data()) == 1;
}

/// Assumption 3: every window of B consecutive rounds starting in [0, horizon - B]
/// unions to a strongly connected digraph.
inline bool validate_periodic_connectivity(const WeightSchedule& schedule, int period, std::int64_t horizon) {
  if (period < 1) throw InvalidInput("connectivity period B must be >= 1");
  if (horizon < period) throw InvalidInput("connectivity horizon must be >= B");
  const std::size_t n = schedule.n_agents();
  for (std::int64_t k0 = 0; k0 + period <= horizon; ++k0) {
    std::vector<std::pair<std::size_t, std::size_t>> window;
    for (int k = 0; k < period; ++k) {
      auto e = schedule.at(k0 + k).edges();
      window.insert(window.end(), e.begin(), e.end());
    }
    if (!is_strongly_connected(n, window)) return false;
  }
  return true;
}

/// Seeded pairwise gossip: a random spanning tree whose N-1 edges are activated
/// one per round (weights 1/2 on the pair) in a fixed shuffled order, so every
/// window of N-1 rounds covers the whole tree.
inline WeightSchedule pairwise_gossip_schedule(std::size_t n_agents, std::uint64_t seed, double alpha_min = 0.5) {
  if (n_agents < 2) throw InvalidInput("gossip schedule needs at least 2 agents");
  if (!(alpha_min > 0.0 && alpha_min <= 0.5)) throw InvalidInput("gossip weights are 1/2; alpha_min must lie in (0, 0.5]");

  std::mt19937_64 rng(seed);
  // Random labelled tree from a Pruefer sequence.
  std::vector<std::pair<std::size_t, std::size_t>> tree;
  if (n_agents == 2) {
    tree.emplace_back(0, 1);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n_agents - 1);
    std::vector<std::size_t> code(n_agents - 2);
    for (auto& c : code) c = pick(rng);
    std::vector<std::size_t> degree(n_agents, 1);
    for (auto c : code) ++degree[c];
    for (auto c : code) {
      for (std::size_t leaf = 0; leaf < n_agents; ++leaf) {
        if (degree[leaf] == 1) {
          tree.emplace_back(std::min(leaf, c), std::max(leaf, c));
          --degree[leaf];
          --degree[c];
          break;
        }
      }
    }
    std::size_t u = n_agents, v = n_agents;
    for (std::size_t i = 0; i < n_agents; ++i) {
      if (degree[i] == 1) (u == n_agents ? u : v) = i;
    }
    tree.emplace_back(u, v);
  }
  std::shuffle(tree.begin(), tree.end(), rng);

  WeightSchedule schedule;
  schedule.period_hint = static_cast<int>(n_agents - 1);
  schedule.alpha_min = alpha_min;
  for (const auto& [a, b] : tree) {
    std::vector<std::vector<double>> rows(n_agents, std::vector<double>(n_agents, 0.0));
    for (std::size_t i = 0; i < n_agents; ++i) rows[i][i] = 1.0;
    rows[a][a] = rows[b][b] = rows[a][b] = rows[b][a] = 0.5;
    schedule.matrices.emplace_back(rows);
  }
  return schedule;
}

inline WeightSchedule static_schedule(WeightMatrix a, int period_hint, double alpha_min) {
  WeightSchedule s;
  s.matrices.push_back(std::move(a));
  s.period_hint = period_hint;
  s.alpha_min = alpha_min;
  return s;
}

/// Parses blocks of "N" followed by N rows of N numbers; blocks are separated by
/// blank lines and cycled in order.
inline std::vector<WeightMatrix> parse_weight_matrices(std::istream& in) {
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    lines.push_back(line);
  }
  auto blank = [](const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; };

  std::vector<WeightMatrix> out;
  std::size_t i = 0;
  while (i < lines.size()) {
    if (blank(lines[i])) {
      ++i;
      continue;
    }
    std::istringstream header(lines[i]);
    long long n = 0;
    if (!(header >> n) || n <= 0) throw ParseError("line " + std::to_string(i + 1) + ": expected agent count");
    std::vector<std::vector<double>> rows;
    for (long long r = 0; r < n; ++r) {
      ++i;
      if (i >= lines.size() || blank(lines[i])) {
        throw ParseError("line " + std::to_string(i + 1) + ": expected " + std::to_string(n) + " matrix rows");
      }
      std::istringstream row_in(lines[i]);
      std::vector<double> row;
      for (double v; row_in >> v;) row.push_back(v);
      if (!row_in.eof()) throw ParseError("line " + std::to_string(i + 1) + ": non-numeric entry");
      if (row.size() != static_cast<std::size_t>(n)) {
        throw ParseError("line " + std::to_string(i + 1) + ": expected " + std::to_string(n) + " entries");
      }
      rows.push_back(std::move(row));
    }
    out.emplace_back(rows);
    ++i;
  }
  if (out.empty()) throw ParseError("no weight matrices found");
  for (const auto& m : out) {
    if (m.size() != out.front().size()) throw ParseError("weight matrices disagree on the agent count");
  }
  return out;
}

inline WeightSchedule load_weight_schedule(const std::string& path, int period_hint, double alpha_min) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open weight schedule file: " + path);
  WeightSchedule s;
  s.matrices = parse_weight_matrices(in);
  s.period_hint = period_hint;
  s.alpha_min = alpha_min;
  return s;
}

/// Directed N-cycle: agent i sends to down(i) = i+1 and hears from up(i) = i-1 (mod N).
class CyclicGraph {
 public:
  explicit CyclicGraph(std::size_t n_agents) : n_(n_agents) {
    if (n_agents < 2) throw InvalidInput("the constraint cycle needs at least 2 agents");
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t down(std::size_t i) const noexcept { return (i + 1) % n_; }
  std::size_t up(std::size_t i) const noexcept { return (i + n_ - 1) % n_; }

 private:
  std::size_t n_;
};

inline CyclicGraph make_cycle(std::size_t n_agents) { return CyclicGraph(n_agents); }

}  // namespace dads
