#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "dads/errors.hpp"
#include "dads/graph.hpp"
#include "dads/vector_ops.hpp"

namespace dads {

/// Lexicographic order: the first differing coordinate decides.
inline bool lex_less(const Vec& a, const Vec& b) {
  require_same_size(a.size(), b.size(), "lexicographic comparison");
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

inline const Vec& lex_max(const Vec& a, const Vec& b) { return lex_less(a, b) ? b : a; }

/// One synchronous round: each agent keeps the lexicographic max over itself
/// and its in-neighbours under A.
inline std::vector<Vec> max_consensus_step(const std::vector<Vec>& states, const WeightMatrix& a) {
  require_same_size(states.size(), a.size(), "max-consensus states");
  std::vector<Vec> next = states;
  for (std::size_t i = 0; i < states.size(); ++i)
    for (std::size_t j : a.in_neighbors(i)) next[i] = lex_max(next[i], states[j]);
  return next;
}

struct MaxConsensusResult {
  Vec value;
  std::int64_t rounds_used = 0;
};

inline bool all_agree(const std::vector<Vec>& states) {
  return std::all_of(states.begin(), states.end(), [&](const Vec& v) { return v == states.front(); });
}

/// Iterates max_consensus_step on the schedule until every agent holds the
/// same vector. Throws ConvergenceFailure after max_rounds without agreement.
inline MaxConsensusResult max_consensus(std::vector<Vec> states, const WeightSchedule& schedule,
                                        std::int64_t max_rounds) {
  if (states.empty()) throw InvalidInput("max-consensus needs at least one agent");
  for (const auto& s : states) require_same_size(s.size(), states.front().size(), "max-consensus initial value");
  require_same_size(states.size(), schedule.n_agents(), "max-consensus agent count");
  for (std::int64_t k = 0;; ++k) {
    if (all_agree(states)) return {states.front(), k};
    if (k >= max_rounds) {
      throw ConvergenceFailure("max-consensus did not agree within " + std::to_string(max_rounds) +
                               " rounds; the schedule is not periodically strongly connected");
    }
    states = max_consensus_step(states, schedule.at(k));
  }
}

/// x^i(k+1) = sum_j a^i_j x^j(k) + eta^i(k)
inline std::vector<Vec> dynamic_average_step(const std::vector<Vec>& states, const std::vector<Vec>& inputs,
                                             const WeightMatrix& a) {
  require_same_size(states.size(), a.size(), "average-consensus states");
  require_same_size(inputs.size(), a.size(), "average-consensus inputs");
  const std::size_t dim = states.empty() ? 0 : states.front().size();
  std::vector<Vec> next(states.size(), Vec(dim, 0.0));
  for (std::size_t i = 0; i < states.size(); ++i) {
    require_same_size(states[i].size(), dim, "average-consensus state");
    require_same_size(inputs[i].size(), dim, "average-consensus input");
    for (std::size_t j = 0; j < states.size(); ++j) {
      const double aij = a(i, j);
      if (aij == 0.0) continue;
      for (std::size_t k = 0; k < dim; ++k) next[i][k] += aij * states[j][k];
    }
    for (std::size_t k = 0; k < dim; ++k) next[i][k] += inputs[i][k];
  }
  return next;
}

/// max_{i,j} ||x^i - x^j||
inline double disagreement(const std::vector<Vec>& states) {
  double worst = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i)
    for (std::size_t j = i + 1; j < states.size(); ++j) worst = std::max(worst, distance(states[i], states[j]));
  return worst;
}

}  // namespace dads
