// Runs the four-agent nonconvex problem through the library API and prints
// every agent's estimate as it settles.

#include <cstdio>

#include "dads/diagnostics.hpp"
#include "dads/engine.hpp"
#include "dads/problem.hpp"

int main() {
  const dads::ProblemSpec spec = dads::nonconvex_four_agent_problem();
  const dads::WeightSchedule schedule = dads::pairwise_gossip_schedule(spec.n_agents, 0);
  const dads::CyclicGraph cycle = dads::make_cycle(spec.n_agents);

  const dads::EngineState state = dads::initialize(spec, schedule, cycle, {}, {});
  dads::EngineConfig config;
  config.rounds = 150;
  const dads::RunTrace trace = dads::run(state, config);

  std::printf("gamma = %.4f, dual radius = %.4f\n", trace.gamma, trace.radius);
  for (const auto& rec : trace.rounds) {
    if (rec.round % 25 != 0 && rec.round + 1 != static_cast<std::int64_t>(trace.rounds.size())) continue;
    std::printf("round %4lld  x =", static_cast<long long>(rec.round));
    for (const auto& a : rec.agents) std::printf(" %8.4f", a.primal[0]);
    std::printf("  objective %.4f\n", rec.total_objective);
  }

  const auto x = trace.final_primal();
  const auto feas = dads::feasibility_report(spec, cycle, x);
  const auto cs = dads::complementary_slackness_report(spec, cycle, x, dads::consensus_dual(trace.final_dual()));
  std::printf("feasible: %s (worst residual %.3g)\n", feas.feasible ? "yes" : "no", feas.worst());
  std::printf("complementary slackness residual: %.3g\n", cs.max_abs);
  return feas.feasible ? 0 : 1;
}
