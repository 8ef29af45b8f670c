#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "dads/errors.hpp"
#include "dads/harness.hpp"
#include "dads/scenario_library.hpp"

namespace {

template <typename T>
std::optional<T> if_set(const CLI::Option* opt, const T& value) {
  return opt->count() ? std::optional<T>(value) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed approximate dual subgradient runs"};
  app.require_subcommand(1);

  std::string scenario;
  std::int64_t rounds = 0;
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
  std::string out_dir;
  std::string trace_path;

  auto* run = app.add_subcommand("run", "run a scenario and write trace, summary, verdict, and plot data");
  run->add_option("scenario", scenario, "scenario file or bundled name")->required();
  auto* rounds_opt = run->add_option("--rounds", rounds, "number of rounds")->check(CLI::NonNegativeNumber);
  auto* seed_opt = run->add_option("--seed", seed, "communication seed");
  auto* par_opt = run->add_option("--parallelism", parallelism, "worker threads (default: agents, capped)")
                      ->check(CLI::PositiveNumber);
  auto* run_out = run->add_option("--out", out_dir, "output directory (default: $DADS_OUTPUT_DIR or ./dads_out)");

  auto* verify = app.add_subcommand("verify", "re-run diagnostics on a recorded trace");
  verify->add_option("scenario", scenario, "scenario file or bundled name")->required();
  verify->add_option("trace", trace_path, "trace.csv written by run")->required();
  auto* verify_out = verify->add_option("--out", out_dir, "where verify.json goes (default: the trace's directory)");

  auto* validate = app.add_subcommand("validate", "check the communication and Slater assumptions");
  validate->add_option("scenario", scenario, "scenario file or bundled name")->required();

  auto* list = app.add_subcommand("list-scenarios", "list the bundled scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? dads::kExitSuccess : dads::kExitInputError;
  }

  try {
    if (*list) {
      for (const auto& b : dads::bundled_scenarios()) {
        const auto sc = dads::parse_scenario(std::string(b.text));
        std::cout << b.name << "\t" << sc.description << '\n';
      }
      return dads::kExitSuccess;
    }
    const dads::Scenario sc = dads::load_scenario(scenario);
    if (*validate) return dads::validate_command(sc, std::cout);
    if (*verify) return dads::verify_command(sc, trace_path, if_set(verify_out, out_dir), std::cout);
    dads::RunOptions opts;
    opts.rounds = if_set(rounds_opt, rounds);
    opts.seed = if_set(seed_opt, seed);
    opts.parallelism = if_set(par_opt, parallelism);
    opts.output_dir = if_set(run_out, out_dir);
    return dads::run_command(sc, opts, std::cout);
  } catch (const dads::AssumptionViolation& e) {
    std::cerr << "assumption violated: " << e.what() << '\n';
    return dads::kExitInputError;
  } catch (const dads::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return dads::kExitInputError;
  } catch (const dads::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return dads::kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dads::kExitInputError;
  }
}
