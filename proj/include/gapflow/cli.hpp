#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gapflow/flow.hpp"
#include "gapflow/ocpec.hpp"

namespace gapflow {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int init_failure = 1;
inline constexpr int singular_kkt = 2;
inline constexpr int check_failure = 3;
inline constexpr int config_error = 64;
}  // namespace exit_code

struct RunConfig {
  std::string problem_path;  // empty: bundled benchmark
  std::optional<Reformulation> reformulation;
  std::optional<double> gap_c, gap_a, gap_b;
  FlowParams flow;
  std::string out_trace;
  std::string out_solution;
  std::uint64_t seed = 42;
  bool allow_unstable = false;
  bool inject_gradient_fault = false;
  std::vector<long> bench_sizes{100, 500, 2000};
  std::string out_bench = "bench_steps.csv";
};

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_check_derivatives(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses `argv` and dispatches to a subcommand.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gapflow
