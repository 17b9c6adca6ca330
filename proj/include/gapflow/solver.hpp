#pragma once

#include <memory>

#include "gapflow/flow.hpp"
#include "gapflow/ocpec.hpp"

namespace gapflow {

struct SolveOptions {
  FlowParams flow;
  InitOptions init;
  bool allow_unstable = false;
};

/// Initialization options used by the command-line driver: gap multipliers
/// start at the stage time step, and the iteration budget grows with N.
InitOptions driver_init_options(const DiscretizationConfig& disc);

/// Moves every lambda of `z` to an interior point of K (midpoint of a finite
/// box, one unit inside a half-line, 0 when free) and fills the interior
/// bounds of `opts` so initialization keeps lambda strictly inside K.
void apply_interior_lambda(const LcsParameterizedNlp& nlp, Vector& z, InitOptions& opts);

struct SolveResult {
  std::unique_ptr<LcsParameterizedNlp> nlp;
  InitResult init;
  bool init_fallback = false;  // plain Newton failed, shifted retry succeeded
  ContinuationResult run;
  Trajectory solution;  // from the last iterate, also after an early stop
  double wall_ms = 0.0;
};

/// Discretize, initialize at s0, then run the continuation. The start is
/// z = 0; for the primal gap lambda starts inside K and stays there during
/// initialization. If that fails it is retried once with the adaptive primal
/// shift.
/// Throws ConfigError, InitFailure; a singular KKT matrix mid-run is
/// reported through `run.failure` instead.
SolveResult solve_ocpec(const LcsOcpecProblem& problem,
                        const DiscretizationConfig& disc, Reformulation reform,
                        const GapConfig& gap, const SolveOptions& options,
                        const TraceObserver& observer = {});

}  // namespace gapflow
