#include "gapflow/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "gapflow/errors.hpp"
#include "gapflow/kkt.hpp"

namespace gapflow {

InitOptions driver_init_options(const DiscretizationConfig& disc) {
  InitOptions opts;
  opts.gamma_c_start = disc.dt;
  opts.max_iterations = std::max(200, static_cast<int>(disc.stages / 2) + 200);
  return opts;
}

void apply_interior_lambda(const LcsParameterizedNlp& nlp, Vector& z, InitOptions& opts) {
  require_same_size(nlp.n_z(), z.size(), "interior lambda z");
  const double inf = std::numeric_limits<double>::infinity();
  opts.interior_lower = Vector::Constant(nlp.n_z(), -inf);
  opts.interior_upper = Vector::Constant(nlp.n_z(), inf);
  const BoxSet& K = nlp.problem().K;
  for (Index n = 0; n < nlp.stage_count(); ++n) {
    const Index off = nlp.layout(n).lambda;
    for (Index i = 0; i < K.size(); ++i) {
      const double lo = K.lower[i], hi = K.upper[i];
      double v = 0.0;
      if (std::isfinite(lo) && std::isfinite(hi)) {
        v = 0.5 * (lo + hi);
      } else if (std::isfinite(lo)) {
        v = lo + 1.0;
      } else if (std::isfinite(hi)) {
        v = hi - 1.0;
      }
      z[off + i] = v;
      opts.interior_lower[off + i] = lo;
      opts.interior_upper[off + i] = hi;
    }
  }
}

SolveResult solve_ocpec(const LcsOcpecProblem& problem,
                        const DiscretizationConfig& disc, Reformulation reform,
                        const GapConfig& gap, const SolveOptions& options,
                        const TraceObserver& observer) {
  options.flow.validate(options.allow_unstable);
  const auto t0 = std::chrono::steady_clock::now();

  SolveResult out;
  out.nlp = discretize(problem, disc, reform, gap);
  NlpKktSystem system(*out.nlp, options.flow.reg);
  Vector z0 = Vector::Zero(out.nlp->n_z());
  InitOptions init = options.init;
  if (reform == Reformulation::primal_gap) apply_interior_lambda(*out.nlp, z0, init);
  try {
    out.init = initialize_from_guess(system, options.flow, z0, init);
  } catch (const InitFailure&) {
    if (options.init.adaptive_primal_shift) throw;
    InitOptions retry = init;
    retry.adaptive_primal_shift = true;
    out.init = initialize_from_guess(system, options.flow, z0, retry);
    out.init_fallback = true;
  }
  out.run = run_continuation(system, options.flow, out.init.y, observer);
  out.solution = out.nlp->unpack(out.run.y.head(out.nlp->n_z()));

  out.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return out;
}

}  // namespace gapflow
