#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gapflow/kkt.hpp"
#include "gapflow/numeric.hpp"

namespace gapflow {

/// How s(tau) is sampled on the grid tau_l = l * dtau.
enum class ParameterSampling {
  exact,  // closed-form solution of sdot = -eps_s (s - se)
  euler,  // explicit Euler on the same ODE
};

struct FlowParams {
  double eps_s = 10.0;
  double eps_t = 50.0;
  double s0 = 1.0;
  double se = 1e-3;
  double dtau = 1e-2;
  int l_max = 500;
  Regularization reg;
  ParameterSampling sampling = ParameterSampling::exact;
  double pivot_floor = kDefaultPivotFloor;

  /// Throws ConfigError. Unless `allow_unstable`, also rejects
  /// |1 - eps_t * dtau| >= 1.
  void validate(bool allow_unstable = false) const;
};

/// se + (s0 - se) exp(-eps_s tau).
double parameter_at(const FlowParams& params, double tau);

/// s_l on the continuation grid under the configured sampling.
double parameter_at_step(const FlowParams& params, int l);

/// |1 - eps_t dtau|: the per-step contraction of the tracking error under
/// explicit Euler. Values >= 1 are unstable.
double stability_margin(const FlowParams& params);

struct StepDiagnostics {
  double residual_norm = 0.0;
  double min_pivot = 0.0;
  double step_time_ms = 0.0;
};

struct FlowStep {
  Vector y;
  Vector y_dot;
  StepDiagnostics diagnostics;
};

/// One explicit-Euler step of the semismooth Newton flow
///   Ydot = -K^{-1} (eps_t T - eps_s S (s - se)).
/// Throws SingularKkt when K cannot be factorized.
FlowStep flow_step(const KktSystem& system, const Vector& y, double s,
                   const FlowParams& params);

struct TraceRecord {
  int l = 0;
  double tau = 0.0;
  double s = 0.0;
  double residual = 0.0;
  double scaled_residual = 0.0;
  double step_time_ms = 0.0;
  double min_pivot = 0.0;  // NaN on the final record (no factorization)
};

using ContinuationTrace = std::vector<TraceRecord>;
using TraceObserver = std::function<void(const TraceRecord&)>;

struct ContinuationResult {
  ContinuationTrace trace;
  Vector y;
  bool completed = false;
  std::string failure;  // set when the run stopped early
};

/// Runs l_max flow steps from `y0`. A singular KKT matrix or a non-finite
/// residual stops the run and returns the partial trace.
ContinuationResult run_continuation(const KktSystem& system,
                                    const FlowParams& params, const Vector& y0,
                                    const TraceObserver& observer = {});

struct InitOptions {
  double tolerance = 1e-10;  // on the scaled residual
  int max_iterations = 200;
  double armijo = 1e-4;
  int max_halvings = 50;
  /// Initial gap multipliers. The Lagrangian gradient scales with the stage
  /// time step, so fine grids converge far more reliably with a start of
  /// order dt than with 1.
  double gamma_c_start = 1.0;
  /// Adds an adaptive shift delta * I to the Hessian block of the Newton
  /// matrix: raised tenfold whenever the line search fails or cuts the step
  /// below 0.1, lowered tenfold after a full step. The root of T is
  /// unchanged; only the search direction is damped.
  bool adaptive_primal_shift = false;
  /// Optional bounds on the leading unknowns of Y (size primal_size() or
  /// empty). When set, every step is cut so that each bounded unknown moves
  /// at most `boundary_fraction` of its distance to the bound. The start
  /// must lie strictly inside.
  Vector interior_lower;
  Vector interior_upper;
  double boundary_fraction = 0.99;
};

struct InitResult {
  Vector y;
  int iterations = 0;
  double scaled_residual = 0.0;
};

/// Starting point for the initialization solve:
/// (z_guess, max(c(z_guess, s0), 1), 0, gamma_c_start).
KktState initial_guess(const ParameterizedNlp& nlp, const Vector& z_guess,
                       double s0, double gamma_c_start = 1.0);

/// Damped semismooth Newton on T(Y, s0) = 0 with backtracking on |T|^2 / 2.
/// Throws InitFailure when the tolerance is not reached.
InitResult initialize(const KktSystem& system, const FlowParams& params,
                      const Vector& y_start, const InitOptions& options = {});

InitResult initialize_from_guess(const NlpKktSystem& system, const FlowParams& params,
                                 const Vector& z_guess, const InitOptions& options = {});

}  // namespace gapflow
