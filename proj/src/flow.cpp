#include "gapflow/flow.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "gapflow/errors.hpp"

namespace gapflow {

void FlowParams::validate(bool allow_unstable) const {
  if (!(eps_s > 0.0)) throw ConfigError("eps_s must be positive");
  if (!(eps_t > 0.0)) throw ConfigError("eps_t must be positive");
  if (!(se >= 0.0)) throw ConfigError("se must be nonnegative");
  if (!(s0 > se)) throw ConfigError("s0 must exceed se");
  if (!(dtau > 0.0)) throw ConfigError("dtau must be positive");
  if (l_max < 0) throw ConfigError("l_max must be nonnegative");
  if (!(pivot_floor > 0.0)) throw ConfigError("pivot floor must be positive");
  reg.validate();
  if (!allow_unstable && !(stability_margin(*this) < 1.0)) {
    throw ConfigError("|1 - eps_t * dtau| = " + std::to_string(stability_margin(*this)) +
                      " violates the explicit-Euler stability bound");
  }
}

double parameter_at(const FlowParams& params, double tau) {
  return params.se + (params.s0 - params.se) * std::exp(-params.eps_s * tau);
}

double parameter_at_step(const FlowParams& params, int l) {
  if (params.sampling == ParameterSampling::exact) {
    return parameter_at(params, l * params.dtau);
  }
  double s = params.s0;
  for (int i = 0; i < l; ++i) s -= params.dtau * params.eps_s * (s - params.se);
  return s;
}

double stability_margin(const FlowParams& params) {
  return std::abs(1.0 - params.eps_t * params.dtau);
}

namespace {

using Clock = std::chrono::steady_clock;

constexpr int kMaxShiftAttempts = 12;
constexpr double kMinShift = 1e-5;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

LuFactorization factorize_kkt(const SparseSquareMatrix& k, double floor) {
  try {
    return lu_factorize(k, floor);
  } catch (const SingularMatrix& e) {
    throw SingularKkt(std::string("singular KKT matrix: ") + e.what(), e.pivot(),
                      e.column());
  }
}

}  // namespace

FlowStep flow_step(const KktSystem& system, const Vector& y, double s,
                   const FlowParams& params) {
  require_same_size(system.size(), y.size(), "flow_step Y");
  const auto start = Clock::now();
  const Vector t = system.residual(y, s);
  const LuFactorization lu = factorize_kkt(system.jacobian(y, s), params.pivot_floor);
  const Vector rhs =
      -(params.eps_t * t - params.eps_s * (s - params.se) * system.sensitivity());

  FlowStep out;
  out.y_dot = lu.solve(rhs);
  out.y = y + params.dtau * out.y_dot;
  out.diagnostics.residual_norm = t.norm();
  out.diagnostics.min_pivot = lu.min_pivot();
  out.diagnostics.step_time_ms = elapsed_ms(start);
  return out;
}

ContinuationResult run_continuation(const KktSystem& system,
                                    const FlowParams& params, const Vector& y0,
                                    const TraceObserver& observer) {
  require_same_size(system.size(), y0.size(), "run_continuation Y0");
  ContinuationResult result;
  result.trace.reserve(static_cast<std::size_t>(params.l_max) + 1);
  result.y = y0;
  const double scale = system.residual_scale();

  auto emit = [&](const TraceRecord& rec) {
    result.trace.push_back(rec);
    if (observer) observer(rec);
  };

  double s = params.s0;
  for (int l = 0; l < params.l_max; ++l) {
    TraceRecord rec;
    rec.l = l;
    rec.tau = l * params.dtau;
    rec.s = s;
    FlowStep step;
    try {
      step = flow_step(system, result.y, s, params);
    } catch (const SingularKkt& e) {
      result.failure = e.what();
      return result;
    }
    rec.residual = step.diagnostics.residual_norm;
    rec.scaled_residual = rec.residual / scale;
    rec.step_time_ms = step.diagnostics.step_time_ms;
    rec.min_pivot = step.diagnostics.min_pivot;
    emit(rec);
    if (!std::isfinite(rec.residual) || !step.y.allFinite()) {
      result.failure = "non-finite KKT residual at step " + std::to_string(l);
      return result;
    }
    result.y = std::move(step.y);
    s = params.sampling == ParameterSampling::exact
            ? parameter_at(params, (l + 1) * params.dtau)
            : s - params.dtau * params.eps_s * (s - params.se);
  }

  TraceRecord last;
  last.l = params.l_max;
  last.tau = params.l_max * params.dtau;
  last.s = s;
  last.residual = system.residual(result.y, s).norm();
  last.scaled_residual = last.residual / scale;
  last.min_pivot = std::numeric_limits<double>::quiet_NaN();
  emit(last);
  if (!std::isfinite(last.residual)) {
    result.failure = "non-finite KKT residual at step " + std::to_string(params.l_max);
    return result;
  }
  result.completed = true;
  return result;
}

KktState initial_guess(const ParameterizedNlp& nlp, const Vector& z_guess,
                       double s0, double gamma_c_start) {
  require_same_size(nlp.n_z(), z_guess.size(), "initial_guess z");
  const ConstraintEval con = nlp.eval_constraints(z_guess, s0, false);
  KktState y;
  y.z = z_guess;
  y.v_c = con.c.cwiseMax(1.0);
  y.gamma_h = Vector::Zero(nlp.n_h());
  y.gamma_c = Vector::Constant(nlp.n_c(), gamma_c_start);
  return y;
}

namespace {

double max_interior_step(const InitOptions& opts, const Vector& y, const Vector& dir) {
  double amax = 1.0;
  const double f = opts.boundary_fraction;
  for (Index i = 0; i < opts.interior_lower.size(); ++i) {
    const double lo = opts.interior_lower[i];
    const double hi = opts.interior_upper[i];
    if (dir[i] < 0.0 && std::isfinite(lo)) amax = std::min(amax, -f * (y[i] - lo) / dir[i]);
    if (dir[i] > 0.0 && std::isfinite(hi)) amax = std::min(amax, f * (hi - y[i]) / dir[i]);
  }
  return amax;
}

}  // namespace

InitResult initialize(const KktSystem& system, const FlowParams& params,
                      const Vector& y_start, const InitOptions& options) {
  require_same_size(system.size(), y_start.size(), "initialize Y");
  const bool interior = options.interior_lower.size() > 0 || options.interior_upper.size() > 0;
  if (interior) {
    require_same_size(system.primal_size(), options.interior_lower.size(), "interior lower");
    require_same_size(system.primal_size(), options.interior_upper.size(), "interior upper");
    if (!(options.boundary_fraction > 0.0 && options.boundary_fraction < 1.0)) {
      throw ConfigError("boundary_fraction must lie in (0, 1)");
    }
    for (Index i = 0; i < system.primal_size(); ++i) {
      if (!(y_start[i] > options.interior_lower[i] && y_start[i] < options.interior_upper[i])) {
        throw ConfigError("initialization start is not strictly inside its bounds");
      }
    }
  }
  const double scale = system.residual_scale();
  const double s = params.s0;

  InitResult out;
  out.y = y_start;
  Vector t = system.residual(out.y, s);
  double merit = 0.5 * t.squaredNorm();
  double shift = 0.0;

  for (int it = 0;; ++it) {
    out.iterations = it;
    out.scaled_residual = t.norm() / scale;
    if (!std::isfinite(out.scaled_residual)) {
      throw InitFailure("initialization produced a non-finite residual", it,
                        out.scaled_residual);
    }
    if (out.scaled_residual <= options.tolerance) return out;
    if (it == options.max_iterations) break;

    const SparseSquareMatrix jac = system.jacobian(out.y, s);
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxShiftAttempts && !accepted; ++attempt) {
      LuFactorization lu;
      try {
        lu = lu_factorize(shift > 0.0 ? jac.with_diagonal_shift(system.primal_size(), shift)
                                      : jac,
                          params.pivot_floor);
      } catch (const SingularMatrix& e) {
        throw InitFailure(std::string("initialization hit a singular KKT matrix: ") +
                              e.what(),
                          it, out.scaled_residual);
      }
      const Vector dir = lu.solve(-t);

      const double alpha0 = interior ? max_interior_step(options, out.y, dir) : 1.0;
      double alpha = alpha0;
      for (int h = 0; h <= options.max_halvings; ++h, alpha *= 0.5) {
        Vector trial = out.y + alpha * dir;
        Vector t_trial = system.residual(trial, s);
        const double m_trial = 0.5 * t_trial.squaredNorm();
        if (std::isfinite(m_trial) &&
            m_trial <= (1.0 - 2.0 * options.armijo * alpha) * merit) {
          out.y = std::move(trial);
          t = std::move(t_trial);
          merit = m_trial;
          accepted = true;
          break;
        }
      }
      if (!options.adaptive_primal_shift) break;
      if (accepted && alpha == alpha0) {
        shift = shift > kMinShift ? 0.1 * shift : 0.0;
      } else if (!accepted || alpha < 0.1) {
        shift = std::max(10.0 * shift, kMinShift);
      }
    }
    if (!accepted) {
      throw InitFailure("initialization line search failed", it + 1,
                        out.scaled_residual);
    }
  }
  throw InitFailure("initialization did not converge in " +
                        std::to_string(options.max_iterations) + " iterations",
                    options.max_iterations, out.scaled_residual);
}

InitResult initialize_from_guess(const NlpKktSystem& system, const FlowParams& params,
                                 const Vector& z_guess, const InitOptions& options) {
  const KktState y0 =
      initial_guess(system.nlp(), z_guess, params.s0, options.gamma_c_start);
  return initialize(static_cast<const KktSystem&>(system), params, y0.stacked(),
                    options);
}

}  // namespace gapflow
