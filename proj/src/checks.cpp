#include "gapflow/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "gapflow/kkt.hpp"

namespace gapflow {

namespace {

using Rng = std::mt19937_64;

double rel_error(const DenseMatrix& analytic, const DenseMatrix& fd) {
  const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
  return (analytic - fd).cwiseAbs().maxCoeff() / scale;
}

SuiteResult make_suite(std::string name, double tol, bool expect_failure = false) {
  SuiteResult s;
  s.name = std::move(name);
  s.tolerance = tol;
  s.expect_failure = expect_failure;
  return s;
}

void finish(SuiteResult& s) {
  s.passed = s.expect_failure ? s.max_error > s.tolerance : s.max_error <= s.tolerance;
}

BoxSet mixed_box() {
  const double inf = std::numeric_limits<double>::infinity();
  BoxSet box;
  box.lower = Vector(3);
  box.upper = Vector(3);
  box.lower << 0.0, -1.0, -inf;
  box.upper << inf, 1.0, 2.0;
  return box;
}

bool near_kink(const BoxSet& box, Index i, double lambda, double eta, double c,
               double margin) {
  const double p = lambda - eta / c;
  return std::abs(p - box.lower[i]) < margin || std::abs(p - box.upper[i]) < margin;
}

// Draws one (lambda_i, eta_i) pair away from the projection kinks of every
// listed modulus.
void draw_pair(Rng& rng, const BoxSet& box, Index i, const std::vector<double>& moduli,
               double margin, double& lambda, double& eta) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (;;) {
    lambda = u(rng);
    eta = u(rng);
    bool ok = true;
    for (double c : moduli) ok = ok && !near_kink(box, i, lambda, eta, c, margin);
    if (ok) return;
  }
}

std::vector<double> moduli_for(GapKind kind, const GapConfig& cfg) {
  if (kind == GapKind::primal) return {cfg.c};
  return {cfg.a, cfg.b};
}

GapEval eval_gap(GapKind kind, const BoxSet& box, const GapConfig& cfg,
                 const Vector& lambda, const Vector& eta) {
  return kind == GapKind::primal ? primal_gap(box, cfg, lambda, eta)
                                 : d_gap(box, cfg, lambda, eta);
}

SuiteResult gap_gradient_suite(const std::string& name, GapKind kind,
                               const BoxSet& box, const GapConfig& cfg,
                               const CheckOptions& opt, Rng& rng) {
  SuiteResult s = make_suite(name, opt.tolerance);
  const Index n = box.size();
  const auto moduli = moduli_for(kind, cfg);
  Vector lambda(n), eta(n);
  for (int k = 0; k < opt.points; ++k) {
    for (Index i = 0; i < n; ++i) draw_pair(rng, box, i, moduli, opt.kink_margin, lambda[i], eta[i]);
    GapEval g = eval_gap(kind, box, cfg, lambda, eta);
    if (opt.inject_gradient_fault) g.grad_eta.array() += 1e-3;

    DenseMatrix analytic(1, 2 * n);
    analytic.leftCols(n) = g.grad_lambda.transpose();
    analytic.rightCols(n) = g.grad_eta.transpose();
    const DenseMatrix fd = fd_jacobian(
        [&](const Vector& w) {
          return Vector::Constant(1, eval_gap(kind, box, cfg, w.head(n), w.tail(n)).value);
        },
        (Vector(2 * n) << lambda, eta).finished(), opt.fd_step);
    s.max_error = std::max(s.max_error, rel_error(analytic, fd));
    ++s.points;
  }
  finish(s);
  return s;
}

SuiteResult gap_jacobian_suite(const std::string& name, GapKind kind,
                               const BoxSet& box, const GapConfig& cfg,
                               const CheckOptions& opt, Rng& rng) {
  SuiteResult s = make_suite(name, opt.tolerance);
  const Index n = box.size();
  const auto moduli = moduli_for(kind, cfg);
  Vector lambda(n), eta(n);
  for (int k = 0; k < opt.points; ++k) {
    for (Index i = 0; i < n; ++i) draw_pair(rng, box, i, moduli, opt.kink_margin, lambda[i], eta[i]);
    const DenseMatrix analytic = gap_gradient_gen_jacobian(box, cfg, lambda, eta, kind);
    const DenseMatrix fd = fd_jacobian(
        [&](const Vector& w) {
          const GapEval g = eval_gap(kind, box, cfg, w.head(n), w.tail(n));
          return (Vector(2 * n) << g.grad_lambda, g.grad_eta).finished();
        },
        (Vector(2 * n) << lambda, eta).finished(), opt.fd_step);
    s.max_error = std::max(s.max_error, rel_error(analytic, fd));
    ++s.points;
  }
  finish(s);
  return s;
}

// The eta-gradient written as lambda - c * omega_hat disagrees with finite
// differences whenever c != 1 and omega_hat != 0.
SuiteResult printed_eta_gradient_suite(const CheckOptions& opt, Rng& rng) {
  SuiteResult s = make_suite("primal-gap eta-gradient as lambda - c*omega_hat (c=2, must disagree)",
                             opt.tolerance, true);
  const BoxSet box = BoxSet::nonnegative(1);
  GapConfig cfg = opt.gap;
  cfg.c = 2.0;
  Vector lambda(1), eta(1);
  for (int k = 0; k < opt.points; ++k) {
    draw_pair(rng, box, 0, {cfg.c}, opt.kink_margin, lambda[0], eta[0]);
    const Vector w_hat = omega_hat(box, cfg.c, lambda, eta);
    const DenseMatrix printed = (lambda - cfg.c * w_hat).transpose();
    const DenseMatrix fd = fd_jacobian(
        [&](const Vector& e) {
          return Vector::Constant(1, primal_gap(box, cfg, lambda, e).value);
        },
        eta, opt.fd_step);
    s.max_error = std::max(s.max_error, rel_error(printed, fd));
    ++s.points;
  }
  finish(s);
  return s;
}

// Random z with every stage's (lambda, eta) away from the projection kinks.
Vector random_z(const LcsParameterizedNlp& nlp, const CheckOptions& opt, Rng& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Vector z(nlp.n_z());
  for (Index i = 0; i < z.size(); ++i) z[i] = u(rng);
  const BoxSet& box = nlp.problem().K;
  const GapKind kind =
      nlp.reformulation() == Reformulation::primal_gap ? GapKind::primal : GapKind::d_gap;
  const auto moduli = moduli_for(kind, nlp.gap_config());
  for (Index n = 0; n < nlp.stage_count(); ++n) {
    const StageLayout l = nlp.layout(n);
    for (Index i = 0; i < box.size(); ++i) {
      draw_pair(rng, box, i, moduli, opt.kink_margin, z[l.lambda + i], z[l.eta + i]);
    }
  }
  return z;
}

SuiteResult constraint_jacobian_suite(const LcsParameterizedNlp& nlp,
                                      const CheckOptions& opt, Rng& rng) {
  SuiteResult s = make_suite("constraint Jacobians (" + to_string(nlp.reformulation()) + ")",
                             opt.tolerance);
  std::uniform_real_distribution<double> us(0.0, 1.0);
  const Index n_h = nlp.n_h(), n_c = nlp.n_c();
  for (int k = 0; k < opt.points; ++k) {
    const Vector z = random_z(nlp, opt, rng);
    const double sv = us(rng);
    const ConstraintEval con = nlp.eval_constraints(z, sv, true);
    DenseMatrix analytic(n_h + n_c, nlp.n_z());
    analytic.topRows(n_h) = DenseMatrix(con.jac_h);
    analytic.bottomRows(n_c) = DenseMatrix(con.jac_c);
    const DenseMatrix fd = fd_jacobian(
        [&](const Vector& zz) {
          const ConstraintEval e = nlp.eval_constraints(zz, sv, false);
          return (Vector(n_h + n_c) << e.h, e.c).finished();
        },
        z, opt.fd_step);
    s.max_error = std::max(s.max_error, rel_error(analytic, fd));
    ++s.points;
  }
  finish(s);
  return s;
}

SuiteResult objective_gradient_suite(const LcsParameterizedNlp& nlp,
                                     const CheckOptions& opt, Rng& rng) {
  SuiteResult s = make_suite("objective gradient", opt.tolerance);
  for (int k = 0; k < opt.points; ++k) {
    const Vector z = random_z(nlp, opt, rng);
    const DenseMatrix analytic = nlp.eval_objective(z).gradient.transpose();
    const DenseMatrix fd = fd_jacobian(
        [&](const Vector& zz) { return Vector::Constant(1, nlp.eval_objective(zz).value); },
        z, opt.fd_step);
    s.max_error = std::max(s.max_error, rel_error(analytic, fd));
    ++s.points;
  }
  finish(s);
  return s;
}

KktState random_state(const LcsParameterizedNlp& nlp, const CheckOptions& opt, Rng& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  KktState y;
  y.z = random_z(nlp, opt, rng);
  y.v_c.resize(nlp.n_c());
  y.gamma_c.resize(nlp.n_c());
  y.gamma_h.resize(nlp.n_h());
  for (Index i = 0; i < nlp.n_h(); ++i) y.gamma_h[i] = u(rng);
  for (Index i = 0; i < nlp.n_c(); ++i) {
    do {
      y.v_c[i] = u(rng);
      y.gamma_c[i] = u(rng);
    } while (std::hypot(y.v_c[i], y.gamma_c[i]) < opt.kink_margin);
  }
  return y;
}

SuiteResult kkt_matrix_suite(const LcsParameterizedNlp& nlp, const CheckOptions& opt,
                             Rng& rng) {
  SuiteResult s = make_suite("KKT matrix rows (" + to_string(nlp.reformulation()) + ")",
                             opt.tolerance);
  std::uniform_real_distribution<double> us(0.0, 1.0);
  const Regularization none{0.0, 0.0, 0.0};
  const Index n_z = nlp.n_z(), n_h = nlp.n_h(), n_c = nlp.n_c();
  for (int k = 0; k < opt.points; ++k) {
    const KktState y = random_state(nlp, opt, rng);
    const double sv = us(rng);
    const DenseMatrix analytic = kkt_matrix(nlp, y, sv, none).to_dense();
    const DenseMatrix fd = fd_jacobian(
        [&](const Vector& yy) {
          return kkt_residual(nlp, KktState::unstack(yy, n_z, n_h, n_c), sv);
        },
        y.stacked(), opt.fd_step);
    s.max_error = std::max(s.max_error, rel_error(analytic, fd));
    ++s.points;
  }
  finish(s);
  return s;
}

SuiteResult sensitivity_suite(const LcsParameterizedNlp& nlp, const CheckOptions& opt,
                              Rng& rng) {
  SuiteResult s = make_suite("parameter sensitivity dT/ds (" +
                                 to_string(nlp.reformulation()) + ")",
                             opt.tolerance);
  std::uniform_real_distribution<double> us(0.1, 0.9);
  const DenseMatrix analytic = kkt_sensitivity(nlp);
  for (int k = 0; k < opt.points; ++k) {
    const KktState y = random_state(nlp, opt, rng);
    const DenseMatrix fd = fd_jacobian(
        [&](const Vector& sv) { return kkt_residual(nlp, y, sv[0]); },
        Vector::Constant(1, us(rng)), opt.fd_step);
    s.max_error = std::max(s.max_error, rel_error(analytic, fd));
    ++s.points;
  }
  finish(s);
  return s;
}

}  // namespace

std::vector<SuiteResult> run_derivative_suites(const LcsOcpecProblem& problem,
                                               const CheckOptions& opt) {
  opt.gap.validate();
  Rng rng(opt.seed);
  std::vector<SuiteResult> out;

  const BoxSet scalar = BoxSet::nonnegative(1);
  const BoxSet mixed = mixed_box();
  GapConfig c2 = opt.gap;
  c2.c = 2.0;

  out.push_back(gap_gradient_suite("primal-gap gradient, K=[0,inf)", GapKind::primal,
                                   scalar, opt.gap, opt, rng));
  out.push_back(gap_gradient_suite("primal-gap gradient, K=[0,inf), c=2", GapKind::primal,
                                   scalar, c2, opt, rng));
  out.push_back(gap_gradient_suite("primal-gap gradient, mixed box", GapKind::primal,
                                   mixed, opt.gap, opt, rng));
  out.push_back(gap_gradient_suite("D-gap gradient, K=[0,inf)", GapKind::d_gap, scalar,
                                   opt.gap, opt, rng));
  out.push_back(gap_gradient_suite("D-gap gradient, mixed box", GapKind::d_gap, mixed,
                                   opt.gap, opt, rng));
  out.push_back(printed_eta_gradient_suite(opt, rng));
  out.push_back(gap_jacobian_suite("primal-gap generalized Jacobian, mixed box",
                                   GapKind::primal, mixed, c2, opt, rng));
  out.push_back(gap_jacobian_suite("D-gap generalized Jacobian, mixed box", GapKind::d_gap,
                                   mixed, opt.gap, opt, rng));

  const auto disc = DiscretizationConfig::uniform(problem.horizon, opt.nlp_stages);
  for (Reformulation r : {Reformulation::primal_gap, Reformulation::d_gap}) {
    const auto nlp = discretize(problem, disc, r, opt.gap);
    if (r == Reformulation::primal_gap) out.push_back(objective_gradient_suite(*nlp, opt, rng));
    out.push_back(constraint_jacobian_suite(*nlp, opt, rng));
    out.push_back(kkt_matrix_suite(*nlp, opt, rng));
    out.push_back(sensitivity_suite(*nlp, opt, rng));
  }
  return out;
}

std::vector<SuiteResult> run_gap_property_suites(const CheckOptions& opt) {
  opt.gap.validate();
  const BoxSet box = BoxSet::nonnegative(1);
  const GapConfig& cfg = opt.gap;
  constexpr int kHalf = 200;  // grid [-2, 2] with spacing 0.01
  constexpr double kStep = 0.01;
  constexpr double kZeroTol = 1e-10;

  SuiteResult nonneg = make_suite("gap values nonnegative on the grid", 1e-12);
  SuiteResult zeros = make_suite("gap zero set equals the complementarity set", 0.0);
  SuiteResult stationary = make_suite("D-gap gradient vanishes on its zero set", 1e-8);
  Vector lambda(1), eta(1);
  for (int i = -kHalf; i <= kHalf; ++i) {
    for (int j = -kHalf; j <= kHalf; ++j) {
      lambda[0] = i * kStep;
      eta[0] = j * kStep;
      const bool on_set = i >= 0 && j >= 0 && (i == 0 || j == 0);
      const GapEval d = d_gap(box, cfg, lambda, eta);
      nonneg.max_error = std::max(nonneg.max_error, -d.value);
      if ((d.value <= kZeroTol) != on_set) zeros.max_error += 1.0;
      if (d.value <= kZeroTol) {
        stationary.max_error = std::max(
            {stationary.max_error, d.grad_lambda.cwiseAbs().maxCoeff(),
             d.grad_eta.cwiseAbs().maxCoeff()});
      }
      // The primal gap is only meaningful on K.
      if (i >= 0) {
        const GapEval p = primal_gap(box, cfg, lambda, eta);
        nonneg.max_error = std::max(nonneg.max_error, -p.value);
        if ((std::abs(p.value) <= kZeroTol) != on_set) zeros.max_error += 1.0;
      }
      ++nonneg.points;
      ++zeros.points;
      ++stationary.points;
    }
  }

  SuiteResult lower = make_suite("D-gap >= (b-a)/2 |omega_b - lambda|^2", 1e-12);
  Rng rng(opt.seed);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const BoxSet mixed = mixed_box();
  for (int k = 0; k < 10000; ++k) {
    const BoxSet& b = (k % 2 == 0) ? box : mixed;
    Vector l(b.size()), e(b.size());
    for (Index i = 0; i < b.size(); ++i) {
      l[i] = u(rng);
      e[i] = u(rng);
    }
    const GapEval d = d_gap(b, cfg, l, e);
    const double bound = 0.5 * (cfg.b - cfg.a) * (d.omega_hat - l).squaredNorm();
    lower.max_error = std::max(lower.max_error, bound - d.value);
    ++lower.points;
  }

  std::vector<SuiteResult> out{nonneg, zeros, stationary, lower};
  for (auto& s : out) finish(s);
  return out;
}

bool all_passed(const std::vector<SuiteResult>& suites) {
  return std::all_of(suites.begin(), suites.end(),
                     [](const SuiteResult& s) { return s.passed; });
}

}  // namespace gapflow
