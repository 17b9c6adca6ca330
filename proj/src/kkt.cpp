#include "gapflow/kkt.hpp"

#include <cmath>

#include "gapflow/errors.hpp"

namespace gapflow {

Vector KktState::stacked() const {
  Vector y(size());
  y << z, v_c, gamma_h, gamma_c;
  return y;
}

KktState KktState::unstack(const Vector& y, Index n_z, Index n_h, Index n_c) {
  require_same_size(n_z + 2 * n_c + n_h, y.size(), "KktState::unstack");
  KktState s;
  s.z = y.segment(0, n_z);
  s.v_c = y.segment(n_z, n_c);
  s.gamma_h = y.segment(n_z + n_c, n_h);
  s.gamma_c = y.segment(n_z + n_c + n_h, n_c);
  return s;
}

KktState KktState::unstack(const Vector& y, const ParameterizedNlp& nlp) {
  return unstack(y, nlp.n_z(), nlp.n_h(), nlp.n_c());
}

void Regularization::validate() const {
  if (!(hessian > 0.0) || !(equality > 0.0) || !(complementarity > 0.0)) {
    throw ConfigError("regularization parameters must be positive");
  }
}

double fb(double a, double b, double mu) {
  const double r = mu == 0.0 ? std::hypot(a, b) : std::sqrt(a * a + b * b + 2.0 * mu);
  return r - a - b;
}

FbPartials fb_gen_jacobian(double a, double b, double mu) {
  const double r = mu == 0.0 ? std::hypot(a, b) : std::sqrt(a * a + b * b + 2.0 * mu);
  if (r == 0.0) {
    const double d = 1.0 / std::sqrt(2.0) - 1.0;
    return {d, d};
  }
  return {a / r - 1.0, b / r - 1.0};
}

namespace {

void check_state(const ParameterizedNlp& nlp, const KktState& y) {
  require_same_size(nlp.n_z(), y.z.size(), "KktState z");
  require_same_size(nlp.n_c(), y.v_c.size(), "KktState v_c");
  require_same_size(nlp.n_h(), y.gamma_h.size(), "KktState gamma_h");
  require_same_size(nlp.n_c(), y.gamma_c.size(), "KktState gamma_c");
}

}  // namespace

Vector kkt_residual(const ParameterizedNlp& nlp, const KktState& y, double s,
                    double smoothing) {
  check_state(nlp, y);
  const Index n_z = nlp.n_z(), n_h = nlp.n_h(), n_c = nlp.n_c();
  const ObjectiveEval obj = nlp.eval_objective(y.z);
  const ConstraintEval con = nlp.eval_constraints(y.z, s, true);

  Vector t(n_z + n_h + 2 * n_c);
  t.segment(0, n_z) = obj.gradient + con.jac_h.transpose() * y.gamma_h -
                      con.jac_c.transpose() * y.gamma_c;
  t.segment(n_z, n_h) = con.h;
  t.segment(n_z + n_h, n_c) = con.c - y.v_c;
  for (Index i = 0; i < n_c; ++i) {
    t[n_z + n_h + n_c + i] = fb(y.v_c[i], y.gamma_c[i], smoothing);
  }
  return t;
}

SparseSquareMatrix kkt_matrix(const ParameterizedNlp& nlp, const KktState& y,
                              double s, const Regularization& reg,
                              double smoothing) {
  check_state(nlp, y);
  const Index n_z = nlp.n_z(), n_h = nlp.n_h(), n_c = nlp.n_c();
  const Index n = n_z + n_h + 2 * n_c;

  // Row blocks: (grad L, h, c - v, Psi); column blocks: (z, v, gamma_h, gamma_c).
  const Index row_h = n_z, row_c = n_z + n_h, row_psi = n_z + n_h + n_c;
  const Index col_v = n_z, col_gh = n_z + n_c, col_gc = n_z + n_c + n_h;

  const ConstraintEval con = nlp.eval_constraints(y.z, s, true);
  std::vector<Triplet> t = nlp.lagrangian_hessian(y.z, y.gamma_h, y.gamma_c);
  t.reserve(t.size() + static_cast<std::size_t>(2 * con.jac_h.nonZeros() +
                                                2 * con.jac_c.nonZeros() + n + 2 * n_c));
  for (Index i = 0; i < n_z; ++i) t.emplace_back(i, i, reg.hessian);

  for (Index j = 0; j < con.jac_h.outerSize(); ++j) {
    for (CscMatrix::InnerIterator it(con.jac_h, j); it; ++it) {
      t.emplace_back(it.col(), col_gh + it.row(), it.value());
      t.emplace_back(row_h + it.row(), it.col(), it.value());
    }
  }
  for (Index i = 0; i < n_h; ++i) t.emplace_back(row_h + i, col_gh + i, -reg.equality);

  for (Index j = 0; j < con.jac_c.outerSize(); ++j) {
    for (CscMatrix::InnerIterator it(con.jac_c, j); it; ++it) {
      t.emplace_back(it.col(), col_gc + it.row(), -it.value());
      t.emplace_back(row_c + it.row(), it.col(), it.value());
    }
  }
  for (Index i = 0; i < n_c; ++i) {
    t.emplace_back(row_c + i, col_v + i, -1.0);
    const FbPartials d = fb_gen_jacobian(y.v_c[i], y.gamma_c[i], smoothing);
    t.emplace_back(row_psi + i, col_v + i, d.da - reg.complementarity);
    t.emplace_back(row_psi + i, col_gc + i, d.db - reg.complementarity);
  }
  return SparseSquareMatrix(n, t);
}

Vector kkt_sensitivity(const ParameterizedNlp& nlp) {
  const Index n_z = nlp.n_z(), n_h = nlp.n_h(), n_c = nlp.n_c();
  Vector out = Vector::Zero(n_z + n_h + 2 * n_c);
  // grad_z c does not depend on s, so only the c - v block carries dc/ds.
  out.segment(n_z + n_h, n_c) = nlp.constraint_s_gradient();
  return out;
}

NlpKktSystem::NlpKktSystem(const ParameterizedNlp& nlp, Regularization reg)
    : nlp_(nlp), reg_(reg), sensitivity_(kkt_sensitivity(nlp)) {
  reg_.validate();
}

Index NlpKktSystem::size() const { return nlp_.n_z() + nlp_.n_h() + 2 * nlp_.n_c(); }

double NlpKktSystem::residual_scale() const {
  return static_cast<double>(nlp_.stage_count());
}

Vector NlpKktSystem::residual(const Vector& y, double s) const {
  return kkt_residual(nlp_, KktState::unstack(y, nlp_), s);
}

SparseSquareMatrix NlpKktSystem::jacobian(const Vector& y, double s) const {
  return kkt_matrix(nlp_, KktState::unstack(y, nlp_), s, reg_);
}

}  // namespace gapflow
