#include "gapflow/ocpec.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gapflow/errors.hpp"
#include "gapflow/parallel.hpp"

namespace gapflow {

namespace {

void require_shape(const DenseMatrix& m, Index rows, Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionMismatch(std::string(name) + ": expected " +
                            std::to_string(rows) + "x" + std::to_string(cols) +
                            ", got " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
  }
}

void require_psd(const DenseMatrix& m, const char* name) {
  if (m.size() == 0) return;
  if ((m - m.transpose()).norm() > 1e-12 * std::max(1.0, m.norm())) {
    throw ConfigError(std::string(name) + " must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(m);
  if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, m.norm())) {
    throw ConfigError(std::string(name) + " must be positive semidefinite");
  }
}

}  // namespace

void LcsOcpecProblem::validate() const {
  const Index n_x = nx(), n_u = nu(), n_l = nlambda();
  require_shape(A, n_x, n_x, "A");
  require_shape(B, n_x, n_u, "B");
  require_shape(E, n_x, n_l, "E");
  require_shape(C, n_l, n_x, "C");
  require_shape(D, n_l, n_u, "D");
  require_shape(G, n_l, n_l, "G");
  require_shape(Q, n_x, n_x, "Q");
  require_shape(R, n_u, n_u, "R");
  require_shape(S_lambda, n_l, n_l, "S_lambda");
  require_same_size(n_x, x0.size(), "x0");
  require_same_size(n_l, K.size(), "K");
  K.validate();
  require_psd(Q, "Q");
  require_psd(R, "R");
  require_psd(S_lambda, "S_lambda");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("horizon must be positive and finite");
  }
  if (!A.allFinite() || !B.allFinite() || !E.allFinite() || !C.allFinite() ||
      !D.allFinite() || !G.allFinite() || !x0.allFinite()) {
    throw ConfigError("problem data must be finite");
  }
}

LcsOcpecProblem LcsOcpecProblem::vieira_benchmark() {
  LcsOcpecProblem p;
  p.A.resize(2, 2);
  p.A << 5, -6, 3, 9;
  p.B.resize(2, 1);
  p.B << 0, -4;
  p.E.resize(2, 1);
  p.E << 4, 5;
  p.C.resize(1, 2);
  p.C << -1, 5;
  p.D = DenseMatrix::Constant(1, 1, 6.0);
  p.G = DenseMatrix::Constant(1, 1, 1.0);
  p.Q = DenseMatrix::Identity(2, 2);
  p.R = DenseMatrix::Identity(1, 1);
  p.S_lambda = DenseMatrix::Identity(1, 1);
  p.x0.resize(2);
  p.x0 << -0.5, -1.0;
  p.horizon = 1.0;
  p.K = BoxSet::nonnegative(1);
  return p;
}

DiscretizationConfig DiscretizationConfig::uniform(double horizon, Index stages) {
  if (stages < 1) throw ConfigError("stage count must be at least 1");
  return {stages, horizon / static_cast<double>(stages)};
}

void DiscretizationConfig::validate(double horizon) const {
  if (stages < 1) throw ConfigError("stage count must be at least 1");
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  const double total = dt * static_cast<double>(stages);
  if (std::abs(total - horizon) > 1e-9 * std::max(1.0, horizon)) {
    throw ConfigError("N * dt = " + std::to_string(total) +
                      " does not match the horizon " + std::to_string(horizon));
  }
}

std::string to_string(Reformulation r) {
  return r == Reformulation::primal_gap ? "primal-gap" : "d-gap";
}

Reformulation parse_reformulation(const std::string& text) {
  if (text == "primal-gap") return Reformulation::primal_gap;
  if (text == "d-gap") return Reformulation::d_gap;
  throw ConfigError("unknown reformulation '" + text +
                    "' (expected primal-gap or d-gap)");
}

LcsParameterizedNlp::LcsParameterizedNlp(LcsOcpecProblem problem,
                                         DiscretizationConfig disc,
                                         Reformulation reform, GapConfig gap)
    : problem_(std::move(problem)), disc_(disc), reform_(reform), gap_(gap) {
  problem_.validate();
  disc_.validate(problem_.horizon);
  gap_.validate();

  const Index n_x = problem_.nx(), n_u = problem_.nu(), n_l = problem_.nlambda();
  if (reform_ == Reformulation::primal_gap) {
    for (Index i = 0; i < n_l; ++i) {
      if (std::isfinite(problem_.K.lower[i])) {
        set_rows_.push_back({i, 1.0, problem_.K.lower[i]});
      }
      if (std::isfinite(problem_.K.upper[i])) {
        set_rows_.push_back({i, -1.0, problem_.K.upper[i]});
      }
    }
  }
  width_ = n_x + n_u + 2 * n_l;
  h_per_stage_ = n_x + n_l;
  c_per_stage_ = static_cast<Index>(set_rows_.size()) + 1;
  n_z_ = disc_.stages * width_;
  n_h_ = disc_.stages * h_per_stage_;
  n_c_ = disc_.stages * c_per_stage_;
  build_constant_parts();
}

Index LcsParameterizedNlp::set_rows_per_stage() const noexcept {
  return static_cast<Index>(set_rows_.size());
}

StageLayout LcsParameterizedNlp::layout(Index stage) const {
  const Index n_x = problem_.nx(), n_u = problem_.nu(), n_l = problem_.nlambda();
  const Index z0 = stage * width_;
  const Index h0 = stage * h_per_stage_;
  const Index c0 = stage * c_per_stage_;
  return {z0,     z0 + n_x,  z0 + n_x + n_u, z0 + n_x + n_u + n_l,
          h0,     h0 + n_x,  c0,             c0 + set_rows_per_stage()};
}

bool LcsParameterizedNlp::is_gap_row(Index row) const {
  return row >= 0 && row < n_c_ && row % c_per_stage_ == c_per_stage_ - 1;
}

void LcsParameterizedNlp::build_constant_parts() {
  const auto& p = problem_;
  const Index n_x = p.nx(), n_l = p.nlambda();
  const double dt = disc_.dt;

  std::vector<Triplet> jh;
  auto add_block = [&jh](Index r0, Index c0, const DenseMatrix& blk, double scale) {
    for (Index j = 0; j < blk.cols(); ++j) {
      for (Index i = 0; i < blk.rows(); ++i) {
        if (blk(i, j) != 0.0) jh.emplace_back(r0 + i, c0 + j, scale * blk(i, j));
      }
    }
  };
  const DenseMatrix a_minus_i = dt * p.A - DenseMatrix::Identity(n_x, n_x);
  for (Index k = 0; k < disc_.stages; ++k) {
    const StageLayout s = layout(k);
    // x_{k-1} + dt (A x_k + B u_k + E lambda_k) - x_k
    add_block(s.h_dynamics, s.x, a_minus_i, 1.0);
    add_block(s.h_dynamics, s.u, p.B, dt);
    add_block(s.h_dynamics, s.lambda, p.E, dt);
    if (k > 0) {
      const StageLayout prev = layout(k - 1);
      for (Index i = 0; i < n_x; ++i) jh.emplace_back(s.h_dynamics + i, prev.x + i, 1.0);
    }
    // C x_k + D u_k + G lambda_k - eta_k
    add_block(s.h_vi, s.x, p.C, 1.0);
    add_block(s.h_vi, s.u, p.D, 1.0);
    add_block(s.h_vi, s.lambda, p.G, 1.0);
    for (Index i = 0; i < n_l; ++i) jh.emplace_back(s.h_vi + i, s.eta + i, -1.0);
  }
  jac_h_.resize(n_h_, n_z_);
  jac_h_.setFromTriplets(jh.begin(), jh.end());
  jac_h_.makeCompressed();

  objective_hessian_.clear();
  auto add_hess = [this, dt](Index off, const DenseMatrix& w) {
    for (Index j = 0; j < w.cols(); ++j) {
      for (Index i = 0; i < w.rows(); ++i) {
        if (w(i, j) != 0.0) objective_hessian_.emplace_back(off + i, off + j, 2.0 * dt * w(i, j));
      }
    }
  };
  for (Index k = 0; k < disc_.stages; ++k) {
    const StageLayout s = layout(k);
    add_hess(s.x, p.Q);
    add_hess(s.u, p.R);
    add_hess(s.lambda, p.S_lambda);
  }
}

ObjectiveEval LcsParameterizedNlp::eval_objective(const Vector& z) const {
  require_same_size(n_z_, z.size(), "eval_objective z");
  const auto& p = problem_;
  const Index n_x = p.nx(), n_u = p.nu(), n_l = p.nlambda();
  const double dt = disc_.dt;
  ObjectiveEval out;
  out.gradient = Vector::Zero(n_z_);
  for (Index k = 0; k < disc_.stages; ++k) {
    const StageLayout s = layout(k);
    const auto x = z.segment(s.x, n_x);
    const auto u = z.segment(s.u, n_u);
    const auto l = z.segment(s.lambda, n_l);
    const Vector qx = p.Q * x;
    const Vector ru = p.R * u;
    const Vector sl = p.S_lambda * l;
    out.value += dt * (x.dot(qx) + u.dot(ru) + l.dot(sl));
    out.gradient.segment(s.x, n_x) = 2.0 * dt * qx;
    out.gradient.segment(s.u, n_u) = 2.0 * dt * ru;
    out.gradient.segment(s.lambda, n_l) = 2.0 * dt * sl;
  }
  return out;
}

GapEval LcsParameterizedNlp::stage_gap(const Vector& z, Index stage) const {
  require_same_size(n_z_, z.size(), "stage_gap z");
  const StageLayout s = layout(stage);
  const Index n_l = problem_.nlambda();
  GapEval g;
  if (reform_ == Reformulation::primal_gap) {
    primal_gap_into(problem_.K, gap_.c, z.segment(s.lambda, n_l),
                    z.segment(s.eta, n_l), g);
  } else {
    d_gap_into(problem_.K, gap_, z.segment(s.lambda, n_l), z.segment(s.eta, n_l), g);
  }
  return g;
}

ConstraintEval LcsParameterizedNlp::eval_constraints(const Vector& z, double s,
                                                     bool with_jacobians) const {
  require_same_size(n_z_, z.size(), "eval_constraints z");
  const auto& p = problem_;
  const Index n_x = p.nx(), n_u = p.nu(), n_l = p.nlambda();
  const double dt = disc_.dt;
  ConstraintEval out;
  out.h.resize(n_h_);
  out.c.resize(n_c_);

  std::vector<GapEval> gaps(static_cast<std::size_t>(disc_.stages));
  parallel_for_stages(disc_.stages, [&](Index begin, Index end) {
    for (Index k = begin; k < end; ++k) {
      const StageLayout st = layout(k);
      const auto x = z.segment(st.x, n_x);
      const auto u = z.segment(st.u, n_u);
      const auto l = z.segment(st.lambda, n_l);
      const auto e = z.segment(st.eta, n_l);
      const Vector prev = k == 0 ? p.x0 : Vector(z.segment(layout(k - 1).x, n_x));
      out.h.segment(st.h_dynamics, n_x) = prev + dt * (p.A * x + p.B * u + p.E * l) - x;
      out.h.segment(st.h_vi, n_l) = p.C * x + p.D * u + p.G * l - e;

      for (std::size_t r = 0; r < set_rows_.size(); ++r) {
        const SetRow& row = set_rows_[r];
        out.c[st.c_set + static_cast<Index>(r)] = row.sign * (l[row.coordinate] - row.bound);
      }
      GapEval& g = gaps[static_cast<std::size_t>(k)];
      if (reform_ == Reformulation::primal_gap) {
        primal_gap_into(p.K, gap_.c, l, e, g);
      } else {
        d_gap_into(p.K, gap_, l, e, g);
      }
      out.c[st.c_gap] = s - g.value;
    }
  });

  if (!with_jacobians) return out;

  out.jac_h = jac_h_;
  std::vector<Triplet> jc;
  jc.reserve(static_cast<std::size_t>(disc_.stages * (set_rows_.size() + 2 * n_l)));
  for (Index k = 0; k < disc_.stages; ++k) {
    const StageLayout st = layout(k);
    for (std::size_t r = 0; r < set_rows_.size(); ++r) {
      const SetRow& row = set_rows_[r];
      jc.emplace_back(st.c_set + static_cast<Index>(r), st.lambda + row.coordinate, row.sign);
    }
    const GapEval& g = gaps[static_cast<std::size_t>(k)];
    for (Index i = 0; i < n_l; ++i) jc.emplace_back(st.c_gap, st.lambda + i, -g.grad_lambda[i]);
    for (Index i = 0; i < n_l; ++i) jc.emplace_back(st.c_gap, st.eta + i, -g.grad_eta[i]);
  }
  out.jac_c.resize(n_c_, n_z_);
  out.jac_c.setFromTriplets(jc.begin(), jc.end());
  out.jac_c.makeCompressed();
  return out;
}

Vector LcsParameterizedNlp::constraint_s_gradient() const {
  Vector g = Vector::Zero(n_c_);
  for (Index k = 0; k < disc_.stages; ++k) g[layout(k).c_gap] = 1.0;
  return g;
}

std::vector<Triplet> LcsParameterizedNlp::lagrangian_hessian(
    const Vector& z, const Vector& gamma_h, const Vector& gamma_c) const {
  require_same_size(n_z_, z.size(), "lagrangian_hessian z");
  require_same_size(n_h_, gamma_h.size(), "lagrangian_hessian gamma_h");
  require_same_size(n_c_, gamma_c.size(), "lagrangian_hessian gamma_c");
  const Index n_l = problem_.nlambda();
  const GapKind kind =
      reform_ == Reformulation::primal_gap ? GapKind::primal : GapKind::d_gap;

  std::vector<Triplet> out = objective_hessian_;
  out.reserve(out.size() + static_cast<std::size_t>(disc_.stages * 4 * n_l * n_l));
  DenseMatrix block(2 * n_l, 2 * n_l);
  for (Index k = 0; k < disc_.stages; ++k) {
    const StageLayout st = layout(k);
    // h and the g(lambda) rows are affine; only the gap row curves.
    // c = s - phi, so -gamma * d2c = +gamma * d(grad phi).
    const double weight = gamma_c[st.c_gap];
    gap_gradient_gen_jacobian_into(problem_.K, gap_, z.segment(st.lambda, n_l),
                                   z.segment(st.eta, n_l), kind, block);
    // lambda and eta are adjacent in z.
    for (Index j = 0; j < 2 * n_l; ++j) {
      for (Index i = 0; i < 2 * n_l; ++i) {
        out.emplace_back(st.lambda + i, st.lambda + j, weight * block(i, j));
      }
    }
  }
  return out;
}

Trajectory LcsParameterizedNlp::unpack(const Vector& z) const {
  require_same_size(n_z_, z.size(), "unpack z");
  const Index n_x = problem_.nx(), n_u = problem_.nu(), n_l = problem_.nlambda();
  const Index n = disc_.stages;
  Trajectory t;
  t.time.resize(n);
  t.x.resize(n, n_x);
  t.u.resize(n, n_u);
  t.lambda.resize(n, n_l);
  t.eta.resize(n, n_l);
  for (Index k = 0; k < n; ++k) {
    const StageLayout s = layout(k);
    t.time[k] = static_cast<double>(k + 1) * disc_.dt;
    t.x.row(k) = z.segment(s.x, n_x).transpose();
    t.u.row(k) = z.segment(s.u, n_u).transpose();
    t.lambda.row(k) = z.segment(s.lambda, n_l).transpose();
    t.eta.row(k) = z.segment(s.eta, n_l).transpose();
  }
  return t;
}

Vector LcsParameterizedNlp::pack(const Trajectory& t) const {
  const Index n_x = problem_.nx(), n_u = problem_.nu(), n_l = problem_.nlambda();
  const Index n = disc_.stages;
  require_same_size(n, t.x.rows(), "pack x rows");
  require_same_size(n, t.u.rows(), "pack u rows");
  require_same_size(n, t.lambda.rows(), "pack lambda rows");
  require_same_size(n, t.eta.rows(), "pack eta rows");
  require_same_size(n_x, t.x.cols(), "pack x cols");
  require_same_size(n_u, t.u.cols(), "pack u cols");
  require_same_size(n_l, t.lambda.cols(), "pack lambda cols");
  require_same_size(n_l, t.eta.cols(), "pack eta cols");
  Vector z(n_z_);
  for (Index k = 0; k < n; ++k) {
    const StageLayout s = layout(k);
    z.segment(s.x, n_x) = t.x.row(k).transpose();
    z.segment(s.u, n_u) = t.u.row(k).transpose();
    z.segment(s.lambda, n_l) = t.lambda.row(k).transpose();
    z.segment(s.eta, n_l) = t.eta.row(k).transpose();
  }
  return z;
}

std::unique_ptr<LcsParameterizedNlp> discretize(const LcsOcpecProblem& problem,
                                                const DiscretizationConfig& disc,
                                                Reformulation reform,
                                                const GapConfig& gap) {
  return std::make_unique<LcsParameterizedNlp>(problem, disc, reform, gap);
}

}  // namespace gapflow
