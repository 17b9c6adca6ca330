#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gapflow/numeric.hpp"
#include "gapflow/vi_gap.hpp"

namespace gapflow {

/// Optimal control of a linear complementarity system (affine DVI):
///
///   min  int_0^T  x'Qx + u'Ru + lambda' S lambda  dt
///   s.t. xdot   = A x + B u + E lambda,   x(0) = x0
///        eta    = C x + D u + G lambda
///        lambda in SOL(K, eta)
struct LcsOcpecProblem {
  DenseMatrix A, B, E;
  DenseMatrix C, D, G;
  DenseMatrix Q, R, S_lambda;
  Vector x0;
  double horizon = 1.0;
  BoxSet K;

  Index nx() const noexcept { return A.rows(); }
  Index nu() const noexcept { return B.cols(); }
  Index nlambda() const noexcept { return E.cols(); }

  /// Throws DimensionMismatch or ConfigError.
  void validate() const;

  /// The two-state LCS benchmark with x0 = (-0.5, -1) and K = [0, inf).
  static LcsOcpecProblem vieira_benchmark();
};

struct DiscretizationConfig {
  Index stages = 100;
  double dt = 1e-2;

  static DiscretizationConfig uniform(double horizon, Index stages);
  void validate(double horizon) const;
};

enum class Reformulation { primal_gap, d_gap };

std::string to_string(Reformulation r);
/// Accepts "primal-gap" and "d-gap"; throws ConfigError otherwise.
Reformulation parse_reformulation(const std::string& text);

struct ObjectiveEval {
  double value = 0.0;
  Vector gradient;
};

struct ConstraintEval {
  Vector h;
  Vector c;
  CscMatrix jac_h;  // n_h x n_z, empty unless requested
  CscMatrix jac_c;  // n_c x n_z, empty unless requested
};

/// NLP with inequalities affine in a scalar parameter s:
///
///   min J(z)  s.t.  h(z) = 0,  c(z, s) >= 0.
class ParameterizedNlp {
 public:
  virtual ~ParameterizedNlp() = default;

  virtual Index n_z() const = 0;
  virtual Index n_h() const = 0;
  virtual Index n_c() const = 0;
  /// Divisor used for the scaled KKT residual (the stage count).
  virtual Index stage_count() const = 0;

  virtual ObjectiveEval eval_objective(const Vector& z) const = 0;
  virtual ConstraintEval eval_constraints(const Vector& z, double s,
                                          bool with_jacobians = true) const = 0;
  /// d c / d s, constant because c is affine in s.
  virtual Vector constraint_s_gradient() const = 0;
  /// Triplets of one generalized-Hessian element of
  /// J + gamma_h' h - gamma_c' c with respect to z.
  virtual std::vector<Triplet> lagrangian_hessian(const Vector& z,
                                                  const Vector& gamma_h,
                                                  const Vector& gamma_c) const = 0;
};

/// Index ranges of one stage inside z, h and c.
struct StageLayout {
  Index x, u, lambda, eta;   // offsets into z
  Index h_dynamics, h_vi;    // offsets into h
  Index c_set;               // offset of the g(lambda) rows (primal gap only)
  Index c_gap;               // offset of the gap row
};

/// Stage-major state/control/multiplier trajectories, one row per stage.
struct Trajectory {
  Vector time;
  DenseMatrix x, u, lambda, eta;
};

/// Implicit-Euler discretization of an LcsOcpecProblem with the gap
/// reformulation of the per-stage VI. Variables are ordered stage-major as
/// (x_n, u_n, lambda_n, eta_n), n = 1..N, with x_0 fixed to the initial state.
class LcsParameterizedNlp final : public ParameterizedNlp {
 public:
  LcsParameterizedNlp(LcsOcpecProblem problem, DiscretizationConfig disc,
                      Reformulation reform, GapConfig gap);

  Index n_z() const override { return n_z_; }
  Index n_h() const override { return n_h_; }
  Index n_c() const override { return n_c_; }
  Index stage_count() const override { return disc_.stages; }

  ObjectiveEval eval_objective(const Vector& z) const override;
  ConstraintEval eval_constraints(const Vector& z, double s,
                                  bool with_jacobians = true) const override;
  Vector constraint_s_gradient() const override;
  std::vector<Triplet> lagrangian_hessian(const Vector& z, const Vector& gamma_h,
                                          const Vector& gamma_c) const override;

  const LcsOcpecProblem& problem() const noexcept { return problem_; }
  const DiscretizationConfig& discretization() const noexcept { return disc_; }
  Reformulation reformulation() const noexcept { return reform_; }
  const GapConfig& gap_config() const noexcept { return gap_; }

  StageLayout layout(Index stage) const;
  Index stage_width() const noexcept { return width_; }
  /// Number of g(lambda) >= 0 rows per stage (finite bounds of K).
  Index set_rows_per_stage() const noexcept;
  bool is_gap_row(Index row) const;

  /// Gap function value and gradients of one stage.
  GapEval stage_gap(const Vector& z, Index stage) const;

  Trajectory unpack(const Vector& z) const;
  /// Packs trajectories (one row per stage) into z.
  Vector pack(const Trajectory& traj) const;

 private:
  struct SetRow {
    Index coordinate;
    double sign;   // +1 for lambda - lower, -1 for upper - lambda
    double bound;
  };

  void build_constant_parts();

  LcsOcpecProblem problem_;
  DiscretizationConfig disc_;
  Reformulation reform_;
  GapConfig gap_;
  Index width_ = 0;
  Index n_z_ = 0, n_h_ = 0, n_c_ = 0;
  Index h_per_stage_ = 0, c_per_stage_ = 0;
  std::vector<SetRow> set_rows_;
  CscMatrix jac_h_;
  std::vector<Triplet> objective_hessian_;
};

/// Builds the relaxed NLP for `reform`. Throws DimensionMismatch on
/// inconsistent problem data, ConfigError on invalid parameters.
std::unique_ptr<LcsParameterizedNlp> discretize(const LcsOcpecProblem& problem,
                                                const DiscretizationConfig& disc,
                                                Reformulation reform,
                                                const GapConfig& gap);

}  // namespace gapflow
