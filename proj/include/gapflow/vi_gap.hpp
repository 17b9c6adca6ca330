#pragma once

#include "gapflow/numeric.hpp"

namespace gapflow {

/// Box-shaped VI set {lambda : lower <= lambda <= upper}. Infinite bounds are
/// allowed per coordinate.
struct BoxSet {
  Vector lower;
  Vector upper;

  static BoxSet nonnegative(Index n);
  static BoxSet free(Index n);

  Index size() const noexcept { return lower.size(); }
  bool contains(const Vector& p, double tol = 0.0) const;
  /// Throws DimensionMismatch or ConfigError on an inconsistent box.
  void validate() const;
};

/// Parameters of the Auchmuty gap functions with d(w) = |w|^2 / 2.
struct GapConfig {
  double c = 1.0;  // primal gap
  double a = 0.5;  // D-gap, inner
  double b = 2.0;  // D-gap, outer; b > a
  double m = 1.0;  // strong-convexity modulus of d

  void validate() const;
};

enum class GapKind { primal, d_gap };

struct GapEval {
  double value = 0.0;
  Vector grad_lambda;
  Vector grad_eta;
  /// Maximizer of the Auchmuty function. For the D-gap this is the one for b.
  Vector omega_hat;
};

/// Coordinatewise clamp of `p` onto the box.
Vector project_box(const BoxSet& box, const Vector& p);

/// Maximizer of the Auchmuty function over the box: clamp(lambda - eta / c).
Vector omega_hat(const BoxSet& box, double c, const Vector& lambda,
                 const Vector& eta);

GapEval primal_gap(const BoxSet& box, const GapConfig& cfg, const Vector& lambda,
                   const Vector& eta);
GapEval d_gap(const BoxSet& box, const GapConfig& cfg, const Vector& lambda,
              const Vector& eta);

/// In-place variants for hot loops; `out` is resized only when its vectors
/// do not already have the right length.
void primal_gap_into(const BoxSet& box, double c,
                     const Eigen::Ref<const Vector>& lambda,
                     const Eigen::Ref<const Vector>& eta, GapEval& out);
void d_gap_into(const BoxSet& box, const GapConfig& cfg,
                const Eigen::Ref<const Vector>& lambda,
                const Eigen::Ref<const Vector>& eta, GapEval& out);

/// One element of the generalized Jacobian of (grad_lambda, grad_eta) with
/// respect to (lambda, eta), laid out as
///
///   [ d grad_lambda / d lambda   d grad_lambda / d eta ]
///   [ d grad_eta    / d lambda   d grad_eta    / d eta ]
///
/// At a projection kink the clamped branch (derivative 0) is selected.
DenseMatrix gap_gradient_gen_jacobian(const BoxSet& box, const GapConfig& cfg,
                                      const Vector& lambda, const Vector& eta,
                                      GapKind kind);

/// Writes the same matrix into a preallocated 2n x 2n block.
void gap_gradient_gen_jacobian_into(const BoxSet& box, const GapConfig& cfg,
                                    const Eigen::Ref<const Vector>& lambda,
                                    const Eigen::Ref<const Vector>& eta,
                                    GapKind kind, Eigen::Ref<DenseMatrix> out);

}  // namespace gapflow
