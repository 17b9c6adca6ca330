#pragma once

#include "gapflow/numeric.hpp"
#include "gapflow/ocpec.hpp"

namespace gapflow {

/// Primal-dual unknowns Y = (z, v_c, gamma_h, gamma_c), where v_c is the
/// slack standing in for c(z, s) inside the complementarity map.
struct KktState {
  Vector z;
  Vector v_c;
  Vector gamma_h;
  Vector gamma_c;

  Index size() const noexcept {
    return z.size() + v_c.size() + gamma_h.size() + gamma_c.size();
  }
  Vector stacked() const;
  static KktState unstack(const Vector& y, Index n_z, Index n_h, Index n_c);
  static KktState unstack(const Vector& y, const ParameterizedNlp& nlp);
};

/// Diagonal regularization of the KKT matrix.
struct Regularization {
  double hessian = 1e-6;          // nu_H
  double equality = 1e-6;         // nu_h
  double complementarity = 1e-6;  // nu_c

  void validate() const;
};

/// Fischer-Burmeister function sqrt(a^2 + b^2) - a - b. A positive `mu`
/// gives the smoothed variant sqrt(a^2 + b^2 + 2 mu) - a - b, whose zeros
/// satisfy a, b > 0, ab = mu.
double fb(double a, double b, double mu = 0.0);

struct FbPartials {
  double da;
  double db;
};

/// One element of the generalized gradient of fb; the origin maps to the
/// center of the subdifferential disk, (1/sqrt(2) - 1, 1/sqrt(2) - 1).
FbPartials fb_gen_jacobian(double a, double b, double mu = 0.0);

/// T(Y, s) = [grad_z L; h(z); c(z, s) - v_c; Psi(v_c, gamma_c)] with
/// L = J + gamma_h' h - gamma_c' c.
/// `smoothing` > 0 replaces Psi by its smoothed variant.
Vector kkt_residual(const ParameterizedNlp& nlp, const KktState& y, double s,
                    double smoothing = 0.0);

/// Regularized generalized-Jacobian element of T with respect to Y:
///
///   [ H + nu_H I   0                   dh'       -dc'              ]
///   [ dh           0                   -nu_h I    0                ]
///   [ dc           -I                  0          0                ]
///   [ 0            dPsi/dv - nu_c I    0          dPsi/dgamma - nu_c I ]
SparseSquareMatrix kkt_matrix(const ParameterizedNlp& nlp, const KktState& y,
                              double s, const Regularization& reg,
                              double smoothing = 0.0);

/// dT/ds. Constant: ones on the gap rows of the c - v_c block, zero elsewhere.
Vector kkt_sensitivity(const ParameterizedNlp& nlp);

/// Square semismooth system T(Y, s) = 0 driven by the continuation flow.
class KktSystem {
 public:
  virtual ~KktSystem() = default;

  virtual Index size() const = 0;
  /// Divisor of the scaled residual |T| / scale.
  virtual double residual_scale() const = 0;
  virtual Vector residual(const Vector& y, double s) const = 0;
  virtual SparseSquareMatrix jacobian(const Vector& y, double s) const = 0;
  virtual Vector sensitivity() const = 0;
  /// Leading unknowns that carry the Hessian block; initialization may shift
  /// their diagonal.
  virtual Index primal_size() const { return size(); }
};

/// KKT system of a ParameterizedNlp with a fixed regularization.
class NlpKktSystem final : public KktSystem {
 public:
  NlpKktSystem(const ParameterizedNlp& nlp, Regularization reg);

  Index size() const override;
  double residual_scale() const override;
  Vector residual(const Vector& y, double s) const override;
  SparseSquareMatrix jacobian(const Vector& y, double s) const override;
  Vector sensitivity() const override { return sensitivity_; }
  Index primal_size() const override { return nlp_.n_z(); }

  const ParameterizedNlp& nlp() const noexcept { return nlp_; }
  const Regularization& regularization() const noexcept { return reg_; }

 private:
  const ParameterizedNlp& nlp_;
  Regularization reg_;
  Vector sensitivity_;
};

}  // namespace gapflow
