#pragma once

#include <cmath>
#include <functional>
#include <initializer_list>
#include <random>

#include "gapflow/ocpec.hpp"

namespace testing_support {

using gapflow::Index;
using gapflow::Vector;

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

/// Scalar-lambda problem with zero dynamics: A = B = E = 0, x0 = 0.
inline gapflow::LcsOcpecProblem zero_dynamics_problem(double horizon = 1.0) {
  gapflow::LcsOcpecProblem p;
  p.A = gapflow::DenseMatrix::Zero(1, 1);
  p.B = gapflow::DenseMatrix::Zero(1, 1);
  p.E = gapflow::DenseMatrix::Zero(1, 1);
  p.C = gapflow::DenseMatrix::Constant(1, 1, -1.0);
  p.D = gapflow::DenseMatrix::Constant(1, 1, 1.0);
  p.G = gapflow::DenseMatrix::Constant(1, 1, 1.0);
  p.Q = gapflow::DenseMatrix::Identity(1, 1);
  p.R = gapflow::DenseMatrix::Identity(1, 1);
  p.S_lambda = gapflow::DenseMatrix::Identity(1, 1);
  p.x0 = Vector::Zero(1);
  p.horizon = horizon;
  p.K = gapflow::BoxSet::nonnegative(1);
  return p;
}

/// Forward simulation of the implicit-Euler LCS with a prescribed control and
/// a per-stage scalar LCP solved in closed form. Requires n_lambda = 1,
/// K = [0, inf) and a positive effective lambda coefficient.
inline Vector simulate_feasible(const gapflow::LcsParameterizedNlp& nlp,
                                const std::function<double(Index)>& control) {
  const auto& p = nlp.problem();
  const double dt = nlp.discretization().dt;
  const Index n_x = p.nx();
  const Eigen::PartialPivLU<gapflow::DenseMatrix> m(
      gapflow::DenseMatrix::Identity(n_x, n_x) - dt * p.A);
  Vector z = Vector::Zero(nlp.n_z());
  Vector prev = p.x0;
  for (Index n = 0; n < nlp.stage_count(); ++n) {
    const auto st = nlp.layout(n);
    Vector u = Vector::Constant(p.nu(), control(n));
    const Vector x_free = m.solve(prev + dt * p.B * u);
    const Vector x_unit = m.solve(dt * p.E.col(0));
    const double eta_free = (p.C * x_free + p.D * u)[0];
    const double slope = (p.C * x_unit)[0] + p.G(0, 0);
    const double lambda = eta_free >= 0.0 ? 0.0 : -eta_free / slope;
    const Vector x = x_free + lambda * x_unit;
    z.segment(st.x, n_x) = x;
    z.segment(st.u, p.nu()) = u;
    z[st.lambda] = lambda;
    z[st.eta] = eta_free + slope * lambda;
    prev = x;
  }
  return z;
}

/// Random z whose (lambda, eta) pairs keep a margin from the projection kinks
/// of every gap parameter in `cs`.
inline Vector random_nonkink_z(const gapflow::LcsParameterizedNlp& nlp, std::mt19937_64& rng,
                               std::initializer_list<double> cs, double margin = 1e-3) {
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  Vector z(nlp.n_z());
  for (Index i = 0; i < z.size(); ++i) z[i] = unif(rng);
  const Index n_l = nlp.problem().nlambda();
  for (Index n = 0; n < nlp.stage_count(); ++n) {
    const auto st = nlp.layout(n);
    for (Index i = 0; i < n_l; ++i) {
      bool ok = false;
      while (!ok) {
        ok = true;
        for (double c : cs) {
          const double p = z[st.lambda + i] - z[st.eta + i] / c;
          const auto& K = nlp.problem().K;
          if (std::abs(p - K.lower[i]) < margin || std::abs(p - K.upper[i]) < margin) ok = false;
        }
        if (!ok) z[st.eta + i] = unif(rng);
      }
    }
  }
  return z;
}

}  // namespace testing_support
