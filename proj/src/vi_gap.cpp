#include "gapflow/vi_gap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gapflow/errors.hpp"

namespace gapflow {

BoxSet BoxSet::nonnegative(Index n) {
  return {Vector::Zero(n),
          Vector::Constant(n, std::numeric_limits<double>::infinity())};
}

BoxSet BoxSet::free(Index n) {
  const double inf = std::numeric_limits<double>::infinity();
  return {Vector::Constant(n, -inf), Vector::Constant(n, inf)};
}

bool BoxSet::contains(const Vector& p, double tol) const {
  require_same_size(size(), p.size(), "BoxSet::contains");
  for (Index i = 0; i < p.size(); ++i) {
    if (p[i] < lower[i] - tol || p[i] > upper[i] + tol) return false;
  }
  return true;
}

void BoxSet::validate() const {
  require_same_size(lower.size(), upper.size(), "BoxSet bounds");
  for (Index i = 0; i < size(); ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] > upper[i] ||
        lower[i] == std::numeric_limits<double>::infinity() ||
        upper[i] == -std::numeric_limits<double>::infinity()) {
      throw ConfigError("BoxSet: invalid bounds at coordinate " +
                        std::to_string(i));
    }
  }
}

void GapConfig::validate() const {
  if (!(c > 0.0)) throw ConfigError("gap parameter c must be positive");
  if (!(a > 0.0)) throw ConfigError("gap parameter a must be positive");
  if (!(b > a)) throw ConfigError("gap parameters must satisfy b > a");
  if (!(m > 0.0)) throw ConfigError("strong-convexity constant m must be positive");
}

Vector project_box(const BoxSet& box, const Vector& p) {
  require_same_size(box.size(), p.size(), "project_box");
  return p.cwiseMax(box.lower).cwiseMin(box.upper);
}

Vector omega_hat(const BoxSet& box, double c, const Vector& lambda,
                 const Vector& eta) {
  require_same_size(box.size(), lambda.size(), "omega_hat lambda");
  require_same_size(box.size(), eta.size(), "omega_hat eta");
  if (!(c > 0.0)) throw Error("omega_hat: c must be positive");
  return project_box(box, lambda - eta / c);
}

namespace {

void ensure_size(Vector& v, Index n) {
  if (v.size() != n) v.resize(n);
}

void check_inputs(const BoxSet& box, Index nl, Index ne) {
  require_same_size(box.size(), nl, "gap lambda");
  require_same_size(box.size(), ne, "gap eta");
}

// Strictly inside the box means the projection has unit slope there.
bool projection_active(const BoxSet& box, Index i, double p) {
  return p > box.lower[i] && p < box.upper[i];
}

}  // namespace

void primal_gap_into(const BoxSet& box, double c,
                     const Eigen::Ref<const Vector>& lambda,
                     const Eigen::Ref<const Vector>& eta, GapEval& out) {
  check_inputs(box, lambda.size(), eta.size());
  const Index n = lambda.size();
  ensure_size(out.grad_lambda, n);
  ensure_size(out.grad_eta, n);
  ensure_size(out.omega_hat, n);

  // L(lambda, eta, w) = c d(lambda) - c d(w) + (eta - c lambda)^T (lambda - w)
  double value = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double l = lambda[i];
    const double e = eta[i];
    const double w = std::clamp(l - e / c, box.lower[i], box.upper[i]);
    const double diff = l - w;
    value += 0.5 * c * (l * l - w * w) + (e - c * l) * diff;
    out.omega_hat[i] = w;
    out.grad_lambda[i] = e - c * diff;
    out.grad_eta[i] = diff;
  }
  out.value = value;
}

void d_gap_into(const BoxSet& box, const GapConfig& cfg,
                const Eigen::Ref<const Vector>& lambda,
                const Eigen::Ref<const Vector>& eta, GapEval& out) {
  check_inputs(box, lambda.size(), eta.size());
  const Index n = lambda.size();
  ensure_size(out.grad_lambda, n);
  ensure_size(out.grad_eta, n);
  ensure_size(out.omega_hat, n);

  double value = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double l = lambda[i];
    const double e = eta[i];
    const double wa = std::clamp(l - e / cfg.a, box.lower[i], box.upper[i]);
    const double wb = std::clamp(l - e / cfg.b, box.lower[i], box.upper[i]);
    const double da = l - wa;
    const double db = l - wb;
    const double phi_a = 0.5 * cfg.a * (l * l - wa * wa) + (e - cfg.a * l) * da;
    const double phi_b = 0.5 * cfg.b * (l * l - wb * wb) + (e - cfg.b * l) * db;
    value += phi_a - phi_b;
    out.omega_hat[i] = wb;
    out.grad_lambda[i] = (e - cfg.a * da) - (e - cfg.b * db);
    out.grad_eta[i] = da - db;
  }
  out.value = value;
}

GapEval primal_gap(const BoxSet& box, const GapConfig& cfg, const Vector& lambda,
                   const Vector& eta) {
  if (!(cfg.c > 0.0)) throw Error("primal_gap: c must be positive");
  GapEval out;
  primal_gap_into(box, cfg.c, lambda, eta, out);
  return out;
}

GapEval d_gap(const BoxSet& box, const GapConfig& cfg, const Vector& lambda,
              const Vector& eta) {
  if (!(cfg.b > cfg.a && cfg.a > 0.0)) {
    throw Error("d_gap: parameters must satisfy b > a > 0");
  }
  GapEval out;
  d_gap_into(box, cfg, lambda, eta, out);
  return out;
}

namespace {

// Per-coordinate 2x2 generalized Jacobian of the primal gap gradient.
// With D = d clamp / dp and p = lambda - eta / c:
//   grad_lambda = eta - c (lambda - w):  [ -c (1 - D),  1 - D ]
//   grad_eta    = lambda - w:            [   1 - D,     D / c ]
struct Block2 {
  double ll, le, el, ee;
};

Block2 primal_block(const BoxSet& box, Index i, double c, double l, double e) {
  const double d = projection_active(box, i, l - e / c) ? 1.0 : 0.0;
  return {-c * (1.0 - d), 1.0 - d, 1.0 - d, d / c};
}

}  // namespace

void gap_gradient_gen_jacobian_into(const BoxSet& box, const GapConfig& cfg,
                                    const Eigen::Ref<const Vector>& lambda,
                                    const Eigen::Ref<const Vector>& eta,
                                    GapKind kind, Eigen::Ref<DenseMatrix> out) {
  check_inputs(box, lambda.size(), eta.size());
  const Index n = lambda.size();
  require_same_size(2 * n, out.rows(), "gap Jacobian rows");
  require_same_size(2 * n, out.cols(), "gap Jacobian cols");
  out.setZero();
  for (Index i = 0; i < n; ++i) {
    Block2 blk{};
    if (kind == GapKind::primal) {
      blk = primal_block(box, i, cfg.c, lambda[i], eta[i]);
    } else {
      const Block2 pa = primal_block(box, i, cfg.a, lambda[i], eta[i]);
      const Block2 pb = primal_block(box, i, cfg.b, lambda[i], eta[i]);
      blk = {pa.ll - pb.ll, pa.le - pb.le, pa.el - pb.el, pa.ee - pb.ee};
    }
    out(i, i) = blk.ll;
    out(i, n + i) = blk.le;
    out(n + i, i) = blk.el;
    out(n + i, n + i) = blk.ee;
  }
}

DenseMatrix gap_gradient_gen_jacobian(const BoxSet& box, const GapConfig& cfg,
                                      const Vector& lambda, const Vector& eta,
                                      GapKind kind) {
  DenseMatrix out(2 * lambda.size(), 2 * lambda.size());
  gap_gradient_gen_jacobian_into(box, cfg, lambda, eta, kind, out);
  return out;
}

}  // namespace gapflow
