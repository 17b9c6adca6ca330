#include "gapflow/numeric.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gapflow/errors.hpp"

namespace gapflow {

SparseSquareMatrix::SparseSquareMatrix(Index n, std::span<const Triplet> entries)
    : n_(n), csc_(n, n) {
  for (const auto& t : entries) {
    if (t.row() < 0 || t.row() >= n || t.col() < 0 || t.col() >= n) {
      throw DimensionMismatch("sparse entry (" + std::to_string(t.row()) + ", " +
                              std::to_string(t.col()) +
                              ") outside a matrix of dimension " +
                              std::to_string(n));
    }
  }
  csc_.setFromTriplets(entries.begin(), entries.end());
  csc_.makeCompressed();
}

SparseSquareMatrix SparseSquareMatrix::identity(Index n) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) t.emplace_back(i, i, 1.0);
  return SparseSquareMatrix(n, t);
}

SparseSquareMatrix SparseSquareMatrix::from_dense(const DenseMatrix& dense) {
  require_same_size(dense.rows(), dense.cols(), "from_dense (square)");
  std::vector<Triplet> t;
  for (Index j = 0; j < dense.cols(); ++j) {
    for (Index i = 0; i < dense.rows(); ++i) {
      if (dense(i, j) != 0.0) t.emplace_back(i, j, dense(i, j));
    }
  }
  return SparseSquareMatrix(dense.rows(), t);
}

DenseMatrix SparseSquareMatrix::to_dense() const { return DenseMatrix(csc_); }

SparseSquareMatrix SparseSquareMatrix::with_diagonal_shift(Index count,
                                                           double shift) const {
  if (count < 0 || count > n_) throw DimensionMismatch("diagonal shift out of range");
  CscMatrix d(n_, n_);
  d.reserve(Eigen::VectorX<Index>::Constant(n_, 1));
  for (Index i = 0; i < count; ++i) d.insert(i, i) = shift;
  SparseSquareMatrix out;
  out.n_ = n_;
  out.csc_ = csc_ + d;
  out.csc_.makeCompressed();
  return out;
}

Vector SparseSquareMatrix::operator*(const Vector& x) const {
  require_same_size(n_, x.size(), "sparse matrix-vector product");
  return csc_ * x;
}

bool LuFactorization::is_sparse() const noexcept {
  return std::holds_alternative<std::shared_ptr<const SparseLu>>(factors_);
}

Vector LuFactorization::solve(const Vector& b) const {
  require_same_size(n_, b.size(), "lu_solve right-hand side");
  if (n_ == 0) return Vector();
  return std::visit([&](const auto& lu) -> Vector { return lu->solve(b); },
                    factors_);
}

namespace {

[[noreturn]] void throw_singular(double pivot, Index column, double floor) {
  throw SingularMatrix("LU pivot " + std::to_string(pivot) + " at column " +
                           std::to_string(column) + " below floor " +
                           std::to_string(floor),
                       pivot, column);
}

}  // namespace

LuFactorization lu_factorize(const SparseSquareMatrix& m, double pivot_floor) {
  if (!(pivot_floor > 0.0)) {
    throw Error("lu_factorize: pivot_floor must be positive");
  }
  LuFactorization f;
  f.n_ = m.dimension();
  f.min_pivot_ = std::numeric_limits<double>::infinity();

  if (f.n_ <= kDenseLuLimit) {
    auto lu = std::make_shared<Eigen::PartialPivLU<DenseMatrix>>(m.to_dense());
    const auto& packed = lu->matrixLU();
    for (Index j = 0; j < f.n_; ++j) {
      const double p = std::abs(packed(j, j));
      if (!(p >= pivot_floor)) throw_singular(p, j, pivot_floor);
      f.min_pivot_ = std::min(f.min_pivot_, p);
    }
    f.factors_ = std::shared_ptr<const Eigen::PartialPivLU<DenseMatrix>>(lu);
    return f;
  }

  auto lu = std::make_shared<LuFactorization::SparseLu>();
  lu->analyzePattern(m.csc());
  lu->factorize(m.csc());
  if (lu->info() != Eigen::Success) {
    // Eigen reports the 1-based column of an exactly zero pivot.
    throw SingularMatrix("sparse LU failed: " + lu->lastErrorMessage(), 0.0, -1);
  }
  // The diagonal of U lives in the supernodal L storage.
  const auto& supernodal = lu->matrixL().m_mapL;
  for (Index j = 0; j < f.n_; ++j) {
    double p = 0.0;
    for (typename std::decay_t<decltype(supernodal)>::InnerIterator it(supernodal, j);
         it; ++it) {
      if (it.row() == j) {
        p = std::abs(it.value());
        break;
      }
    }
    if (!(p >= pivot_floor)) throw_singular(p, j, pivot_floor);
    f.min_pivot_ = std::min(f.min_pivot_, p);
  }
  f.factors_ = std::shared_ptr<const LuFactorization::SparseLu>(lu);
  return f;
}

Vector lu_solve(const LuFactorization& f, const Vector& b) { return f.solve(b); }

DenseMatrix fd_jacobian(const VectorFunction& f, const Vector& x, double h) {
  if (!(h > 0.0)) throw Error("fd_jacobian: step must be positive");
  const Vector f0 = f(x);
  DenseMatrix jac(f0.size(), x.size());
  Vector xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const Vector fp = f(xp);
    xp[i] = x[i] - h;
    const Vector fm = f(xp);
    xp[i] = x[i];
    if (fp.size() != f0.size() || fm.size() != f0.size()) {
      throw EvaluationFailure("fd_jacobian: evaluator changed output size");
    }
    if (!fp.allFinite() || !fm.allFinite()) {
      throw EvaluationFailure("fd_jacobian: non-finite value at perturbed point");
    }
    jac.col(i) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

}  // namespace gapflow
