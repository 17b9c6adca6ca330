#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <functional>
#include <memory>
#include <span>
#include <variant>

namespace gapflow {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using Triplet = Eigen::Triplet<double, Index>;
using CscMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, Index>;

inline constexpr double kDefaultPivotFloor = 1e-12;

/// Largest dimension factorized with the dense LU path.
inline constexpr Index kDenseLuLimit = 256;

/// Square matrix in compressed column storage. Duplicate triplets are summed
/// during assembly, so the stored pattern never holds repeated (row, col).
class SparseSquareMatrix {
 public:
  SparseSquareMatrix() = default;
  SparseSquareMatrix(Index n, std::span<const Triplet> entries);

  static SparseSquareMatrix identity(Index n);
  static SparseSquareMatrix from_dense(const DenseMatrix& dense);

  Index dimension() const noexcept { return n_; }
  Index nonzeros() const noexcept { return csc_.nonZeros(); }
  const CscMatrix& csc() const noexcept { return csc_; }

  DenseMatrix to_dense() const;
  Vector operator*(const Vector& x) const;

  /// Copy with `shift` added to the first `count` diagonal entries.
  SparseSquareMatrix with_diagonal_shift(Index count, double shift) const;

 private:
  Index n_ = 0;
  CscMatrix csc_;
};

/// Immutable LU factors with partial pivoting. Small systems keep dense
/// factors; larger ones use a supernodal sparse LU with a COLAMD column
/// ordering. Copies share the underlying factors.
class LuFactorization {
 public:
  Index dimension() const noexcept { return n_; }
  double min_pivot() const noexcept { return min_pivot_; }
  bool is_sparse() const noexcept;

  Vector solve(const Vector& b) const;

 private:
  friend LuFactorization lu_factorize(const SparseSquareMatrix&, double);

  using SparseLu = Eigen::SparseLU<CscMatrix, Eigen::COLAMDOrdering<Index>>;

  Index n_ = 0;
  double min_pivot_ = 0.0;
  std::variant<std::shared_ptr<const Eigen::PartialPivLU<DenseMatrix>>,
               std::shared_ptr<const SparseLu>>
      factors_;
};

/// Throws SingularMatrix if any pivot magnitude is below `pivot_floor`.
LuFactorization lu_factorize(const SparseSquareMatrix& m,
                             double pivot_floor = kDefaultPivotFloor);

/// Throws DimensionMismatch if `b` does not match the factorization.
Vector lu_solve(const LuFactorization& f, const Vector& b);

using VectorFunction = std::function<Vector(const Vector&)>;

/// Central-difference Jacobian, one column per coordinate of `x`.
DenseMatrix fd_jacobian(const VectorFunction& f, const Vector& x, double h);

}  // namespace gapflow
