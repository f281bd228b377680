#pragma once

// Matrix representations for low-rank approximation (LRA), norms, the exact
// truncation oracle and the relative-error metric used in every report.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "slra/error.hpp"

namespace slra {

using Index = Eigen::Index;
using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class NormKind { spectral, frobenius };

inline void require_finite(const DenseMatrix& m, std::string_view what) {
  if (m.size() > 0 && !m.allFinite())
    throw PreconditionError(std::string(what) + ": matrix has non-finite entries");
}

inline void require_nonempty(const DenseMatrix& m, std::string_view what) {
  if (m.rows() <= 0 || m.cols() <= 0)
    throw DimensionError(std::string(what) + ": empty matrix");
}

/// M ~= A * B with A m x k and B k x n; k may be 0 (the zero matrix).
struct Factored2 {
  DenseMatrix A;
  DenseMatrix B;

  Factored2() = default;
  Factored2(DenseMatrix a, DenseMatrix b) : A(std::move(a)), B(std::move(b)) {
    if (A.cols() != B.rows())
      throw DimensionError("Factored2: inner dimensions " + std::to_string(A.cols()) + " and " +
                           std::to_string(B.rows()) + " differ");
  }

  static Factored2 zero(Index m, Index n) { return {DenseMatrix(m, 0), DenseMatrix(0, n)}; }

  Index rows() const noexcept { return A.rows(); }
  Index cols() const noexcept { return B.cols(); }
  Index rank() const noexcept { return A.cols(); }
};

/// M ~= X * T * Y with X m x k, T k x l, Y l x n.
struct Factored3 {
  DenseMatrix X;
  DenseMatrix T;
  DenseMatrix Y;

  Factored3(DenseMatrix x, DenseMatrix t, DenseMatrix y)
      : X(std::move(x)), T(std::move(t)), Y(std::move(y)) {
    if (X.cols() != T.rows() || T.cols() != Y.rows())
      throw DimensionError("Factored3: inner dimensions differ");
  }

  Index rows() const noexcept { return X.rows(); }
  Index cols() const noexcept { return Y.cols(); }
};

/// U * diag(sigma) * V^T with orthonormal columns in U, V and sigma nonincreasing.
struct TopSVD {
  DenseMatrix U;
  Vector sigma;
  DenseMatrix V;

  Index rows() const noexcept { return U.rows(); }
  Index cols() const noexcept { return V.rows(); }
  Index rank() const noexcept { return sigma.size(); }
};

/// Rank-rho factored form U * (diag(sigma) V^T).
inline Factored2 to_factored(const TopSVD& s) {
  return {s.U, s.sigma.asDiagonal() * s.V.transpose()};
}

inline Vector singular_values(const DenseMatrix& m) {
  if (m.size() == 0) return Vector(0);
  Eigen::BDCSVD<DenseMatrix> svd(m);
  return svd.singularValues();
}

inline double norm(const DenseMatrix& m, NormKind kind) {
  require_nonempty(m, "norm");
  if (kind == NormKind::frobenius) return m.norm();
  return singular_values(m)(0);
}

/// The rho-truncation M_rho (optimal rank-rho approximation in both norms).
inline TopSVD truncate_svd(const DenseMatrix& m, Index rho) {
  require_nonempty(m, "truncate_svd");
  if (rho < 1 || rho > std::min(m.rows(), m.cols()))
    throw DimensionError("truncate_svd: rank " + std::to_string(rho) + " out of range");
  Eigen::BDCSVD<DenseMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU().leftCols(rho), svd.singularValues().head(rho),
          svd.matrixV().leftCols(rho)};
}

inline DenseMatrix materialize(const Factored2& l) {
  if (l.rank() == 0) return DenseMatrix::Zero(l.rows(), l.cols());
  return l.A * l.B;
}

inline DenseMatrix materialize(const Factored3& l) { return (l.X * l.T) * l.Y; }

/// Entry (i, j) of U diag(sigma) V^T with a fixed summation order. Both
/// materialize(TopSVD) and CUR extraction go through this kernel so extracted
/// rows and columns agree bit for bit.
inline double topsvd_entry(const TopSVD& s, Index i, Index j) {
  double acc = 0.0;
  for (Index t = 0; t < s.rank(); ++t) acc += (s.U(i, t) * s.sigma(t)) * s.V(j, t);
  return acc;
}

inline DenseMatrix materialize(const TopSVD& s) {
  DenseMatrix out(s.rows(), s.cols());
  for (Index j = 0; j < s.cols(); ++j)
    for (Index i = 0; i < s.rows(); ++i) out(i, j) = topsvd_entry(s, i, j);
  return out;
}

/// L1 + L2 by factor concatenation: A = [A1 | A2], B = [B1 ; B2].
inline Factored2 lra_sum(const Factored2& l1, const Factored2& l2) {
  if (l1.rows() != l2.rows() || l1.cols() != l2.cols())
    throw DimensionError("lra_sum: outer dimensions differ");
  if (l2.rank() == 0) return l1;
  if (l1.rank() == 0) return l2;
  DenseMatrix a(l1.rows(), l1.rank() + l2.rank());
  a << l1.A, l2.A;
  DenseMatrix b(l1.rank() + l2.rank(), l1.cols());
  b << l1.B, l2.B;
  return {std::move(a), std::move(b)};
}

/// Moore-Penrose pseudo-inverse; singular values below rel_tol * sigma_1 are dropped.
inline DenseMatrix pseudo_inverse(const DenseMatrix& m, double rel_tol = 1e-12,
                                  bool* truncated = nullptr) {
  if (truncated) *truncated = false;
  if (m.size() == 0) return DenseMatrix::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<DenseMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = rel_tol * s(0);
  Vector inv(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) {
      inv(i) = 1.0 / s(i);
    } else {
      inv(i) = 0.0;
      if (truncated) *truncated = true;
    }
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Result of the relative error metric ||M - approx||_2 / ||M - M_rho||_2.
struct ErrorRatio {
  double value = 0.0;
  /// True when sigma_{rho+1}(M) < 1e-14 sigma_1(M); `value` is then the
  /// absolute spectral error rather than a ratio.
  bool degenerate = false;
};

inline constexpr double kDegenerateDenominator = 1e-14;

inline ErrorRatio error_ratio_from(double numerator, double sigma_next, double sigma_first) {
  if (sigma_next < kDegenerateDenominator * sigma_first || sigma_next == 0.0)
    return {numerator, true};
  return {numerator / sigma_next, false};
}

inline ErrorRatio relative_error_ratio(const DenseMatrix& m, const DenseMatrix& approx,
                                       Index rho) {
  require_nonempty(m, "relative_error_ratio");
  if (approx.rows() != m.rows() || approx.cols() != m.cols())
    throw DimensionError("relative_error_ratio: approximation shape differs from input");
  if (rho < 1 || rho > std::min(m.rows(), m.cols()))
    throw DimensionError("relative_error_ratio: rank out of range");
  const Vector s = singular_values(m);
  const double next = rho < s.size() ? s(rho) : 0.0;
  return error_ratio_from(norm(m - approx, NormKind::spectral), next, s(0));
}

inline ErrorRatio relative_error_ratio(const DenseMatrix& m, const Factored2& approx, Index rho) {
  return relative_error_ratio(m, materialize(approx), rho);
}

}  // namespace slra
