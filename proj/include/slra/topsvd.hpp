#pragma once

// rho-top SVD of a factored LRA A B without forming the m x n product, and
// re-compression of a rank-inflated LRA back to rank rho.

#include <cmath>
#include <cstdint>
#include <string>

#include "slra/core.hpp"
#include "slra/error.hpp"

namespace slra {

/// Analytic flop tally of the dense kernels an algorithm invokes.
struct FlopCounter {
  std::uint64_t flops = 0;

  void gemm(Index p, Index q, Index r) { flops += 2ull * p * q * r; }
  /// Householder QR of a p x q matrix (p >= q) including forming thin Q.
  void qr(Index p, Index q) { flops += 4ull * p * q * q; }
  /// One-sided Jacobi SVD of a q x q matrix, bounded generously.
  void small_svd(Index q) { flops += 30ull * q * q * q; }
};

namespace detail {

struct ThinSVD {
  DenseMatrix U;  // p x q
  Vector sigma;   // q
  DenseMatrix V;  // q x q
};

/// SVD of a tall p x q matrix (p >= q) as Householder QR then Jacobi SVD of R.
inline ThinSVD tall_svd(const DenseMatrix& x, FlopCounter* flops) {
  const Index p = x.rows();
  const Index q = x.cols();
  Eigen::HouseholderQR<DenseMatrix> qr(x);
  const DenseMatrix thin_q = qr.householderQ() * DenseMatrix::Identity(p, q);
  const DenseMatrix r = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<DenseMatrix> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (flops) {
    flops->qr(p, q);
    flops->small_svd(q);
    flops->gemm(p, q, q);
  }
  return {thin_q * svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

inline void check_topsvd_args(const Factored2& l, Index rho, const char* who) {
  const Index k = l.rank();
  if (rho < 1) throw DimensionError(std::string(who) + ": rank must be positive");
  if (rho > k)
    throw DimensionError(std::string(who) + ": rank " + std::to_string(rho) +
                         " exceeds factor width " + std::to_string(k));
  if (k > std::min(l.rows(), l.cols()))
    throw DimensionError(std::string(who) + ": factor width exceeds min(m, n)");
}

}  // namespace detail

/// Exact rho-top SVD of A B in O((m + n) k^2) flops.
///
/// A = U_A S_A V_A^T (U_A m x k) and B = U_B S_B V_B^T (V_B n x k); then
/// W = S_A V_A^T U_B S_B is k x k, A B = U_A W V_B^T, and the leading rho
/// singular triplets of W give those of A B.
inline TopSVD topsvd_of_lra(const Factored2& l, Index rho, FlopCounter* flops = nullptr) {
  detail::check_topsvd_args(l, rho, "topsvd_of_lra");
  const Index k = l.rank();

  const auto a = detail::tall_svd(l.A, flops);
  // B^T = U' S V'^T  =>  B = V' S U'^T: U_B = V', V_B = U'.
  const auto bt = detail::tall_svd(l.B.transpose(), flops);
  const DenseMatrix& u_b = bt.V;
  const DenseMatrix& v_b = bt.U;

  const DenseMatrix w = a.sigma.asDiagonal() * (a.V.transpose() * u_b) * bt.sigma.asDiagonal();
  Eigen::JacobiSVD<DenseMatrix> svd_w(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (flops) {
    flops->gemm(k, k, k);
    flops->small_svd(k);
    flops->gemm(l.rows(), k, rho);
    flops->gemm(l.cols(), k, rho);
  }
  return {a.U * svd_w.matrixU().leftCols(rho), svd_w.singularValues().head(rho),
          v_b * svd_w.matrixV().leftCols(rho)};
}

/// Thin wrapper for X T Y: folds T into X and runs the 2-factor routine.
inline TopSVD topsvd_of_lra(const Factored3& l, Index rho, FlopCounter* flops = nullptr) {
  return topsvd_of_lra(Factored2(l.X * l.T, l.Y), rho, flops);
}

struct ApproxTopSVD {
  TopSVD svd;
  /// The rho x rho core was numerically singular and the exact routine was used.
  bool used_fallback = false;
};

/// Approximate rho-top SVD from pivoted QR factorizations of the factors.
///
/// A P = Q R (column pivoting) and B^T P' = Q'^T L^T give A = Q R P^T and
/// B = P' L Q'. Truncating R to its leading rho rows and L to its leading rho
/// columns leaves the rho x rho core R_{1:rho,:} P^T P' L_{:,1:rho}, whose SVD
/// U_c S V_c^T yields U = Q_{:,1:rho} U_c and V = (Q'_{1:rho,:})^T V_c.
///
/// `h` is the pivoting tolerance of strong rank-revealing QR; standard column
/// pivoting is used here, so it only enters the reported error factor.
inline ApproxTopSVD topsvd_of_lra_qrp(const Factored2& l, Index rho, double h = 1.01,
                                      FlopCounter* flops = nullptr) {
  detail::check_topsvd_args(l, rho, "topsvd_of_lra_qrp");
  if (!(h > 1.0)) throw PreconditionError("topsvd_of_lra_qrp: h must exceed 1");
  const Index m = l.rows();
  const Index n = l.cols();
  const Index k = l.rank();

  Eigen::ColPivHouseholderQR<DenseMatrix> qr_a(l.A);
  Eigen::ColPivHouseholderQR<DenseMatrix> qr_b(l.B.transpose());
  const DenseMatrix r_a = qr_a.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const DenseMatrix r_b = qr_b.matrixQR().topRows(k).triangularView<Eigen::Upper>();

  // R_{1:rho,:} P^T P' L_{:,1:rho} with L = R_b^T.
  const DenseMatrix rows_a = r_a.topRows(rho) * qr_a.colsPermutation().transpose();
  const DenseMatrix cols_b = qr_b.colsPermutation() * r_b.topRows(rho).transpose();
  const DenseMatrix core = rows_a * cols_b;

  Eigen::JacobiSVD<DenseMatrix> svd(core, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  if (s(rho - 1) <= kDegenerateDenominator * s(0) || s(0) == 0.0)
    return {topsvd_of_lra(l, rho, flops), true};

  const DenseMatrix q_a = qr_a.householderQ() * DenseMatrix::Identity(m, rho);
  const DenseMatrix q_b = qr_b.householderQ() * DenseMatrix::Identity(n, rho);
  if (flops) {
    flops->qr(m, k);
    flops->qr(n, k);
    flops->gemm(rho, k, rho);
    flops->small_svd(rho);
    flops->gemm(m, rho, rho);
    flops->gemm(n, rho, rho);
  }
  return {{q_a * svd.matrixU(), s, q_b * svd.matrixV()}, false};
}

/// Error factor sqrt(1 + h^2 (k - rho) rho) of strong rank-revealing QRP.
inline double qrp_error_factor(Index k, Index rho, double h) {
  return std::sqrt(1.0 + h * h * static_cast<double>(k - rho) * static_cast<double>(rho));
}

enum class RecompressMethod { svd, qrp };

/// Compress an LRA to rank rho, as U * (S V^T).
inline Factored2 recompress(const Factored2& l, Index rho, RecompressMethod method = RecompressMethod::svd,
                            FlopCounter* flops = nullptr) {
  const TopSVD s = method == RecompressMethod::svd ? topsvd_of_lra(l, rho, flops)
                                                   : topsvd_of_lra_qrp(l, rho, 1.01, flops).svd;
  return to_factored(s);
}

}  // namespace slra
