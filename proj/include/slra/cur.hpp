#pragma once

// CUR decomposition of a rank-rho matrix given by its top SVD U S V^T.
// C and R are actual columns and rows of U S V^T; the nucleus is the
// pseudo-inverse of the generator G = U_{I,:} S V_{J,:}^T.

#include <cmath>
#include <string>
#include <vector>

#include "slra/core.hpp"
#include "slra/error.hpp"

namespace slra {

struct CURDecomp {
  DenseMatrix C;  // m x l
  DenseMatrix N;  // l x k
  DenseMatrix R;  // k x n
  std::vector<Index> I;  // k row indices
  std::vector<Index> J;  // l column indices
};

/// t_{q,s,h} = sqrt((q - s) s h^2 + 1).
inline double selection_bound(Index q, Index s, double h) {
  return std::sqrt(static_cast<double>(q - s) * static_cast<double>(s) * h * h + 1.0);
}

/// t_{m,rho,h}^a t_{n,rho,h}^a / sigma_rho: the nucleus norm bound for
/// rank-revealing selection (a = 1 for strong RRQR, a = 2 for the LU variant).
inline double nucleus_norm_bound(Index m, Index n, Index rho, double h, int a, double sigma_rho) {
  if (!(h > 1.0)) throw PreconditionError("nucleus_norm_bound: h must exceed 1");
  if (a != 1 && a != 2) throw PreconditionError("nucleus_norm_bound: a must be 1 or 2");
  if (!(sigma_rho > 0.0)) throw PreconditionError("nucleus_norm_bound: sigma_rho must be positive");
  if (rho < 1 || rho > std::min(m, n)) throw DimensionError("nucleus_norm_bound: rank out of range");
  return std::pow(selection_bound(m, rho, h), a) * std::pow(selection_bound(n, rho, h), a) / sigma_rho;
}

/// Picks `count` rows of a matrix with orthonormal columns so that the
/// selected block is well conditioned: QR with column pivoting on Q^T,
/// taking the leading pivots.
inline std::vector<Index> rr_select(const DenseMatrix& q, Index count) {
  if (count < q.cols() || count > q.rows())
    throw DimensionError("rr_select: count " + std::to_string(count) + " outside [" +
                         std::to_string(q.cols()) + ", " + std::to_string(q.rows()) + "]");
  Eigen::ColPivHouseholderQR<DenseMatrix> qr(q.transpose());
  const auto& perm = qr.colsPermutation().indices();
  std::vector<Index> out(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = perm(i);
  return out;
}

/// CUR of U S V^T with k selected rows and l selected columns (rho <= k, l).
inline CURDecomp svd_to_cur(const TopSVD& s, Index k, Index l) {
  const Index m = s.rows();
  const Index n = s.cols();
  const Index rho = s.rank();
  if (rho < 1) throw DimensionError("svd_to_cur: empty SVD");
  if (k < rho || k > m || l < rho || l > n)
    throw DimensionError("svd_to_cur: need rho <= k <= m and rho <= l <= n");
  if (!(s.sigma(rho - 1) > kDegenerateDenominator * s.sigma(0)))
    throw PreconditionError("svd_to_cur: singular nucleus (sigma_rho <= 1e-14 sigma_1)");

  CURDecomp out;
  out.I = rr_select(s.U, k);
  out.J = rr_select(s.V, l);

  out.C.resize(m, l);
  for (Index c = 0; c < l; ++c)
    for (Index i = 0; i < m; ++i) out.C(i, c) = topsvd_entry(s, i, out.J[static_cast<std::size_t>(c)]);
  out.R.resize(k, n);
  for (Index j = 0; j < n; ++j)
    for (Index r = 0; r < k; ++r) out.R(r, j) = topsvd_entry(s, out.I[static_cast<std::size_t>(r)], j);

  DenseMatrix u_sel(k, rho);
  for (Index r = 0; r < k; ++r) u_sel.row(r) = s.U.row(out.I[static_cast<std::size_t>(r)]);
  DenseMatrix vt_sel(rho, l);
  for (Index c = 0; c < l; ++c) vt_sel.col(c) = s.V.row(out.J[static_cast<std::size_t>(c)]).transpose();

  // N = (V^T_{:,J})^+ S^{-1} U_{I,:}^+.
  out.N = pseudo_inverse(vt_sel, 0.0) * s.sigma.cwiseInverse().asDiagonal() *
          pseudo_inverse(u_sel, 0.0);
  return out;
}

inline DenseMatrix materialize(const CURDecomp& cur) { return cur.C * (cur.N * cur.R); }

}  // namespace slra
