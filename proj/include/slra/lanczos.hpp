#pragma once

// Largest singular value by Golub-Kahan-Lanczos bidiagonalization with full
// reorthogonalization. Used where a full SVD per evaluation would dominate
// the run time (the bench evaluates five error norms per trial).

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "slra/core.hpp"
#include "slra/random.hpp"

namespace slra {

struct LanczosOptions {
  /// Stop once the Ritz residual is below rel_tol * (current estimate).
  double rel_tol = 1e-13;
  Index max_steps = 300;
  std::uint64_t seed = 0x5eed;
};

struct LanczosResult {
  double sigma = 0.0;
  double residual = 0.0;
  Index steps = 0;
  bool converged = false;
};

/// Top singular value of an operator given by y = op(x) (R^n -> R^m) and
/// y = op_t(x) (R^m -> R^n). The estimate never exceeds sigma_1.
template <class Apply, class ApplyT>
LanczosResult top_singular_value(Index m, Index n, Apply&& op, ApplyT&& op_t,
                                 const LanczosOptions& opt = {}) {
  LanczosResult out;
  const Index limit = std::min({opt.max_steps, m, n});
  if (limit <= 0) return out;

  DenseMatrix left(m, limit);
  DenseMatrix right(n, limit + 1);
  Vector alpha = Vector::Zero(limit);
  Vector beta = Vector::Zero(limit);

  Rng rng(opt.seed);
  Vector v = rng.gaussian_vector(n);
  v.normalize();
  right.col(0) = v;

  Vector u_prev = Vector::Zero(m);
  double beta_prev = 0.0;
  for (Index j = 0; j < limit; ++j) {
    Vector u = op(right.col(j)) - beta_prev * u_prev;
    if (j > 0) {
      // Two passes of classical Gram-Schmidt keep the basis orthogonal to working precision.
      for (int pass = 0; pass < 2; ++pass)
        u -= left.leftCols(j) * (left.leftCols(j).transpose() * u);
    }
    alpha(j) = u.norm();
    out.steps = j + 1;
    if (alpha(j) == 0.0 || !std::isfinite(alpha(j))) {
      // Invariant subspace found: the bidiagonal block is exact.
      alpha(j) = 0.0;
      out.converged = true;
      break;
    }
    u /= alpha(j);
    left.col(j) = u;

    Vector w = op_t(u) - alpha(j) * right.col(j);
    for (int pass = 0; pass < 2; ++pass)
      w -= right.leftCols(j + 1) * (right.leftCols(j + 1).transpose() * w);
    beta(j) = w.norm();

    // Ritz check on the (j+1) x (j+1) upper bidiagonal block.
    const Index k = j + 1;
    DenseMatrix bidiag = DenseMatrix::Zero(k, k);
    for (Index t = 0; t < k; ++t) {
      bidiag(t, t) = alpha(t);
      if (t + 1 < k) bidiag(t, t + 1) = beta(t);
    }
    Eigen::JacobiSVD<DenseMatrix> svd(bidiag, Eigen::ComputeFullU);
    out.sigma = svd.singularValues()(0);
    out.residual = beta(j) * std::abs(svd.matrixU()(k - 1, 0));
    if (out.residual <= opt.rel_tol * out.sigma || beta(j) == 0.0) {
      out.converged = true;
      break;
    }
    right.col(j + 1) = w / beta(j);
    u_prev = u;
    beta_prev = beta(j);
  }

  if (out.steps > 0 && (out.sigma == 0.0 || out.converged)) {
    // Recompute from the final block so the breakdown branch is covered too.
    const Index k = out.steps;
    DenseMatrix bidiag = DenseMatrix::Zero(k, k);
    for (Index t = 0; t < k; ++t) {
      bidiag(t, t) = alpha(t);
      if (t + 1 < k) bidiag(t, t + 1) = beta(t);
    }
    out.sigma = std::max(out.sigma, Eigen::JacobiSVD<DenseMatrix>(bidiag).singularValues()(0));
  }
  return out;
}

inline LanczosResult top_singular_value(const DenseMatrix& d, const LanczosOptions& opt = {}) {
  return top_singular_value(
      d.rows(), d.cols(), [&](const auto& x) -> Vector { return d * x; },
      [&](const auto& x) -> Vector { return d.transpose() * x; }, opt);
}

/// Evaluates the relative error metric for many approximations of one input.
/// The spectrum of M is computed once; each numerator is a Lanczos estimate
/// of ||M - approx||_2 on the explicitly formed difference.
class ErrorRatioOracle {
 public:
  ErrorRatioOracle(const DenseMatrix& m, Index rho) : m_(&m), rho_(rho) {
    require_nonempty(m, "ErrorRatioOracle");
    if (rho < 1 || rho > std::min(m.rows(), m.cols()))
      throw DimensionError("ErrorRatioOracle: rank out of range");
    spectrum_ = singular_values(m);
    sigma_next_ = rho < spectrum_.size() ? spectrum_(rho) : 0.0;
  }

  explicit ErrorRatioOracle(DenseMatrix&&, Index) = delete;

  const Vector& spectrum() const noexcept { return spectrum_; }
  double sigma_next() const noexcept { return sigma_next_; }
  Index rho() const noexcept { return rho_; }

  double spectral_error(const Factored2& approx) const {
    const DenseMatrix d = *m_ - materialize(approx);
    return top_singular_value(d).sigma;
  }

  double frobenius_error(const Factored2& approx) const {
    return (*m_ - materialize(approx)).norm();
  }

  ErrorRatio ratio(const Factored2& approx) const {
    return error_ratio_from(spectral_error(approx), sigma_next_, spectrum_(0));
  }

 private:
  const DenseMatrix* m_;
  Index rho_;
  Vector spectrum_;
  double sigma_next_ = 0.0;
};

}  // namespace slra
