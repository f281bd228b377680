#pragma once

// Synthetic test inputs: U diag(v) V^T with prescribed spectrum, and the
// delta-matrix family that defeats every sublinear-cost algorithm.

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>

#include "slra/core.hpp"
#include "slra/error.hpp"
#include "slra/random.hpp"

namespace slra {

enum class SpectrumKind { fast_decay, slow_decay, custom };

inline std::string to_string(SpectrumKind k) {
  switch (k) {
    case SpectrumKind::fast_decay: return "fast_decay";
    case SpectrumKind::slow_decay: return "slow_decay";
    case SpectrumKind::custom: return "custom";
  }
  return "unknown";
}

struct SpectrumSpec {
  SpectrumKind kind = SpectrumKind::custom;
  Vector values;

  /// 1 for i <= 20, 2^{-(i-20)} for 21 <= i <= 100, exactly 0 beyond (1-based i).
  static SpectrumSpec fast_decay(Index n) {
    Vector v(n);
    for (Index i = 1; i <= n; ++i) {
      if (i <= 20) v(i - 1) = 1.0;
      else if (i <= 100) v(i - 1) = std::ldexp(1.0, -static_cast<int>(i - 20));
      else v(i - 1) = 0.0;
    }
    return {SpectrumKind::fast_decay, std::move(v)};
  }

  /// 1 for i <= 20, 1 / (1 + i - 20)^2 beyond.
  static SpectrumSpec slow_decay(Index n) {
    Vector v(n);
    for (Index i = 1; i <= n; ++i) {
      const double d = 1.0 + static_cast<double>(i - 20);
      v(i - 1) = i <= 20 ? 1.0 : 1.0 / (d * d);
    }
    return {SpectrumKind::slow_decay, std::move(v)};
  }

  static SpectrumSpec custom(Vector values) {
    SpectrumSpec s{SpectrumKind::custom, std::move(values)};
    s.validate();
    return s;
  }

  void validate() const {
    if (values.size() == 0) throw PreconditionError("SpectrumSpec: empty spectrum");
    for (Index i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values(i)) || values(i) < 0.0)
        throw PreconditionError("SpectrumSpec: values must be finite and nonnegative");
      if (i > 0 && values(i) > values(i - 1))
        throw PreconditionError("SpectrumSpec: values must be nonincreasing");
    }
  }
};

inline bool is_power_of_two(Index n) { return n > 0 && std::has_single_bit(static_cast<std::uint64_t>(n)); }

/// n x n matrix U diag(spec.values) V^T, where U and V are the singular
/// vector factors of a seeded standard Gaussian n x n matrix.
inline DenseMatrix gen_synthetic(Index n, const SpectrumSpec& spec, std::uint64_t seed) {
  if (n < 128 || !is_power_of_two(n))
    throw PreconditionError("gen_synthetic: n = " + std::to_string(n) +
                            " must be a power of two >= 128 (pad other sizes with pad_matrix)");
  spec.validate();
  if (spec.values.size() != n)
    throw DimensionError("gen_synthetic: spectrum length " + std::to_string(spec.values.size()) +
                         " differs from n = " + std::to_string(n));
  Rng rng(seed);
  const DenseMatrix g = rng.gaussian_matrix(n, n);
  Eigen::BDCSVD<DenseMatrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * spec.values.asDiagonal() * svd.matrixV().transpose();
}

/// m x n matrix with a single unit entry at 1-based (i, j).
inline DenseMatrix gen_delta(Index m, Index n, Index i, Index j) {
  if (m < 1 || n < 1) throw DimensionError("gen_delta: empty shape");
  if (i < 1 || i > m || j < 1 || j > n)
    throw DimensionError("gen_delta: index (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") out of range");
  DenseMatrix d = DenseMatrix::Zero(m, n);
  d(i - 1, j - 1) = 1.0;
  return d;
}

/// The m*n + 1 matrices {O} U {Delta_ij}. Member 0 is the zero matrix;
/// member 1 + (j-1)*m + (i-1) is Delta_ij.
class DeltaFamily {
 public:
  DeltaFamily(Index m, Index n) : m_(m), n_(n) {
    if (m < 1 || n < 1) throw DimensionError("DeltaFamily: empty shape");
  }

  Index size() const noexcept { return m_ * n_ + 1; }

  DenseMatrix member(Index index) const {
    if (index < 0 || index >= size()) throw DimensionError("DeltaFamily: member out of range");
    if (index == 0) return DenseMatrix::Zero(m_, n_);
    const Index flat = index - 1;
    return gen_delta(m_, n_, flat % m_ + 1, flat / m_ + 1);
  }

 private:
  Index m_, n_;
};

}  // namespace slra
