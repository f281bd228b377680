#pragma once

// Test matrices F (left, r' x m) and H (right, n x r') and their products
// with counted inputs and with factored LRAs.
//
// Abridged Hadamard construction: the Hadamard butterfly
//   H^(i) = 2^{-1/2} [[H^(i-1), H^(i-1)], [H^(i-1), -H^(i-1)]]
// applied d times starting from the identity on blocks of size n / 2^d,
// i.e. H^(d) = (normalized Walsh-Hadamard of order 2^d) (x) I_{n/2^d}.
// The operator is r' distinct uniformly sampled rows of H^(d) times a random
// +-1 diagonal D. The sign diagonal is an assumption of this library; the
// sampling and the butterfly fix the sparsity and orthogonality.

#include <bit>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "slra/accessor.hpp"
#include "slra/core.hpp"
#include "slra/error.hpp"
#include "slra/random.hpp"

namespace slra {

enum class MultiplierKind { abridged_hadamard, gaussian };
enum class Side { left, right };

inline std::string to_string(MultiplierKind k) {
  return k == MultiplierKind::abridged_hadamard ? "ahad" : "gaussian";
}

inline MultiplierKind parse_multiplier(const std::string& s) {
  if (s == "ahad" || s == "abridged" || s == "abridged_hadamard") return MultiplierKind::abridged_hadamard;
  if (s == "gaussian") return MultiplierKind::gaussian;
  throw PreconditionError("unknown multiplier kind '" + s + "' (expected ahad or gaussian)");
}

struct SparseEntry {
  Index pos;
  double value;
};

class SketchOperator {
 public:
  MultiplierKind kind() const noexcept { return kind_; }
  Side side() const noexcept { return side_; }
  int depth() const noexcept { return depth_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Shape as a matrix: r' x n for the left side, n x r' for the right side.
  Index rows() const noexcept { return side_ == Side::left ? count_ : extent_; }
  Index cols() const noexcept { return side_ == Side::left ? extent_ : count_; }

  /// Number of sampled lines (rows of F, columns of H).
  Index count() const noexcept { return count_; }
  /// Length of each line (the input dimension it contracts against).
  Index extent() const noexcept { return extent_; }

  /// Nonzeros of line `l` (row l of F, or column l of H), abridged kind only.
  const std::vector<SparseEntry>& line(Index l) const { return lines_.at(static_cast<std::size_t>(l)); }

  /// Dense coefficients, extent x count for both sides (a column per line).
  const DenseMatrix& dense_lines() const noexcept { return dense_; }

  /// The operator as an explicit matrix of shape rows() x cols().
  DenseMatrix dense() const {
    DenseMatrix lines_mat;
    if (kind_ == MultiplierKind::gaussian) {
      lines_mat = dense_;
    } else {
      lines_mat = DenseMatrix::Zero(extent_, count_);
      for (Index l = 0; l < count_; ++l)
        for (const auto& e : line(l)) lines_mat(e.pos, l) = e.value;
    }
    if (side_ == Side::left) return lines_mat.transpose();
    return lines_mat;
  }

  /// "kind side rows x cols depth seed", enough to rebuild the operator.
  std::string descriptor() const {
    std::ostringstream os;
    os << to_string(kind_) << ' ' << (side_ == Side::left ? "left" : "right") << ' ' << rows()
       << 'x' << cols() << " depth=" << depth_ << " seed=" << seed_;
    return os.str();
  }

  static SketchOperator from_descriptor(const std::string& text);

  friend SketchOperator make_multiplier(MultiplierKind, Side, Index, Index, int, std::uint64_t);

 private:
  MultiplierKind kind_ = MultiplierKind::gaussian;
  Side side_ = Side::left;
  Index count_ = 0;
  Index extent_ = 0;
  int depth_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::vector<SparseEntry>> lines_;
  DenseMatrix dense_;
};

/// Builds a left (count x extent) or right (extent x count) test matrix.
inline SketchOperator make_multiplier(MultiplierKind kind, Side side, Index count, Index extent,
                                      int depth, std::uint64_t seed) {
  if (count < 1 || extent < 1) throw DimensionError("make_multiplier: empty shape");
  if (count > extent)
    throw DimensionError("make_multiplier: " + std::to_string(count) + " lines exceed extent " +
                         std::to_string(extent));
  SketchOperator op;
  op.kind_ = kind;
  op.side_ = side;
  op.count_ = count;
  op.extent_ = extent;
  op.depth_ = kind == MultiplierKind::abridged_hadamard ? depth : 0;
  op.seed_ = seed;

  Rng rng(seed);
  if (kind == MultiplierKind::gaussian) {
    op.dense_ = rng.gaussian_matrix(extent, count);
    return op;
  }

  if (depth < 0 || depth > 30) throw PreconditionError("make_multiplier: depth out of range");
  const Index fan = Index{1} << depth;
  if (extent % fan != 0)
    throw PreconditionError("make_multiplier: extent " + std::to_string(extent) +
                            " is not divisible by 2^" + std::to_string(depth));
  const Index block = extent / fan;
  const double scale = 1.0 / std::sqrt(static_cast<double>(fan));

  const auto rows = rng.sample_without_replacement(extent, count);
  Vector signs(extent);
  for (Index i = 0; i < extent; ++i) signs(i) = rng.sign();

  op.lines_.resize(static_cast<std::size_t>(count));
  for (Index l = 0; l < count; ++l) {
    const Index r = rows[static_cast<std::size_t>(l)];
    const Index p = r / block;
    const Index offset = r % block;
    auto& entries = op.lines_[static_cast<std::size_t>(l)];
    entries.reserve(static_cast<std::size_t>(fan));
    for (Index q = 0; q < fan; ++q) {
      const Index col = q * block + offset;
      const double hadamard_sign =
          (std::popcount(static_cast<std::uint64_t>(p & q)) & 1) ? -1.0 : 1.0;
      entries.push_back({col, hadamard_sign * scale * signs(col)});
    }
  }
  return op;
}

inline SketchOperator SketchOperator::from_descriptor(const std::string& text) {
  std::istringstream is(text);
  std::string kind, side, shape, depth_tok, seed_tok;
  is >> kind >> side >> shape >> depth_tok >> seed_tok;
  const auto x = shape.find('x');
  if (!is || x == std::string::npos || depth_tok.rfind("depth=", 0) != 0 ||
      seed_tok.rfind("seed=", 0) != 0)
    throw PreconditionError("bad sketch descriptor '" + text + "'");
  const Index r = std::stoll(shape.substr(0, x));
  const Index c = std::stoll(shape.substr(x + 1));
  const int depth = std::stoi(depth_tok.substr(6));
  const std::uint64_t seed = std::stoull(seed_tok.substr(5));
  if (side == "left") return make_multiplier(parse_multiplier(kind), Side::left, r, c, depth, seed);
  if (side == "right") return make_multiplier(parse_multiplier(kind), Side::right, c, r, depth, seed);
  throw PreconditionError("bad sketch side '" + side + "'");
}

/// F * M, reading M only through the accessor. For the abridged kind only
/// the rows of M in the support of F are read.
inline DenseMatrix apply_left(const SketchOperator& f, CountingAccessor& m) {
  if (f.side() != Side::left) throw DimensionError("apply_left: operator is right-sided");
  if (f.cols() != m.rows())
    throw DimensionError("apply_left: F has " + std::to_string(f.cols()) + " columns, M has " +
                         std::to_string(m.rows()) + " rows");
  if (f.kind() == MultiplierKind::gaussian) return f.dense_lines().transpose() * m.read_all();

  DenseMatrix out = DenseMatrix::Zero(f.count(), m.cols());
  std::vector<Eigen::RowVectorXd> cache(static_cast<std::size_t>(m.rows()));
  std::vector<bool> have(static_cast<std::size_t>(m.rows()), false);
  for (Index l = 0; l < f.count(); ++l) {
    for (const auto& e : f.line(l)) {
      const auto r = static_cast<std::size_t>(e.pos);
      if (!have[r]) {
        cache[r] = m.row(e.pos);
        have[r] = true;
      }
      out.row(l) += e.value * cache[r];
    }
  }
  return out;
}

/// M * H, reading M only through the accessor.
inline DenseMatrix apply_right(CountingAccessor& m, const SketchOperator& h) {
  if (h.side() != Side::right) throw DimensionError("apply_right: operator is left-sided");
  if (h.rows() != m.cols())
    throw DimensionError("apply_right: H has " + std::to_string(h.rows()) + " rows, M has " +
                         std::to_string(m.cols()) + " columns");
  if (h.kind() == MultiplierKind::gaussian) return m.read_all() * h.dense_lines();

  DenseMatrix out = DenseMatrix::Zero(m.rows(), h.count());
  std::vector<Vector> cache(static_cast<std::size_t>(m.cols()));
  std::vector<bool> have(static_cast<std::size_t>(m.cols()), false);
  for (Index l = 0; l < h.count(); ++l) {
    for (const auto& e : h.line(l)) {
      const auto c = static_cast<std::size_t>(e.pos);
      if (!have[c]) {
        cache[c] = m.col(e.pos);
        have[c] = true;
      }
      out.col(l) += e.value * cache[c];
    }
  }
  return out;
}

/// F * X for an explicit matrix X (no access accounting).
inline DenseMatrix apply_left(const SketchOperator& f, const DenseMatrix& x) {
  if (f.side() != Side::left) throw DimensionError("apply_left: operator is right-sided");
  if (f.cols() != x.rows()) throw DimensionError("apply_left: dimension mismatch");
  if (f.kind() == MultiplierKind::gaussian) return f.dense_lines().transpose() * x;
  DenseMatrix out = DenseMatrix::Zero(f.count(), x.cols());
  for (Index l = 0; l < f.count(); ++l)
    for (const auto& e : f.line(l)) out.row(l) += e.value * x.row(e.pos);
  return out;
}

/// X * H for an explicit matrix X (no access accounting).
inline DenseMatrix apply_right(const DenseMatrix& x, const SketchOperator& h) {
  if (h.side() != Side::right) throw DimensionError("apply_right: operator is left-sided");
  if (h.rows() != x.cols()) throw DimensionError("apply_right: dimension mismatch");
  if (h.kind() == MultiplierKind::gaussian) return x * h.dense_lines();
  DenseMatrix out = DenseMatrix::Zero(x.rows(), h.count());
  for (Index l = 0; l < h.count(); ++l)
    for (const auto& e : h.line(l)) out.col(l) += e.value * x.col(e.pos);
  return out;
}

/// F * (A B) computed as (F A) B; never touches an input matrix.
inline DenseMatrix apply_to_factored(const SketchOperator& f, const Factored2& l) {
  if (f.side() != Side::left || f.cols() != l.rows())
    throw DimensionError("apply_to_factored: F does not fit the LRA rows");
  if (l.rank() == 0) return DenseMatrix::Zero(f.rows(), l.cols());
  return apply_left(f, l.A) * l.B;
}

/// (A B) * H computed as A (B H).
inline DenseMatrix apply_to_factored(const Factored2& l, const SketchOperator& h) {
  if (h.side() != Side::right || h.rows() != l.cols())
    throw DimensionError("apply_to_factored: H does not fit the LRA columns");
  if (l.rank() == 0) return DenseMatrix::Zero(l.rows(), h.cols());
  return l.A * apply_right(l.B, h);
}

}  // namespace slra
