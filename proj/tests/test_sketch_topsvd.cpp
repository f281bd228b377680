#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "slra/accessor.hpp"
#include "slra/core.hpp"
#include "slra/matgen.hpp"
#include "slra/random.hpp"
#include "slra/sketch.hpp"
#include "slra/topsvd.hpp"

using namespace slra;

namespace {

constexpr auto kAhad = MultiplierKind::abridged_hadamard;
constexpr auto kGauss = MultiplierKind::gaussian;

/// Factors whose product has the prescribed spectrum and whose individual
/// factors share its decay (A = X S^{1/2}, B = S^{1/2} Y^T).
Factored2 balanced_factors(Index m, Index n, const Vector& s, std::uint32_t seed) {
  const DenseMatrix x = oracle::with_spectrum(m, s.size(), Vector::Ones(s.size()), seed);
  const DenseMatrix y = oracle::with_spectrum(n, s.size(), Vector::Ones(s.size()), seed + 1);
  const Vector root = s.cwiseSqrt();
  return {x * root.asDiagonal(), root.asDiagonal() * y.transpose()};
}

DenseMatrix projector(const DenseMatrix& u) { return u * u.transpose(); }

}  // namespace

// ---- abridged Hadamard -----------------------------------------------------

TEST(AbridgedHadamard, DepthZeroFullIsSignedPermutation) {
  const auto f = make_multiplier(kAhad, Side::left, 64, 64, 0, 3);
  const DenseMatrix d = f.dense();
  for (Index r = 0; r < 64; ++r) {
    EXPECT_EQ(f.line(r).size(), 1u);
    EXPECT_EQ(d.row(r).cwiseAbs().sum(), 1.0);
  }
  EXPECT_EQ(d.cwiseAbs().colwise().sum(), Eigen::RowVectorXd::Ones(64));
}

TEST(AbridgedHadamard, Depth3RowsOf1024) {
  const auto f = make_multiplier(kAhad, Side::left, 40, 1024, 3, 17);
  const double mag = std::pow(2.0, -1.5);
  for (Index r = 0; r < 40; ++r) {
    ASSERT_EQ(f.line(r).size(), 8u);
    for (const auto& e : f.line(r)) EXPECT_NEAR(std::abs(e.value), mag, 1e-16);
  }
  const DenseMatrix d = f.dense();
  EXPECT_LE((d * d.transpose() - DenseMatrix::Identity(40, 40)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AbridgedHadamard, RowsComeFromDenseRecursionTimesSigns) {
  // F = (rows of H^(d)) * D for one +-1 diagonal D. Rows with a common
  // support must admit a common sign vector on that support.
  for (int d : {0, 1, 2, 3}) {
    const Index n = 32;
    const DenseMatrix h = oracle::abridged_hadamard(n, d);
    const auto f = make_multiplier(kAhad, Side::left, 24, n, d, 100 + d);
    const DenseMatrix fd = f.dense();
    std::map<std::vector<Index>, std::set<std::vector<int>>> groups;
    for (Index r = 0; r < 24; ++r) {
      std::vector<Index> supp;
      for (Index c = 0; c < n; ++c)
        if (fd(r, c) != 0.0) supp.push_back(c);
      std::set<std::vector<int>> candidates;
      for (Index hr = 0; hr < n; ++hr) {
        std::vector<int> signs;
        bool ok = true;
        for (Index c = 0; c < n && ok; ++c) {
          const bool in_f = fd(r, c) != 0.0, in_h = std::abs(h(hr, c)) > 1e-15;
          if (in_f != in_h) ok = false;
          else if (in_f) {
            const double q = fd(r, c) / h(hr, c);
            if (std::abs(std::abs(q) - 1.0) > 1e-14) ok = false;
            signs.push_back(q > 0 ? 1 : -1);
          }
        }
        if (ok) candidates.insert(signs);
      }
      ASSERT_FALSE(candidates.empty()) << "depth " << d << " row " << r;
      auto it = groups.find(supp);
      if (it == groups.end()) {
        groups.emplace(supp, candidates);
      } else {
        std::set<std::vector<int>> both;
        for (const auto& c : candidates)
          if (it->second.count(c)) both.insert(c);
        it->second = both;
        EXPECT_FALSE(both.empty()) << "depth " << d << " row " << r;
      }
    }
  }
}

TEST(AbridgedHadamard, ExhaustiveInvariants) {
  for (Index n : {Index{128}, Index{1024}}) {
    for (int d : {0, 1, 3}) {
      const auto f = make_multiplier(kAhad, Side::left, n, n, d, 7 * n + d);
      for (Index r = 0; r < n; ++r) ASSERT_EQ(f.line(r).size(), std::size_t{1} << d);
      const DenseMatrix fd = f.dense();
      EXPECT_LE((fd * fd.transpose() - DenseMatrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12)
          << "n=" << n << " d=" << d;
      const auto again = make_multiplier(kAhad, Side::left, n, n, d, 7 * n + d);
      EXPECT_EQ(again.dense(), fd);
    }
  }
}

TEST(AbridgedHadamard, RightSideIsTransposeShape) {
  const auto h = make_multiplier(kAhad, Side::right, 10, 64, 2, 9);
  EXPECT_EQ(h.rows(), 64);
  EXPECT_EQ(h.cols(), 10);
  const DenseMatrix d = h.dense();
  EXPECT_LE((d.transpose() * d - DenseMatrix::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AbridgedHadamard, Preconditions) {
  EXPECT_THROW(make_multiplier(kAhad, Side::left, 10, 100, 3, 1), PreconditionError);
  EXPECT_THROW(make_multiplier(kAhad, Side::left, 65, 64, 1, 1), DimensionError);
  EXPECT_THROW(make_multiplier(kGauss, Side::left, 65, 64, 0, 1), DimensionError);
}

TEST(GaussianMultiplier, SeedDeterminism) {
  const auto a = make_multiplier(kGauss, Side::left, 40, 1024, 0, 1);
  const auto b = make_multiplier(kGauss, Side::left, 40, 1024, 0, 1);
  const auto c = make_multiplier(kGauss, Side::left, 40, 1024, 0, 2);
  EXPECT_EQ(a.dense(), b.dense());
  EXPECT_GT((a.dense() - c.dense()).norm(), 0.0);
  const double mean = a.dense().mean();
  const double var = (a.dense().array() - mean).square().mean();
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0, 0.03);
}

TEST(SketchOperator, DescriptorRoundTrip) {
  for (auto kind : {kAhad, kGauss})
    for (auto side : {Side::left, Side::right}) {
      const auto op = make_multiplier(kind, side, 12, 64, 2, 31337);
      const auto back = SketchOperator::from_descriptor(op.descriptor());
      EXPECT_EQ(back.descriptor(), op.descriptor());
      EXPECT_EQ(back.dense(), op.dense());
    }
  EXPECT_EQ(make_multiplier(kAhad, Side::left, 40, 1024, 3, 5).descriptor(),
            "ahad left 40x1024 depth=3 seed=5");
  EXPECT_THROW(SketchOperator::from_descriptor("nonsense"), PreconditionError);
}

// ---- application -----------------------------------------------------------

TEST(ApplyLeft, DepthZeroSamplesRows) {
  const DenseMatrix m = Rng(1).gaussian_matrix(64, 48);
  CountingAccessor acc(m);
  const auto f = make_multiplier(kAhad, Side::left, 10, 64, 0, 2);
  const DenseMatrix fm = apply_left(f, acc);
  EXPECT_EQ(acc.distinct(), 10u * 48u);
  for (Index r = 0; r < 10; ++r) {
    const auto& e = f.line(r).front();
    EXPECT_EQ(fm.row(r), e.value * m.row(e.pos));
  }
}

TEST(ApplyLeft, AccessBoundAtDepth3) {
  const DenseMatrix m = Rng(2).gaussian_matrix(1024, 1024);
  CountingAccessor acc(m);
  const auto f = make_multiplier(kAhad, Side::left, 16, 1024, 3, 3);
  apply_left(f, acc);
  EXPECT_LE(acc.distinct(), 128u * 1024u);
  EXPECT_LE(static_cast<double>(acc.distinct()) / (1024.0 * 1024.0), 0.125);
}

TEST(ApplyLeft, MatchesDenseOracle) {
  const DenseMatrix m = Rng(3).gaussian_matrix(64, 64);
  for (auto kind : {kAhad, kGauss}) {
    CountingAccessor acc(m);
    const auto f = make_multiplier(kind, Side::left, 20, 64, 3, 4);
    EXPECT_LE((apply_left(f, acc) - oracle::product(f.dense(), m)).norm(), 1e-12);
    EXPECT_LE((apply_left(f, m) - oracle::product(f.dense(), m)).norm(), 1e-12);
  }
}

TEST(ApplyRight, DepthZeroSamplesColumns) {
  const DenseMatrix m = Rng(4).gaussian_matrix(40, 64);
  CountingAccessor acc(m);
  const auto h = make_multiplier(kAhad, Side::right, 8, 64, 0, 5);
  const DenseMatrix mh = apply_right(acc, h);
  EXPECT_EQ(acc.distinct(), 8u * 40u);
  for (Index c = 0; c < 8; ++c) {
    const auto& e = h.line(c).front();
    EXPECT_EQ(mh.col(c), e.value * m.col(e.pos));
  }
}

TEST(ApplyRight, AccessBoundAtDepth3) {
  const DenseMatrix m = Rng(5).gaussian_matrix(512, 1024);
  CountingAccessor acc(m);
  const auto h = make_multiplier(kAhad, Side::right, 16, 1024, 3, 6);
  apply_right(acc, h);
  EXPECT_LE(acc.distinct(), 512u * 16u * 8u);
}

TEST(ApplyRight, MatchesDenseOracle) {
  const DenseMatrix m = Rng(6).gaussian_matrix(64, 64);
  for (auto kind : {kAhad, kGauss}) {
    CountingAccessor acc(m);
    const auto h = make_multiplier(kind, Side::right, 20, 64, 3, 7);
    EXPECT_LE((apply_right(acc, h) - oracle::product(m, h.dense())).norm(), 1e-12);
  }
}

TEST(Apply, DimensionMismatch) {
  const DenseMatrix m = DenseMatrix::Ones(32, 16);
  CountingAccessor acc(m);
  EXPECT_THROW(apply_left(make_multiplier(kAhad, Side::left, 4, 16, 0, 1), acc), DimensionError);
  EXPECT_THROW(apply_right(acc, make_multiplier(kAhad, Side::right, 4, 32, 0, 1)), DimensionError);
  EXPECT_THROW(apply_left(make_multiplier(kAhad, Side::right, 4, 32, 0, 1), acc), DimensionError);
}

TEST(Sublinearity, LeftApplyTouchesFewRowsAt4096) {
  const auto f = make_multiplier(kAhad, Side::left, 16, 4096, 3, 8);
  std::set<Index> rows;
  for (Index r = 0; r < 16; ++r)
    for (const auto& e : f.line(r)) rows.insert(e.pos);
  EXPECT_LE(static_cast<double>(rows.size()) / 4096.0, 0.03125);
  const DenseMatrix m = Rng(9).gaussian_matrix(4096, 8);
  CountingAccessor acc(m);
  apply_left(f, acc);
  EXPECT_LE(static_cast<double>(acc.distinct()) / (4096.0 * 8.0), 0.03125);
}

TEST(ApplyToFactored, ZeroAndOracleAndNoReads) {
  Rng rng(10);
  const DenseMatrix m = rng.gaussian_matrix(64, 64);
  CountingAccessor acc(m);
  const Factored2 l(rng.gaussian_matrix(64, 5), rng.gaussian_matrix(5, 64));
  for (auto kind : {kAhad, kGauss}) {
    const auto f = make_multiplier(kind, Side::left, 12, 64, 3, 11);
    const auto h = make_multiplier(kind, Side::right, 12, 64, 3, 12);
    EXPECT_EQ(apply_to_factored(f, Factored2::zero(64, 64)), DenseMatrix::Zero(12, 64));
    EXPECT_EQ(apply_to_factored(Factored2::zero(64, 64), h), DenseMatrix::Zero(64, 12));
    EXPECT_LE((apply_to_factored(f, l) - apply_left(f, materialize(l))).norm(), 1e-12);
    EXPECT_LE((apply_to_factored(l, h) - apply_right(materialize(l), h)).norm(), 1e-12);
  }
  EXPECT_EQ(acc.total_reads(), 0u);
}

// ---- exact top SVD of an LRA -----------------------------------------------

TEST(TopSvdOfLra, DiagonalCore) {
  Vector d(5);
  d << 1, -7, 3, 0.5, 4;
  const Factored2 l(DenseMatrix::Identity(8, 5), DenseMatrix(d.asDiagonal()) * DenseMatrix::Identity(5, 6));
  const TopSVD s = topsvd_of_lra(l, 3);
  EXPECT_NEAR(s.sigma(0), 7, 1e-14);
  EXPECT_NEAR(s.sigma(1), 4, 1e-14);
  EXPECT_NEAR(s.sigma(2), 3, 1e-14);
}

TEST(TopSvdOfLra, MatchesFullSvdOracle) {
  Rng rng(20);
  const Factored2 l(rng.gaussian_matrix(200, 30), rng.gaussian_matrix(30, 150));
  const DenseMatrix p = materialize(l);
  const Vector want = oracle::singular_values(p);
  const TopSVD s = topsvd_of_lra(l, 10);
  for (Index i = 0; i < 10; ++i) EXPECT_NEAR(s.sigma(i), want(i), 1e-10 * want(i));
  const double err = oracle::spectral_norm(p - materialize(s));
  EXPECT_NEAR(err, want(10), 1e-9 * want(10));
}

TEST(TopSvdOfLra, InvariantsAndProjector) {
  const Vector spec = oracle::geometric(20, 1.0, 0.8);
  const Factored2 l = balanced_factors(120, 90, spec, 30);
  const TopSVD s = topsvd_of_lra(l, 8);
  EXPECT_LE((s.U.transpose() * s.U - DenseMatrix::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((s.V.transpose() * s.V - DenseMatrix::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-12);
  for (Index i = 1; i < 8; ++i) EXPECT_GE(s.sigma(i - 1), s.sigma(i));
  Eigen::JacobiSVD<DenseMatrix> ref(materialize(l), Eigen::ComputeThinU | Eigen::ComputeThinV);
  EXPECT_LE((projector(s.U) - projector(ref.matrixU().leftCols(8))).norm(), 1e-8);
  EXPECT_LE((projector(s.V) - projector(ref.matrixV().leftCols(8))).norm(), 1e-8);
}

TEST(TopSvdOfLra, Factored3FoldsMiddleFactor) {
  Rng rng(21);
  const Factored3 l(rng.gaussian_matrix(50, 6), rng.gaussian_matrix(6, 7), rng.gaussian_matrix(7, 40));
  const Vector want = oracle::singular_values(materialize(l));
  const TopSVD s = topsvd_of_lra(l, 4);
  for (Index i = 0; i < 4; ++i) EXPECT_NEAR(s.sigma(i), want(i), 1e-10 * want(0));
}

TEST(TopSvdOfLra, Preconditions) {
  Rng rng(22);
  const Factored2 l(rng.gaussian_matrix(20, 5), rng.gaussian_matrix(5, 20));
  EXPECT_THROW(topsvd_of_lra(l, 6), DimensionError);
  EXPECT_THROW(topsvd_of_lra(l, 0), DimensionError);
  const Factored2 wide(rng.gaussian_matrix(4, 6), rng.gaussian_matrix(6, 20));
  EXPECT_THROW(topsvd_of_lra(wide, 3), DimensionError);
}

TEST(TopSvdOfLra, FlopBudgetIsLinearInDimensions) {
  const Index k = 12;
  double worst = 0.0;
  std::vector<double> counts;
  for (Index m : {Index{100}, Index{400}, Index{1600}}) {
    Rng rng(m);
    const Factored2 l(rng.gaussian_matrix(m, k), rng.gaussian_matrix(k, m / 2));
    FlopCounter fc;
    topsvd_of_lra(l, 5, &fc);
    const double per = static_cast<double>(fc.flops) / (static_cast<double>(m + m / 2) * k * k);
    worst = std::max(worst, per);
    counts.push_back(static_cast<double>(fc.flops));
  }
  EXPECT_LE(worst, 40.0);
  // Quadrupling m and n at most quadruples the work; forming AB would be 16x.
  EXPECT_LE(counts[2] / counts[1], 4.0);
  EXPECT_LE(counts[1] / counts[0], 4.0);
}

// ---- pivoted approximate top SVD -------------------------------------------

TEST(TopSvdQrp, ExactRankProduct) {
  Rng rng(40);
  const Index rho = 6;
  const DenseMatrix x = rng.gaussian_matrix(80, rho), y = rng.gaussian_matrix(rho, 70);
  const DenseMatrix p = rng.gaussian_matrix(rho, 15), q = rng.gaussian_matrix(15, rho);
  const Factored2 l(x * p, q * y);
  const auto r = topsvd_of_lra_qrp(l, rho);
  const DenseMatrix ab = materialize(l);
  EXPECT_LE(oracle::spectral_norm(ab - materialize(r.svd)), 1e-9 * oracle::spectral_norm(ab));
}

TEST(TopSvdQrp, SquareFactorsMatchExactRoutine) {
  Rng rng(41);
  const Factored2 l(rng.gaussian_matrix(60, 8), rng.gaussian_matrix(8, 50));
  const auto a = topsvd_of_lra_qrp(l, 8);
  const TopSVD b = topsvd_of_lra(l, 8);
  EXPECT_FALSE(a.used_fallback);
  EXPECT_LE((a.svd.sigma - b.sigma).cwiseAbs().maxCoeff(), 1e-10 * b.sigma(0));
  EXPECT_LE((materialize(a.svd) - materialize(b)).norm(), 1e-10 * b.sigma(0));
  EXPECT_LE((projector(a.svd.U) - projector(b.U)).norm(), 1e-8);
}

TEST(TopSvdQrp, ErrorBoundOnFastDecayingCore) {
  const Index k = 40, rho = 10;
  const Factored2 l = balanced_factors(256, 256, oracle::geometric(k, 1.0, 0.6), 42);
  const DenseMatrix ab = materialize(l);
  const Vector sv = oracle::singular_values(ab);
  const auto r = topsvd_of_lra_qrp(l, rho, 1.01);
  const double err = oracle::spectral_norm(ab - materialize(r.svd));
  EXPECT_LE(err, 3.0 * qrp_error_factor(k, rho, 1.01) * sv(rho));
  EXPECT_LE((r.svd.U.transpose() * r.svd.U - DenseMatrix::Identity(rho, rho)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((r.svd.V.transpose() * r.svd.V - DenseMatrix::Identity(rho, rho)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TopSvdQrp, ErrorFactorFormula) {
  EXPECT_DOUBLE_EQ(qrp_error_factor(40, 10, 1.01), std::sqrt(1.0 + 1.01 * 1.01 * 300.0));
  EXPECT_DOUBLE_EQ(qrp_error_factor(10, 10, 2.0), 1.0);
}

TEST(TopSvdQrp, SingularCoreFallsBack) {
  const Factored2 l(DenseMatrix::Zero(30, 5), DenseMatrix::Zero(5, 20));
  const auto r = topsvd_of_lra_qrp(l, 3);
  EXPECT_TRUE(r.used_fallback);
  EXPECT_EQ(r.svd.sigma.maxCoeff(), 0.0);
}

TEST(TopSvdQrp, Preconditions) {
  Rng rng(43);
  const Factored2 l(rng.gaussian_matrix(20, 5), rng.gaussian_matrix(5, 20));
  EXPECT_THROW(topsvd_of_lra_qrp(l, 3, 1.0), PreconditionError);
  EXPECT_THROW(topsvd_of_lra_qrp(l, 6), DimensionError);
}

// ---- recompression ---------------------------------------------------------

TEST(Recompress, FullRankIsUnchanged) {
  Rng rng(50);
  const Factored2 l(rng.gaussian_matrix(40, 6), rng.gaussian_matrix(6, 30));
  for (auto method : {RecompressMethod::svd, RecompressMethod::qrp}) {
    const Factored2 r = recompress(l, 6, method);
    EXPECT_EQ(r.rank(), 6);
    EXPECT_LE((materialize(r) - materialize(l)).norm(), 1e-12 * materialize(l).norm());
  }
}

TEST(Recompress, GoodLraPlusSmallCorrection) {
  const Index n = 256, rho = 20;
  const DenseMatrix m = gen_synthetic(n, SpectrumSpec::fast_decay(n), 51);
  const Factored2 best = to_factored(truncate_svd(m, rho));
  Rng rng(52);
  const Factored2 corr(1e-4 * rng.gaussian_matrix(n, 2 * rho) / std::sqrt(double(n)),
                       rng.gaussian_matrix(2 * rho, n) / std::sqrt(double(n)));
  const Factored2 l = lra_sum(best, corr);
  ASSERT_EQ(l.rank(), 3 * rho);
  const double ratio = relative_error_ratio(m, recompress(l, rho), rho).value;
  EXPECT_GE(ratio, 1.0 - 1e-12);
  EXPECT_LE(ratio, 1.01);
}

TEST(Recompress, TriangleInequalityBounds) {
  // ||M - (AB)_rho|| <= ||M - AB|| + sigma_{rho+1}(AB) and
  // ||M - (AB)_rho|| <= 2 ||M - AB|| + sigma_{rho+1}(M).
  Rng rng(53);
  for (int t = 0; t < 100; ++t) {
    const Index m = 30 + t % 7, n = 25 + t % 5, k = 8, rho = 3 + t % 4;
    const DenseMatrix mm = oracle::with_spectrum(m, n, oracle::geometric(20, 1.0, 0.7), 1000 + t);
    const Factored2 l(mm.leftCols(k) + 0.05 * rng.gaussian_matrix(m, k),
                      pseudo_inverse(mm.leftCols(k)) * mm);
    const DenseMatrix ab = materialize(l);
    const double base = oracle::spectral_norm(mm - ab);
    const double tau_ab = oracle::singular_values(ab)(rho);
    const double tau_m = oracle::singular_values(mm)(rho);
    const double err = oracle::spectral_norm(mm - materialize(recompress(l, rho)));
    EXPECT_LE(err, base + tau_ab + 1e-9);
    EXPECT_LE(err, 2 * base + tau_m + 1e-9);
  }
}
