#pragma once

// Sketch-based iterative refinement of an LRA.
//
// Each iteration approximates the current error E = M - M~ through its
// sketches F E = F M - (F A) B and E H = M H - A (B H), adds the correction
// Delta to M~ and, by default, re-compresses the sum to rank rho. The input
// M is read only while forming F M and M H.

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "slra/accessor.hpp"
#include "slra/core.hpp"
#include "slra/errest.hpp"
#include "slra/error.hpp"
#include "slra/random.hpp"
#include "slra/sketch.hpp"
#include "slra/topsvd.hpp"

namespace slra {

enum class TruncationPolicy { every_iteration, never };
enum class StopRule { fixed_iters, residual_tol };

struct RefineConfig {
  Index rho = 20;
  int max_iters = 3;
  MultiplierKind multiplier = MultiplierKind::abridged_hadamard;
  int depth = 3;
  TruncationPolicy truncation = TruncationPolicy::every_iteration;
  StopRule stop = StopRule::fixed_iters;
  /// residual_tol: stop once the probe value is <= tol * (probe value of iteration 1).
  double tol = 1e-8;
  int probes = 8;
  RecompressMethod recompress_method = RecompressMethod::svd;
  std::uint64_t seed = 0;

  void validate(Index m, Index n) const {
    if (rho < 1) throw PreconditionError("RefineConfig: rho must be >= 1");
    if (max_iters < 1) throw PreconditionError("RefineConfig: max_iters must be >= 1");
    if (probes < 1) throw PreconditionError("RefineConfig: probes must be >= 1");
    // Iterations after the first sketch with r = 2 rho and F has 2r rows.
    const Index r_max = max_iters > 1 ? 2 * rho : rho;
    if (2 * r_max > std::min(m, n))
      throw PreconditionError("RefineConfig: 2 * " + std::to_string(r_max) +
                              " exceeds min(m, n) = " + std::to_string(std::min(m, n)));
    if (multiplier == MultiplierKind::abridged_hadamard) {
      if (depth < 0 || depth > 30) throw PreconditionError("RefineConfig: depth out of range");
      const Index fan = Index{1} << depth;
      if (m % fan != 0 || n % fan != 0)
        throw PreconditionError("RefineConfig: dimensions must be divisible by 2^depth = " +
                                std::to_string(fan));
    }
  }
};

/// Seeds of the two test matrices drawn at iteration `iter` (1-based).
inline std::uint64_t iteration_seed(std::uint64_t master, int iter, Side side) {
  return derive_seed(master, 2 * static_cast<std::uint64_t>(iter) + (side == Side::right ? 1 : 0));
}

struct IterationRecord {
  int iter = 0;
  Index sketch_rank = 0;   // r_i
  Index rank_before = 0;   // rank of M~ + Delta
  Index rank_after = 0;    // after re-compression
  std::optional<double> ratio_before;
  std::optional<double> ratio_after;
  std::optional<double> residual_probe;
  /// Cumulative counters of the accessor at the end of the iteration.
  std::uint64_t distinct_accesses = 0;
  std::uint64_t total_reads = 0;
  bool pinv_truncated = false;
};

enum class RefineStatus { success, failure };

struct RefinementReport {
  RefineConfig config;
  std::vector<IterationRecord> iterations;
  Index final_rank = 0;
  std::uint64_t total_distinct = 0;
  std::uint64_t total_reads = 0;
  double wall_seconds = 0.0;
  RefineStatus status = RefineStatus::success;
};

struct SketchApprox {
  Factored2 delta;
  /// T was rank deficient and its pseudo-inverse dropped singular values.
  bool pinv_truncated = false;
};

/// Rank-r approximation of E from F E (2r x n) and E H (m x r).
///
/// Q = orth(E H); F Q = U T (thin QR); Delta = Q T^+ U^T (F E), returned as
/// A = Q and B = T^+ U^T (F E).
inline SketchApprox sketch_rank_r_approx(const DenseMatrix& fe, const DenseMatrix& eh,
                                         const SketchOperator& f) {
  const Index m = eh.rows();
  const Index r = eh.cols();
  if (f.side() != Side::left || f.cols() != m || f.rows() != fe.rows())
    throw DimensionError("sketch_rank_r_approx: F does not match the sketches");
  if (r > m || fe.rows() < r)
    throw DimensionError("sketch_rank_r_approx: sketch sizes inconsistent");

  Eigen::HouseholderQR<DenseMatrix> qr_eh(eh);
  DenseMatrix q = qr_eh.householderQ() * DenseMatrix::Identity(m, r);

  const DenseMatrix fq = apply_left(f, q);
  Eigen::HouseholderQR<DenseMatrix> qr_fq(fq);
  const DenseMatrix u = qr_fq.householderQ() * DenseMatrix::Identity(fq.rows(), r);
  const DenseMatrix t = qr_fq.matrixQR().topRows(r).triangularView<Eigen::Upper>();

  bool truncated = false;
  const DenseMatrix t_pinv = pseudo_inverse(t, 1e-12, &truncated);
  DenseMatrix b = t_pinv * (u.transpose() * fe);
  return {Factored2(std::move(q), std::move(b)), truncated};
}

/// r_i = rank(M~^(i)) + rho.
inline Index rank_schedule(int /*iter*/, Index current_rank, Index rho) { return current_rank + rho; }

/// Optional evaluation hook, called with each iterate outside the counted
/// region (it must not read the accessor).
using LraEvaluator = std::function<double(const Factored2&)>;

struct RefineResult {
  Factored2 lra;
  RefinementReport report;
};

inline RefineResult refine(CountingAccessor& m, const RefineConfig& cfg,
                           const LraEvaluator& evaluate = {}) {
  const auto start = std::chrono::steady_clock::now();
  const Index rows = m.rows();
  const Index cols = m.cols();
  cfg.validate(rows, cols);

  RefinementReport report;
  report.config = cfg;
  Factored2 current = Factored2::zero(rows, cols);
  std::optional<double> first_probe;
  bool stopped = false;

  auto require_untouched = [&](std::uint64_t reads, const char* where) {
    if (m.total_reads() != reads)
      throw std::logic_error(std::string("refine: input read outside sketching (") + where + ")");
  };

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    IterationRecord rec;
    rec.iter = iter;
    const Index r = rank_schedule(iter - 1, current.rank(), cfg.rho);
    rec.sketch_rank = r;
    if (2 * r > std::min(rows, cols))
      throw PreconditionError("refine: sketch rank " + std::to_string(r) +
                              " too large for the input; enable truncation or lower max_iters");

    const auto f = make_multiplier(cfg.multiplier, Side::left, 2 * r, rows, cfg.depth,
                                   iteration_seed(cfg.seed, iter, Side::left));
    const auto h = make_multiplier(cfg.multiplier, Side::right, r, cols, cfg.depth,
                                   iteration_seed(cfg.seed, iter, Side::right));

    // The only raw reads of M.
    const DenseMatrix fm = apply_left(f, m);
    const DenseMatrix mh = apply_right(m, h);
    const std::uint64_t reads = m.total_reads();

    const DenseMatrix fe = fm - apply_to_factored(f, current);
    const DenseMatrix eh = mh - apply_to_factored(current, h);
    auto sub = sketch_rank_r_approx(fe, eh, f);
    rec.pinv_truncated = sub.pinv_truncated;

    const Factored2 previous = current;
    Factored2 sum = lra_sum(current, sub.delta);
    rec.rank_before = sum.rank();
    if (evaluate) rec.ratio_before = evaluate(sum);

    if (cfg.truncation == TruncationPolicy::every_iteration && sum.rank() > cfg.rho) {
      current = recompress(sum, cfg.rho, cfg.recompress_method);
      rec.rank_after = current.rank();
      if (evaluate) rec.ratio_after = evaluate(current);
    } else {
      current = std::move(sum);
      rec.rank_after = current.rank();
      rec.ratio_after = rec.ratio_before;
    }

    if (cfg.stop == StopRule::residual_tol) {
      const double probe =
          residual_probe(previous, current, cfg.probes, derive_seed(cfg.seed, 1000 + iter));
      rec.residual_probe = probe;
      if (!first_probe) first_probe = probe;
      else if (probe <= cfg.tol * *first_probe) stopped = true;
    }
    require_untouched(reads, "iteration bookkeeping");

    rec.distinct_accesses = m.distinct();
    rec.total_reads = m.total_reads();
    report.iterations.push_back(rec);
    if (stopped) break;
  }

  report.final_rank = current.rank();
  report.total_distinct = m.distinct();
  report.total_reads = m.total_reads();
  report.status = cfg.stop == StopRule::residual_tol && !stopped ? RefineStatus::failure
                                                                  : RefineStatus::success;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(current), std::move(report)};
}

namespace detail {
inline std::string opt_value(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os.precision(10);
  os << std::scientific << *v;
  return os.str();
}
}  // namespace detail

/// One row per iteration: iter, ratio_before, ratio_after, rank, distinct_accesses, total_reads.
inline std::string report_csv(const RefinementReport& r) {
  std::ostringstream os;
  os << "iter,ratio_before,ratio_after,rank,distinct_accesses,total_reads\n";
  for (const auto& it : r.iterations)
    os << it.iter << ',' << detail::opt_value(it.ratio_before) << ','
       << detail::opt_value(it.ratio_after) << ',' << it.rank_after << ',' << it.distinct_accesses
       << ',' << it.total_reads << '\n';
  return os.str();
}

inline std::string report_summary(const RefinementReport& r) {
  std::ostringstream os;
  const auto& c = r.config;
  os << "refine rho=" << c.rho << " multiplier=" << to_string(c.multiplier) << " depth=" << c.depth
     << " iters=" << r.iterations.size() << "/" << c.max_iters << " seed=" << c.seed << '\n';
  for (const auto& it : r.iterations) {
    os << "  iter " << it.iter << ": r=" << it.sketch_rank << " rank " << it.rank_before << " -> "
       << it.rank_after;
    if (it.ratio_before) os << "  ratio before " << detail::opt_value(it.ratio_before);
    if (it.ratio_after) os << " after " << detail::opt_value(it.ratio_after);
    if (it.residual_probe) os << "  probe " << detail::opt_value(it.residual_probe);
    os << "  distinct " << it.distinct_accesses << '\n';
  }
  os << "status " << (r.status == RefineStatus::success ? "SUCCESS" : "FAILURE") << ", final rank "
     << r.final_rank << ", distinct accesses " << r.total_distinct << ", reads " << r.total_reads
     << ", " << r.wall_seconds << " s\n";
  return os.str();
}

}  // namespace slra
