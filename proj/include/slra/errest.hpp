#pragma once

// Sublinear-cost a posteriori error estimates for an LRA error matrix E.
// None of these can be reliable for every input: a single large entry that
// is never sampled goes unnoticed (see the audit command).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>

#include "slra/accessor.hpp"
#include "slra/core.hpp"
#include "slra/error.hpp"
#include "slra/random.hpp"
#include "slra/sketch.hpp"

namespace slra {

struct ErrorEstimate {
  double lower_bound = 0.0;
  std::optional<double> upper_bound;
  /// Point estimate of the norm, for estimators that produce one.
  std::optional<double> estimate;
  std::optional<double> confidence;
  std::string method;
  std::uint64_t sample_size = 0;
};

/// max |e_ij| over `sample_count` distinct uniformly drawn entries; a lower
/// bound on both the spectral and the Frobenius norm.
inline ErrorEstimate entry_lower_bound(CountingAccessor& e, std::uint64_t sample_count,
                                       std::uint64_t seed) {
  const Index m = e.rows();
  const Index total = m * e.cols();
  if (sample_count > static_cast<std::uint64_t>(total))
    throw PreconditionError("entry_lower_bound: more samples than entries");
  Rng rng(seed);
  const auto picks = rng.sample_without_replacement(total, static_cast<Index>(sample_count));
  double best = 0.0;
  for (Index flat : picks) best = std::max(best, std::abs(e(flat % m, flat / m)));
  ErrorEstimate out;
  out.lower_bound = best;
  out.method = "entry_max";
  out.sample_size = sample_count;
  return out;
}

/// Sketches of E that are available; any subset may be given.
struct ErrorSketches {
  std::optional<DenseMatrix> fe;   // F E
  std::optional<DenseMatrix> eh;   // E H
  std::optional<DenseMatrix> feh;  // F E H
};

inline double operator_norm(const SketchOperator& op, NormKind kind) {
  return norm(op.dense(), kind);
}

/// Largest of |||FE|||/||F||, |||EH|||/||H||, |||FEH|||/(||F|| ||H||) with
/// ||.|| spectral; each is a lower bound on |||E||| since |||XY||| <= ||X|| |||Y|||
/// for both the spectral and the Frobenius norm.
inline ErrorEstimate sketch_norm_bounds(const ErrorSketches& s, const SketchOperator* f,
                                        const SketchOperator* h, NormKind kind) {
  const bool need_f = s.fe || s.feh;
  const bool need_h = s.eh || s.feh;
  if ((need_f && !f) || (need_h && !h))
    throw PreconditionError("sketch_norm_bounds: missing test matrix for a given sketch");
  if (f && f->side() != Side::left) throw DimensionError("sketch_norm_bounds: F must be left-sided");
  if (h && h->side() != Side::right) throw DimensionError("sketch_norm_bounds: H must be right-sided");
  if (s.fe && s.fe->rows() != f->rows()) throw DimensionError("sketch_norm_bounds: FE rows differ from F");
  if (s.eh && s.eh->cols() != h->cols()) throw DimensionError("sketch_norm_bounds: EH cols differ from H");
  if (s.feh && (s.feh->rows() != f->rows() || s.feh->cols() != h->cols()))
    throw DimensionError("sketch_norm_bounds: FEH shape differs from F, H");
  if (s.fe && s.eh && s.fe->cols() != h->rows())
    throw DimensionError("sketch_norm_bounds: FE and H disagree on n");

  const double nf = need_f ? operator_norm(*f, NormKind::spectral) : 1.0;
  const double nh = need_h ? operator_norm(*h, NormKind::spectral) : 1.0;
  auto sketch_norm = [&](const DenseMatrix& x) { return x.size() == 0 ? 0.0 : norm(x, kind); };

  double best = 0.0;
  if (s.fe && nf > 0) best = std::max(best, sketch_norm(*s.fe) / nf);
  if (s.eh && nh > 0) best = std::max(best, sketch_norm(*s.eh) / nh);
  if (s.feh && nf > 0 && nh > 0) best = std::max(best, sketch_norm(*s.feh) / (nf * nh));

  ErrorEstimate out;
  out.lower_bound = best;
  out.method = kind == NormKind::spectral ? "sketch_ratio_spectral" : "sketch_ratio_frobenius";
  return out;
}

/// Frobenius-norm estimate of E under the model "entries are i.i.d. draws of
/// one Gaussian variable", from a random q x s submatrix (K = q s entries).
///
/// With mu_K = mean |g| and sigma_K^2 = mean (|g| - mu_K)^2 the sample second
/// moment is sigma_K^2 + mu_K^2, so ||E||_F ~= sqrt(m n (sigma_K^2 + mu_K^2)).
/// The interval treats K * (second moment) / sigma^2 as chi-square with K
/// degrees of freedom (zero-mean model).
inline ErrorEstimate gaussian_error_estimate(CountingAccessor& e, Index q, Index s,
                                             std::uint64_t seed, double confidence = 0.95) {
  if (q < 1 || s < 1 || q > e.rows() || s > e.cols())
    throw DimensionError("gaussian_error_estimate: submatrix shape out of range");
  if (q * s < 100)
    throw PreconditionError("gaussian_error_estimate: q * s = " + std::to_string(q * s) +
                            " < 100 entries");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw PreconditionError("gaussian_error_estimate: confidence must lie in (0, 1)");

  Rng rng(seed);
  const auto rows = rng.sample_without_replacement(e.rows(), q);
  const auto cols = rng.sample_without_replacement(e.cols(), s);
  const auto count = static_cast<double>(q * s);

  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(q * s));
  for (Index j : cols)
    for (Index i : rows) g.push_back(std::abs(e(i, j)));
  double mu = 0.0;
  for (double x : g) mu += x;
  mu /= count;
  double var = 0.0;
  for (double x : g) var += (x - mu) * (x - mu);
  var /= count;

  const double cells = static_cast<double>(e.rows()) * static_cast<double>(e.cols());
  const double second_moment = var + mu * mu;

  ErrorEstimate out;
  out.estimate = std::sqrt(cells * second_moment);
  const boost::math::chi_squared chi(count);
  const double alpha = 1.0 - confidence;
  const double hi_q = boost::math::quantile(chi, 1.0 - alpha / 2.0);
  const double lo_q = boost::math::quantile(chi, alpha / 2.0);
  out.lower_bound = std::sqrt(cells * count * second_moment / hi_q);
  out.upper_bound = std::sqrt(cells * count * second_moment / lo_q);
  out.confidence = confidence;
  out.method = "gaussian_variance";
  out.sample_size = static_cast<std::uint64_t>(q * s);
  return out;
}

enum class ProbeMode { gaussian, coordinate };

/// max over probe pairs (f, h) of |f^T (cur - prev) h|, evaluated through the
/// factors in O((m + n) k) per pair. Gaussian probes are normalized to unit
/// length; coordinate probes use (e_p, e_p) for p = 0, 1, ...
inline double residual_probe(const Factored2& prev, const Factored2& cur, int probe_count,
                             std::uint64_t seed, ProbeMode mode = ProbeMode::gaussian) {
  if (prev.rows() != cur.rows() || prev.cols() != cur.cols())
    throw DimensionError("residual_probe: shapes differ");
  if (probe_count < 1) throw PreconditionError("residual_probe: need at least one probe");
  const Index m = cur.rows();
  const Index n = cur.cols();
  Rng rng(seed);

  auto bilinear = [](const Factored2& l, const Vector& f, const Vector& h) {
    if (l.rank() == 0) return 0.0;
    return (l.A.transpose() * f).dot(l.B * h);
  };

  double best = 0.0;
  for (int p = 0; p < probe_count; ++p) {
    Vector f, h;
    if (mode == ProbeMode::gaussian) {
      f = rng.gaussian_vector(m);
      h = rng.gaussian_vector(n);
      f.normalize();
      h.normalize();
    } else {
      f = Vector::Zero(m);
      h = Vector::Zero(n);
      f(p % m) = 1.0;
      h(p % n) = 1.0;
    }
    best = std::max(best, std::abs(bilinear(cur, f, h) - bilinear(prev, f, h)));
  }
  return best;
}

}  // namespace slra
