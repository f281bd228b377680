#pragma once

// Experiment harness: repeated refinement runs with mean error ratios per
// iteration, spectra export, and the delta-matrix audit of sublinear
// pipelines.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "slra/accessor.hpp"
#include "slra/core.hpp"
#include "slra/lanczos.hpp"
#include "slra/matgen.hpp"
#include "slra/matrix_market.hpp"
#include "slra/refine.hpp"

namespace slra {

/// Bump when the column layout of bench_csv changes.
inline constexpr int kBenchCsvVersion = 1;

struct InputDescriptor {
  // Either a synthetic spectrum or a Matrix Market file.
  std::optional<SpectrumKind> synthetic;
  Index n = 1024;
  std::uint64_t seed = 1;
  std::string path;
  Index pad = 0;  // 0: no padding

  std::string label() const {
    if (synthetic) return to_string(*synthetic);
    return path;
  }
};

inline DenseMatrix load_input(const InputDescriptor& in) {
  if (in.synthetic) {
    const SpectrumSpec spec = *in.synthetic == SpectrumKind::fast_decay
                                  ? SpectrumSpec::fast_decay(in.n)
                                  : SpectrumSpec::slow_decay(in.n);
    return gen_synthetic(in.n, spec, in.seed);
  }
  if (in.path.empty()) throw PreconditionError("input descriptor names no synthetic kind or file");
  DenseMatrix m = load_matrix(in.path);
  if (in.pad > 0) m = pad_matrix(m, in.pad, in.pad);
  return m;
}

struct BenchSpec {
  std::vector<InputDescriptor> inputs;
  std::vector<MultiplierKind> multipliers{MultiplierKind::abridged_hadamard, MultiplierKind::gaussian};
  Index rho = 20;
  int depth = 3;
  int trials = 100;
  int iterations = 3;
  std::uint64_t seed = 2021;

  void validate() const {
    if (trials < 1) throw PreconditionError("BenchSpec: trials must be >= 1");
    if (iterations < 1) throw PreconditionError("BenchSpec: iterations must be >= 1");
    if (inputs.empty()) throw PreconditionError("BenchSpec: no inputs");
    if (multipliers.empty()) throw PreconditionError("BenchSpec: no multipliers");
  }
};

inline std::uint64_t trial_seed(std::uint64_t master, std::size_t input, MultiplierKind kind, int trial) {
  const auto k = static_cast<std::uint64_t>(kind == MultiplierKind::gaussian);
  return derive_seed(derive_seed(derive_seed(master, input), k), static_cast<std::uint64_t>(trial));
}

/// Running mean and standard error.
struct MeanAccumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  int count = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++count;
  }
  double mean() const { return count ? sum / count : 0.0; }
  double std_error() const {
    if (count < 2) return 0.0;
    const double mu = mean();
    const double var = std::max(0.0, (sum_sq - count * mu * mu) / (count - 1));
    return std::sqrt(var / count);
  }
};

/// One table row: mean ratios for one (input, multiplier) pair.
/// Column 0 is the first iteration; then before/after pairs for iterations 2...
struct BenchRow {
  std::string input;
  Index n = 0;
  std::uint64_t input_seed = 0;
  MultiplierKind multiplier = MultiplierKind::abridged_hadamard;
  int trials = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> columns;
  std::vector<MeanAccumulator> values;
  /// Frobenius norms e_i = ||M - M~^(i)||_F per trial (e_0 = ||M||_F).
  std::vector<std::vector<double>> frobenius_errors;
  bool degenerate = false;
  double seconds = 0.0;
};

inline std::vector<std::string> bench_columns(int iterations) {
  std::vector<std::string> cols{"itr1_ratio"};
  for (int i = 2; i <= iterations; ++i) {
    cols.push_back("itr" + std::to_string(i) + "_before");
    cols.push_back("itr" + std::to_string(i) + "_after");
  }
  return cols;
}

/// Runs `spec.trials` refinements of one input with one multiplier kind.
/// Ratios are evaluated outside the counted region and never touch the accessor.
inline BenchRow run_bench_row(const DenseMatrix& m, const ErrorRatioOracle& oracle,
                              const std::string& label, std::size_t input_index,
                              MultiplierKind kind, const BenchSpec& spec,
                              bool track_frobenius = false) {
  const auto start = std::chrono::steady_clock::now();
  BenchRow row;
  row.input = label;
  row.multiplier = kind;
  row.trials = spec.trials;
  row.seed = spec.seed;
  row.columns = bench_columns(spec.iterations);
  row.values.assign(row.columns.size(), {});

  for (int t = 0; t < spec.trials; ++t) {
    RefineConfig cfg;
    cfg.rho = spec.rho;
    cfg.max_iters = spec.iterations;
    cfg.multiplier = kind;
    cfg.depth = spec.depth;
    cfg.seed = trial_seed(spec.seed, input_index, kind, t);

    bool degenerate = false;
    std::vector<double> frob;  // one entry per evaluator call, in call order
    LraEvaluator eval = [&](const Factored2& l) {
      const ErrorRatio r = oracle.ratio(l);
      degenerate = degenerate || r.degenerate;
      if (track_frobenius) frob.push_back(oracle.frobenius_error(l));
      return r.value;
    };
    CountingAccessor acc(m);
    const auto result = refine(acc, cfg, eval);
    row.degenerate = row.degenerate || degenerate;

    const auto& its = result.report.iterations;
    row.values[0].add(*its[0].ratio_after);
    for (std::size_t i = 1; i < its.size(); ++i) {
      row.values[2 * i - 1].add(*its[i].ratio_before);
      row.values[2 * i].add(*its[i].ratio_after);
    }
    if (track_frobenius) {
      // Iterates after re-compression: call 0 for iteration 1, then every second call.
      std::vector<double> errs{m.norm()};
      std::size_t call = 0;
      for (std::size_t i = 0; i < its.size(); ++i) {
        const bool truncated = its[i].rank_before != its[i].rank_after;
        call += truncated ? 1 : 0;
        errs.push_back(frob.at(call));
        ++call;
      }
      row.frobenius_errors.push_back(std::move(errs));
    }
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

inline std::vector<BenchRow> run_bench(const BenchSpec& spec) {
  spec.validate();
  std::vector<BenchRow> rows;
  for (std::size_t i = 0; i < spec.inputs.size(); ++i) {
    const DenseMatrix m = load_input(spec.inputs[i]);
    const ErrorRatioOracle oracle(m, spec.rho);
    for (auto kind : spec.multipliers) {
      rows.push_back(run_bench_row(m, oracle, spec.inputs[i].label(), i, kind, spec));
      rows.back().n = m.rows();
      rows.back().input_seed = spec.inputs[i].synthetic ? spec.inputs[i].seed : 0;
    }
  }
  return rows;
}

inline std::string format_sci(double v) {
  std::ostringstream os;
  os.precision(4);
  os << std::scientific << v;
  return os.str();
}

/// RFC 4180 CSV, one row per (input, multiplier); a leading comment-free
/// header carries the schema version and configuration.
inline std::string bench_csv(const std::vector<BenchRow>& rows, const BenchSpec& spec) {
  std::ostringstream os;
  os << "schema_version,input,n,input_seed,multiplier,rho,depth,trials,iterations,seed,degenerate";
  const auto cols = bench_columns(spec.iterations);
  for (const auto& c : cols) os << ',' << c;
  os << '\n';
  for (const auto& r : rows) {
    std::string input = r.input;
    if (input.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char ch : input) {
        if (ch == '"') quoted += '"';
        quoted += ch;
      }
      input = quoted + "\"";
    }
    os << kBenchCsvVersion << ',' << input << ',' << r.n << ',' << r.input_seed << ','
       << to_string(r.multiplier) << ',' << spec.rho
       << ',' << spec.depth << ',' << r.trials << ',' << spec.iterations << ',' << r.seed << ','
       << (r.degenerate ? 1 : 0);
    for (const auto& v : r.values) os << ',' << format_sci(v.mean());
    os << '\n';
  }
  return os.str();
}

/// Leading singular values of M (full SVD).
inline Vector spectra(const DenseMatrix& m, Index top = 50) {
  const Vector s = singular_values(m);
  return s.head(std::min<Index>(top, s.size()));
}

inline std::string spectra_csv(const Vector& s) {
  std::ostringstream os;
  os << "index,sigma\n";
  os.precision(17);
  for (Index i = 0; i < s.size(); ++i) os << (i + 1) << ',' << s(i) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Audit: a deterministic pipeline that leaves some entry (i, j) unread must
// return the same output on O and on Delta_ij, so it errs by >= 1/2 on one.

/// A deterministic pipeline reading its input only through the accessor.
using Pipeline = std::function<DenseMatrix(CountingAccessor&)>;

inline Pipeline refine_pipeline(const RefineConfig& cfg) {
  return [cfg](CountingAccessor& acc) { return materialize(refine(acc, cfg).lra); };
}

/// Reads the whole input and returns its rho-truncation.
inline Pipeline full_pipeline(Index rho) {
  return [rho](CountingAccessor& acc) { return materialize(truncate_svd(acc.read_all(), rho)); };
}

struct AuditReport {
  bool superfast = false;  // some entry was never read on the zero input
  Index witness_row = -1;  // 0-based
  Index witness_col = -1;
  std::uint64_t distinct_accesses = 0;
  std::uint64_t entries = 0;
  double output_distance = 0.0;  // ||out(O) - out(Delta)||_F
  double error_on_zero = 0.0;    // ||O - out(O)||_2
  double error_on_delta = 0.0;   // ||Delta - out(Delta)||_2
};

inline AuditReport audit(Index m, Index n, const Pipeline& pipeline) {
  AuditReport rep;
  rep.entries = static_cast<std::uint64_t>(m * n);
  const DenseMatrix zero = DenseMatrix::Zero(m, n);
  CountingAccessor acc_zero(zero);
  const DenseMatrix out_zero = pipeline(acc_zero);
  rep.distinct_accesses = acc_zero.distinct();
  const auto witness = acc_zero.first_unaccessed();
  if (!witness) return rep;

  rep.superfast = true;
  rep.witness_row = witness->first;
  rep.witness_col = witness->second;
  const DenseMatrix delta = gen_delta(m, n, witness->first + 1, witness->second + 1);
  CountingAccessor acc_delta(delta);
  const DenseMatrix out_delta = pipeline(acc_delta);
  rep.output_distance = (out_zero - out_delta).norm();
  rep.error_on_zero = norm(zero - out_zero, NormKind::spectral);
  rep.error_on_delta = norm(delta - out_delta, NormKind::spectral);
  return rep;
}

inline std::string audit_summary(const AuditReport& r) {
  std::ostringstream os;
  if (!r.superfast) {
    os << "not superfast at this size: all " << r.entries << " entries were accessed\n";
    return os.str();
  }
  os.precision(6);
  os << "witness (" << r.witness_row + 1 << ", " << r.witness_col + 1 << ") never accessed\n"
     << "distinct accesses " << r.distinct_accesses << " of " << r.entries << " ("
     << 100.0 * static_cast<double>(r.distinct_accesses) / static_cast<double>(r.entries) << "%)\n"
     << "||out(O) - out(Delta)||_F = " << r.output_distance << '\n'
     << "||O - out(O)||_2 = " << r.error_on_zero << ", ||Delta - out(Delta)||_2 = "
     << r.error_on_delta << '\n'
     << "max error >= 1/2: " << (std::max(r.error_on_zero, r.error_on_delta) >= 0.5 ? "yes" : "no")
     << '\n';
  return os.str();
}

}  // namespace slra
