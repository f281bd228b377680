// slra: command-line front end for generation, refinement, benchmarking,
// error estimation, CUR conversion and the unread-entry audit.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "slra/slra.hpp"

namespace {

using slra::Index;

constexpr int kExitPrecondition = 2;
constexpr int kExitIo = 3;

struct InputOptions {
  std::string kind;  // fast | slow
  std::string path;
  Index n = 1024;
  Index pad = 0;
  std::uint64_t input_seed = 1;

  slra::InputDescriptor descriptor() const {
    slra::InputDescriptor d;
    if (!path.empty()) {
      d.path = path;
      d.pad = pad;
      return d;
    }
    d.synthetic = kind == "slow" ? slra::SpectrumKind::slow_decay : slra::SpectrumKind::fast_decay;
    d.n = n;
    d.seed = input_seed;
    return d;
  }
};

void add_input_options(CLI::App* cmd, InputOptions& in) {
  cmd->add_option("--input", in.path, "Matrix Market input file");
  cmd->add_option("--pad", in.pad, "Zero-pad a file input to this square size");
  cmd->add_option("--kind", in.kind, "Synthetic spectrum when no file is given")
      ->check(CLI::IsMember({"fast", "slow"}));
  cmd->add_option("--n", in.n, "Synthetic input size (power of two >= 128)");
  cmd->add_option("--input-seed", in.input_seed, "Seed of the synthetic input");
}

const std::map<std::string, slra::MultiplierKind> kMultipliers{
    {"ahad", slra::MultiplierKind::abridged_hadamard}, {"gaussian", slra::MultiplierKind::gaussian}};

/// Writes to `path`, or stdout when empty or "-".
void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw slra::IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw slra::IoError("write to '" + path + "' failed");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sublinear-cost low-rank approximation by sketching and iterative refinement"};
  app.require_subcommand(1);

  // gen ---------------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "Generate a synthetic or delta matrix, or pad a file");
  InputOptions gen_in;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  std::optional<Index> delta_i, delta_j;
  add_input_options(gen, gen_in);
  gen->add_option("--seed", gen_seed, "Seed of the synthetic input");
  gen->add_option("--delta-row", delta_i, "Emit Delta_{i,j} (1-based) of size n x n instead");
  gen->add_option("--delta-col", delta_j, "Column of the delta matrix (1-based)");
  gen->add_option("--out", gen_out, "Output .mtx path")->required();

  // spectra -----------------------------------------------------------------
  auto* spec_cmd = app.add_subcommand("spectra", "Leading singular values as CSV");
  InputOptions sp_in;
  Index sp_top = 50;
  std::string sp_out;
  add_input_options(spec_cmd, sp_in);
  spec_cmd->add_option("--top", sp_top, "Number of singular values");
  spec_cmd->add_option("--out", sp_out, "CSV output path (default stdout)");

  // refine ------------------------------------------------------------------
  auto* ref = app.add_subcommand("refine", "Run the sketch-based refinement on one input");
  InputOptions ref_in;
  slra::RefineConfig ref_cfg;
  ref_cfg.seed = 2021;
  std::string ref_mult = "ahad", ref_stop = "fixed", ref_out, ref_lra_out;
  bool ref_no_trunc = false, ref_eval = false;
  add_input_options(ref, ref_in);
  ref->add_option("--rho", ref_cfg.rho, "Target rank");
  ref->add_option("--depth", ref_cfg.depth, "Abridged Hadamard recursion depth");
  ref->add_option("--multiplier", ref_mult, "Test matrix kind")->check(CLI::IsMember({"ahad", "gaussian"}));
  ref->add_option("--iters", ref_cfg.max_iters, "Maximum iterations");
  ref->add_option("--seed", ref_cfg.seed, "Master seed of the test matrices");
  ref->add_option("--stop", ref_stop, "Stopping rule")->check(CLI::IsMember({"fixed", "residual"}));
  ref->add_option("--tol", ref_cfg.tol, "Relative probe tolerance for --stop residual");
  ref->add_option("--probes", ref_cfg.probes, "Probe pairs for --stop residual");
  ref->add_flag("--no-truncate", ref_no_trunc, "Keep the rank-growing sums");
  ref->add_flag("--eval", ref_eval, "Report error ratios (reads M outside the counted region)");
  ref->add_option("--out", ref_out, "Per-iteration CSV path (default stdout)");
  ref->add_option("--lra-out", ref_lra_out, "Write the final approximation as .mtx");

  // bench -------------------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "Mean error ratios over repeated refinements");
  std::vector<std::string> bench_inputs;
  std::vector<std::string> bench_mults{"ahad", "gaussian"};
  slra::BenchSpec bench_spec;
  Index bench_n = 1024, bench_pad = 0;
  std::uint64_t bench_input_seed = 1;
  bool bench_quick = false;
  std::string bench_out;
  bench->add_option("--input", bench_inputs, "Matrix Market inputs (default: fast and slow synthetic)");
  bench->add_option("--pad", bench_pad, "Zero-pad file inputs to this square size");
  bench->add_option("--n", bench_n, "Synthetic input size");
  bench->add_option("--input-seed", bench_input_seed, "Seed of the synthetic inputs");
  bench->add_option("--multiplier", bench_mults, "Multiplier kinds")
      ->check(CLI::IsMember({"ahad", "gaussian"}));
  bench->add_option("--rho", bench_spec.rho, "Target rank");
  bench->add_option("--depth", bench_spec.depth, "Abridged Hadamard recursion depth");
  bench->add_option("--trials", bench_spec.trials, "Trials per row");
  bench->add_option("--iters", bench_spec.iterations, "Iterations per trial");
  bench->add_option("--seed", bench_spec.seed, "Master seed");
  bench->add_flag("--quick", bench_quick, "20 trials per row");
  bench->add_option("--out", bench_out, "CSV output path (default stdout)");

  // estimate ----------------------------------------------------------------
  auto* est = app.add_subcommand("estimate", "A posteriori norm estimates of an error matrix");
  std::string est_input, est_approx, est_method = "gaussian", est_csv;
  Index est_q = 10, est_s = 10;
  std::uint64_t est_samples = 100, est_seed = 1;
  double est_conf = 0.95;
  est->add_option("--input", est_input, "Matrix Market file holding M (or E)")->required();
  est->add_option("--approx", est_approx, "Optional approximation; E = input - approx");
  est->add_option("--method", est_method, "Estimator")->check(CLI::IsMember({"gaussian", "entry"}));
  est->add_option("--q", est_q, "Sampled rows (gaussian)");
  est->add_option("--s", est_s, "Sampled columns (gaussian)");
  est->add_option("--samples", est_samples, "Sampled entries (entry)");
  est->add_option("--confidence", est_conf, "Interval level (gaussian)");
  est->add_option("--seed", est_seed, "Sampling seed");
  est->add_option("--csv", est_csv, "Also write a one-row CSV");

  // cur ---------------------------------------------------------------------
  auto* cur = app.add_subcommand("cur", "CUR decomposition of the rank-rho truncation");
  InputOptions cur_in;
  Index cur_rho = 20;
  std::optional<Index> cur_k, cur_l;
  double cur_h = 1.1;
  std::string cur_prefix;
  add_input_options(cur, cur_in);
  cur->add_option("--rho", cur_rho, "Rank");
  cur->add_option("--k", cur_k, "Selected rows (default rho)");
  cur->add_option("--l", cur_l, "Selected columns (default rho)");
  cur->add_option("--hparam", cur_h, "Selection parameter of the reported bound");
  cur->add_option("--out", cur_prefix, "Prefix for <prefix>_C.mtx, _N.mtx, _R.mtx")->required();

  // audit -------------------------------------------------------------------
  auto* aud = app.add_subcommand("audit", "Find an unread entry and compare outputs on O and Delta");
  Index aud_n = 1024;
  std::optional<Index> aud_m;
  slra::RefineConfig aud_cfg;
  aud_cfg.rho = 4;
  aud_cfg.seed = 2021;
  std::string aud_pipeline = "refine", aud_mult = "ahad";
  aud->add_option("--n", aud_n, "Columns (and rows unless --m is given)");
  aud->add_option("--m", aud_m, "Rows");
  aud->add_option("--rho", aud_cfg.rho, "Target rank");
  aud->add_option("--depth", aud_cfg.depth, "Abridged Hadamard recursion depth");
  aud->add_option("--multiplier", aud_mult, "Test matrix kind")->check(CLI::IsMember({"ahad", "gaussian"}));
  aud->add_option("--iters", aud_cfg.max_iters, "Iterations");
  aud->add_option("--seed", aud_cfg.seed, "Master seed");
  aud->add_option("--pipeline", aud_pipeline, "Pipeline under audit")
      ->check(CLI::IsMember({"refine", "full"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitPrecondition;
  }

  try {
    if (*gen) {
      slra::DenseMatrix m;
      if (delta_i || delta_j) {
        if (!delta_i || !delta_j) throw slra::PreconditionError("gen: give both --delta-row and --delta-col");
        m = slra::gen_delta(gen_in.n, gen_in.n, *delta_i, *delta_j);
      } else {
        gen_in.input_seed = gen_seed;
        m = slra::load_input(gen_in.descriptor());
      }
      slra::save_matrix(m, gen_out);
      std::cerr << "wrote " << m.rows() << " x " << m.cols() << " to " << gen_out << '\n';
    } else if (*spec_cmd) {
      const auto m = slra::load_input(sp_in.descriptor());
      emit(slra::spectra_csv(slra::spectra(m, sp_top)), sp_out);
    } else if (*ref) {
      const auto m = slra::load_input(ref_in.descriptor());
      ref_cfg.multiplier = kMultipliers.at(ref_mult);
      ref_cfg.stop = ref_stop == "residual" ? slra::StopRule::residual_tol : slra::StopRule::fixed_iters;
      if (ref_no_trunc) ref_cfg.truncation = slra::TruncationPolicy::never;
      std::optional<slra::ErrorRatioOracle> oracle;
      slra::LraEvaluator eval;
      if (ref_eval) {
        oracle.emplace(m, ref_cfg.rho);
        eval = [&](const slra::Factored2& l) { return oracle->ratio(l).value; };
      }
      slra::CountingAccessor acc(m);
      const auto result = slra::refine(acc, ref_cfg, eval);
      std::cerr << slra::report_summary(result.report);
      emit(slra::report_csv(result.report), ref_out);
      if (!ref_lra_out.empty()) slra::save_matrix(slra::materialize(result.lra), ref_lra_out);
      if (result.report.status == slra::RefineStatus::failure) return 1;
    } else if (*bench) {
      if (bench_quick) bench_spec.trials = 20;
      bench_spec.multipliers.clear();
      for (const auto& k : bench_mults) bench_spec.multipliers.push_back(kMultipliers.at(k));
      if (bench_inputs.empty()) {
        for (auto kind : {slra::SpectrumKind::fast_decay, slra::SpectrumKind::slow_decay}) {
          slra::InputDescriptor d;
          d.synthetic = kind;
          d.n = bench_n;
          d.seed = bench_input_seed;
          bench_spec.inputs.push_back(d);
        }
      } else {
        for (const auto& p : bench_inputs) {
          slra::InputDescriptor d;
          d.path = p;
          d.pad = bench_pad;
          bench_spec.inputs.push_back(d);
        }
      }
      const auto rows = slra::run_bench(bench_spec);
      for (const auto& r : rows)
        std::cerr << r.input << " / " << slra::to_string(r.multiplier) << ": " << r.trials
                  << " trials in " << fmt(r.seconds) << " s\n";
      emit(slra::bench_csv(rows, bench_spec), bench_out);
    } else if (*est) {
      slra::DenseMatrix e = slra::load_matrix(est_input);
      if (!est_approx.empty()) {
        const auto a = slra::load_matrix(est_approx);
        if (a.rows() != e.rows() || a.cols() != e.cols())
          throw slra::DimensionError("estimate: --approx shape differs from --input");
        e -= a;
      }
      slra::CountingAccessor acc(e);
      const auto r = est_method == "gaussian" ? slra::gaussian_error_estimate(acc, est_q, est_s, est_seed, est_conf)
                                              : slra::entry_lower_bound(acc, est_samples, est_seed);
      std::cout << "method " << r.method << '\n'
                << "sample_size " << r.sample_size << '\n'
                << "distinct_accesses " << acc.distinct() << '\n'
                << "lower_bound " << fmt(r.lower_bound) << '\n';
      if (r.estimate) std::cout << "estimate " << fmt(*r.estimate) << '\n';
      if (r.upper_bound) std::cout << "upper_bound " << fmt(*r.upper_bound) << '\n';
      if (r.confidence) std::cout << "confidence " << fmt(*r.confidence) << '\n';
      if (!est_csv.empty()) {
        std::ostringstream os;
        os << "method,sample_size,lower_bound,estimate,upper_bound,confidence\n"
           << r.method << ',' << r.sample_size << ',' << fmt(r.lower_bound) << ','
           << (r.estimate ? fmt(*r.estimate) : "") << ',' << (r.upper_bound ? fmt(*r.upper_bound) : "")
           << ',' << (r.confidence ? fmt(*r.confidence) : "") << '\n';
        emit(os.str(), est_csv);
      }
    } else if (*cur) {
      const auto m = slra::load_input(cur_in.descriptor());
      const Index k = cur_k.value_or(cur_rho);
      const Index l = cur_l.value_or(cur_rho);
      const auto svd = slra::truncate_svd(m, cur_rho);
      const auto d = slra::svd_to_cur(svd, k, l);
      slra::save_matrix(d.C, cur_prefix + "_C.mtx");
      slra::save_matrix(d.N, cur_prefix + "_N.mtx");
      slra::save_matrix(d.R, cur_prefix + "_R.mtx");
      const double sigma_rho = svd.sigma(cur_rho - 1);
      nlohmann::json j;
      j["rows"] = m.rows();
      j["cols"] = m.cols();
      j["rho"] = cur_rho;
      j["k"] = k;
      j["l"] = l;
      j["reconstruction_error_fro"] = (slra::materialize(svd) - slra::materialize(d)).norm();
      j["truncation_error_fro"] = (m - slra::materialize(d)).norm();
      j["nucleus_norm"] = slra::norm(d.N, slra::NormKind::spectral);
      j["nucleus_bound"] = slra::nucleus_norm_bound(m.rows(), m.cols(), cur_rho, cur_h, 1, sigma_rho);
      j["bound_kind"] = "heuristic, a=1 with slack";
      j["h"] = cur_h;
      std::cout << j.dump() << '\n';
    } else if (*aud) {
      const Index m = aud_m.value_or(aud_n);
      aud_cfg.multiplier = kMultipliers.at(aud_mult);
      const auto pipeline =
          aud_pipeline == "full" ? slra::full_pipeline(aud_cfg.rho) : slra::refine_pipeline(aud_cfg);
      const auto r = slra::audit(m, aud_n, pipeline);
      std::cout << slra::audit_summary(r);
    }
  } catch (const slra::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const slra::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPrecondition;
  }
  return 0;
}
