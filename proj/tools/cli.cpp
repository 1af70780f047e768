#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "plodd/analysis.hpp"
#include "plodd/cache.hpp"
#include "plodd/errors.hpp"
#include "plodd/filter.hpp"
#include "plodd/format.hpp"
#include "plodd/io.hpp"
#include "plodd/optimizer.hpp"
#include "plodd/oracle.hpp"

namespace plodd::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) parts.push_back(item);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

double parse_real(const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw UsageError("not a number: '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(value)) {
    throw UsageError("not a number: '" + text + "'");
  }
  return value;
}

int parse_int(const std::string& text) {
  const double value = parse_real(text);
  if (value != std::floor(value) || std::abs(value) > 1e9) {
    throw UsageError("not an integer: '" + text + "'");
  }
  return static_cast<int>(value);
}

struct SolverFlags {
  double tolerance = SolverOptions{}.tolerance;
  int max_iterations = SolverOptions{}.max_iterations;
  std::string cache_dir;
  bool no_cache = false;

  SolverOptions options() const {
    SolverOptions o;
    o.tolerance = tolerance;
    o.max_iterations = max_iterations;
    return o;
  }
};

void add_solver_flags(CLI::App* cmd, SolverFlags& flags) {
  cmd->add_option("--tol", flags.tolerance, "KKT residual tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", flags.max_iterations, "Newton iteration limit")->check(CLI::PositiveNumber);
  cmd->add_option("--cache-dir", flags.cache_dir, "Sequence cache directory (default: $PLODD_CACHE_DIR or ./plodd-cache)");
  cmd->add_flag("--no-cache", flags.no_cache, "Neither read nor write the cache");
}

// Cache-backed PLODD solve; cache rejections are reported on `err`.
OptimizedSequence solve_plodd(const PloddProblem& problem, const SolverFlags& flags,
                              std::ostream& err, bool* hit = nullptr) {
  if (flags.no_cache) {
    if (hit) *hit = false;
    return optimize_plodd(problem);
  }
  const SequenceCache cache(resolve_cache_dir(flags.cache_dir));
  CachedSolve solved = solve_cached(cache, problem);
  if (!solved.rejection.empty()) {
    err << "warning: ignoring cache entry " << solved.rejection << '\n';
  }
  if (hit) *hit = solved.hit;
  return std::move(solved.result);
}

void write_file(const std::string& path, const std::string& content) {
  std::filesystem::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(target.parent_path(), ec);
  }
  write_text_file_atomic(target, content);
}

void print_instants(std::ostream& out, const PulseSequence& seq) {
  for (double d : seq.instants()) out << format_fixed(d) << '\n';
}

// ---- generate ----------------------------------------------------------

struct GenerateArgs {
  std::string family;
  std::string parameter;
  std::string output;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  const Family family = parse_family(a.family);
  if (family == Family::Plodd || family == Family::Custom) {
    throw UsageError("generate supports udd, cpmg and cdd; use 'optimize' for plodd");
  }
  const int parameter = parse_int(a.parameter);
  if (family != Family::Cdd && parameter < 1) {
    throw UsageError(std::string(family_name(family)) + " needs n >= 1");
  }
  if (family == Family::Cdd && (parameter < 0 || parameter > 20)) {
    throw UsageError("cdd level must lie in [0, 20]");
  }
  const PulseSequence seq = make_family(family, parameter);
  const std::string path = a.output.empty()
                               ? std::string(family_name(family)) + "_" + std::to_string(parameter) + ".json"
                               : a.output;
  write_file(path, sequence_to_json(seq).dump(2) + "\n");
  print_instants(out, seq);
  return kOk;
}

// ---- optimize ----------------------------------------------------------

struct OptimizeArgs {
  int n = 0;
  double alpha = 0.0;
  std::string init = "auto";
  double from = 0.0;
  int steps = 8;
  std::string output;
  SolverFlags solver;
};

void print_optimized(std::ostream& out, const OptimizedSequence& r) {
  out << "I_n = " << format_scientific(r.prefactor.value) << '\n'
      << "kkt_residual = " << format_scientific(r.kkt.residual_norm) << '\n'
      << "iterations = " << r.kkt.iterations << '\n'
      << "instants:\n";
  print_instants(out, r.sequence);
}

int cmd_optimize(const OptimizeArgs& a, std::ostream& out, std::ostream& err) {
  if (a.n < 2 || a.n % 2 != 0) throw UsageError("--n must be even and >= 2");
  const SpectrumExponent ex(a.alpha);
  PloddProblem problem = plodd_problem(a.n, ex, a.solver.options());
  problem.init = parse_init(a.init);
  if (problem.init == InitStrategy::Warm) throw UsageError("--init warm needs a warm start; use --from");
  const std::string path = a.output.empty()
                               ? "plodd_n" + std::to_string(a.n) + "_a" + alpha_key(a.alpha) + ".json"
                               : a.output;
  try {
    OptimizedSequence result;
    bool hit = false;
    if (a.from > 0.0) {
      if (a.steps < 1) throw UsageError("--steps must be >= 1");
      result = continuation_path(a.n, a.from, a.alpha, a.steps, problem.options).back();
      if (!a.solver.no_cache) {
        SequenceCache(resolve_cache_dir(a.solver.cache_dir)).store(result, problem.options);
      }
    } else {
      result = solve_plodd(problem, a.solver, err, &hit);
    }
    if (!a.solver.no_cache) err << "cache: " << (hit ? "hit" : "miss") << '\n';
    Json j = optimized_to_json(result);
    j["converged"] = true;
    write_file(path, j.dump(2) + "\n");
    print_optimized(out, result);
    return kOk;
  } catch (const SolverFailure& e) {
    err << "error: " << e.what() << '\n';
    const KktState& best = e.best();
    try {
      const PulseSequence seq(expand_symmetric(best.deltas, a.n), {Family::Plodd, a.n, 0, a.alpha});
      Json j = sequence_to_json(seq);
      j["alpha"] = a.alpha;
      j["prefactor"] = prefactor_formula(seq.instants(), ex);
      j["kkt_residual"] = best.residual_norm;
      j["multipliers"] = best.multipliers;
      j["constraint_orders"] = best.constraint_orders;
      j["iterations"] = best.iterations;
      j["converged"] = false;
      j["warning"] = "solver did not converge; best iterate";
      write_file(path, j.dump(2) + "\n");
      err << "warning: best iterate written to " << path << '\n';
    } catch (const ValidationError&) {
      err << "warning: best iterate is not an ordered sequence; nothing written\n";
    }
    return kConvergence;
  }
}

// ---- evaluate ----------------------------------------------------------

struct EvaluateArgs {
  std::string source;
  std::string parameter;
  double alpha = 0.0;
  bool with_oracle = false;
  SolverFlags solver;
};

PulseSequence load_source(const EvaluateArgs& a, std::ostream& err) {
  const bool looks_like_file =
      a.source.find('/') != std::string::npos || a.source.ends_with(".json") ||
      std::filesystem::exists(a.source);
  if (looks_like_file) return sequence_from_json(read_json_file(a.source));
  const Family family = parse_family(a.source);
  if (a.parameter.empty()) throw UsageError("evaluate " + a.source + " needs a parameter");
  switch (family) {
    case Family::Udd:
    case Family::Cpmg:
    case Family::Cdd: return make_family(family, parse_int(a.parameter));
    case Family::Custom: {
      std::string body = a.parameter;
      body.erase(std::remove_if(body.begin(), body.end(),
                                [](char c) { return c == '[' || c == ']' || c == ' '; }),
                 body.end());
      std::vector<double> instants;
      if (!body.empty()) {
        for (const auto& part : split(body, ',')) instants.push_back(parse_real(part));
      }
      return make_custom(std::move(instants));
    }
    case Family::Plodd: {
      const int n = parse_int(a.parameter);
      if (n < 2 || n % 2 != 0) throw UsageError("plodd needs an even n >= 2");
      PloddProblem problem = plodd_problem(n, SpectrumExponent(a.alpha), a.solver.options());
      return solve_plodd(problem, a.solver, err).sequence;
    }
  }
  throw UsageError("unknown source " + a.source);
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  const SpectrumExponent ex(a.alpha);
  const PulseSequence seq = load_source(a, err);
  const PrefactorResult r = spectral_prefactor(seq, ex);
  out << "family = " << family_name(seq.family().family) << '\n'
      << "n = " << seq.size() << '\n'
      << "alpha = " << format_fixed(a.alpha) << '\n'
      << "I_n = " << format_scientific(r.value) << '\n'
      << "branch = " << branch_name(r.branch) << '\n'
      << "vanishing_order = " << r.m << '\n';
  if (a.with_oracle) {
    const QuadratureEstimate q = prefactor_quadrature(seq, ex);
    const DivergenceResidual d = divergence_residual(seq, ex);
    out << "quadrature = " << format_scientific(q.value) << '\n'
        << "error_bound = " << format_scientific(q.error_bound) << '\n'
        << "difference = " << format_scientific(std::abs(q.value - r.value)) << '\n'
        << "divergence_residual_max = " << format_scientific(d.max_abs) << '\n';
  }
  return kOk;
}

// ---- scan / regress / trend --------------------------------------------

std::vector<Family> parse_families(const std::string& text) {
  std::vector<Family> families;
  for (const auto& part : split(text, ',')) {
    if (part.empty()) continue;
    const Family f = parse_family(part);
    if (f == Family::Custom) throw UsageError("custom sequences cannot be scanned");
    families.push_back(f);
  }
  if (families.empty()) throw UsageError("no families given");
  return families;
}

PloddSolver cached_solver(const SolverFlags& flags, std::ostream& err) {
  return [&flags, &err](int n, const SpectrumExponent& ex) {
    return solve_plodd(plodd_problem(n, ex, flags.options()), flags, err);
  };
}

void report_failures(const ScanTable& table, std::ostream& err) {
  for (const auto& row : table.rows) {
    if (row.status == RowStatus::Failed) {
      err << "warning: " << family_name(row.family) << " n=" << row.n << ": " << row.error << '\n';
    }
  }
}

bool any_ok(const ScanTable& table) {
  return std::any_of(table.rows.begin(), table.rows.end(),
                     [](const ScanRow& r) { return r.status == RowStatus::Ok; });
}

std::vector<int> even_if_plodd(std::vector<int> n_values, std::span<const Family> families) {
  if (families.size() == 1 && families[0] == Family::Plodd) {
    std::erase_if(n_values, [](int n) { return n % 2 != 0; });
  }
  return n_values;
}

struct ScanArgs {
  double alpha = 0.0;
  std::string families = "udd,cpmg,cdd,plodd";
  std::string n_range;
  std::string output;
  SolverFlags solver;
};

void emit_csv(const std::string& path, const std::string& csv, std::ostream& out) {
  if (path.empty()) {
    out << csv;
  } else {
    write_file(path, csv);
  }
}

int cmd_scan(const ScanArgs& a, std::ostream& out, std::ostream& err) {
  const SpectrumExponent ex(a.alpha);
  const std::vector<Family> families = parse_families(a.families);
  const std::vector<int> n_values = parse_int_range(a.n_range);
  const ScanTable table = scan_prefactor(families, n_values, ex, cached_solver(a.solver, err));
  report_failures(table, err);
  std::ostringstream csv;
  write_scan_csv(csv, table);
  emit_csv(a.output, csv.str(), out);
  return any_ok(table) ? kOk : kConvergence;
}

struct RegressArgs {
  std::string family;
  double alpha = 0.0;
  std::string n_range = "4:30:2";
  std::string output;
  SolverFlags solver;
};

int cmd_regress(const RegressArgs& a, std::ostream& out, std::ostream& err) {
  const SpectrumExponent ex(a.alpha);
  const std::vector<Family> families{parse_family(a.family)};
  if (families[0] == Family::Custom) throw UsageError("custom sequences cannot be regressed");
  const std::vector<int> n_values = even_if_plodd(parse_int_range(a.n_range), families);
  const ScanTable table = scan_prefactor(families, n_values, ex, cached_solver(a.solver, err));
  report_failures(table, err);
  if (!a.output.empty()) {
    std::ostringstream csv;
    write_scan_csv(csv, table);
    write_file(a.output, csv.str());
  }
  if (!any_ok(table)) {
    err << "error: no row of the scan succeeded\n";
    return kConvergence;
  }
  const auto [lo, hi] = std::minmax_element(n_values.begin(), n_values.end());
  PowerLawFit fit;
  try {
    fit = fit_power_law(table, families[0], *lo, *hi);
  } catch (const InsufficientData& e) {
    err << "error: " << e.what() << '\n';
    return kConvergence;
  }
  out << "family = " << family_name(fit.family) << '\n'
      << "alpha = " << format_fixed(fit.alpha) << '\n'
      << "n_range = " << fit.n_min << ":" << fit.n_max << '\n'
      << "points = " << fit.points << '\n'
      << "a1 = " << format_fixed(fit.a1) << '\n'
      << "se_a1 = " << format_fixed(fit.se_a1) << '\n'
      << "a0 = " << format_fixed(fit.a0) << '\n'
      << "se_a0 = " << format_fixed(fit.se_a0) << '\n'
      << "r_squared = " << format_fixed(fit.r_squared) << '\n';
  if (fit.alpha != 1.0) out << "ln_C = " << format_fixed(fit.log_scaling_constant()) << '\n';
  return kOk;
}

struct TrendArgs {
  int n = 0;
  std::string alpha_range;
  std::string output;
  SolverFlags solver;
};

int cmd_trend(const TrendArgs& a, std::ostream& out, std::ostream& err) {
  if (a.n < 2 || a.n % 2 != 0) throw UsageError("--n must be even and >= 2");
  std::vector<double> grid = parse_real_range(a.alpha_range);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (double alpha : grid) (void)SpectrumExponent(alpha);
  const std::vector<TrendRow> rows = alpha_trend(a.n, grid, a.solver.options());
  std::ostringstream csv;
  write_trend_csv(csv, rows);
  emit_csv(a.output, csv.str(), out);
  std::ostream& summary = a.output.empty() ? err : out;
  if (rows.size() >= 3) {
    std::vector<double> x, y;
    for (const auto& r : rows) {
      x.push_back(r.alpha);
      y.push_back(r.ln_prefactor);
    }
    const LineFit fit = fit_line(x, y);
    summary << "ln_In_slope = " << format_fixed(fit.slope) << '\n'
            << "ln_In_r_squared = " << format_fixed(fit.r_squared) << '\n';
  }
  return kOk;
}

}  // namespace

std::vector<double> parse_real_range(const std::string& text) {
  if (text.empty()) throw UsageError("empty range");
  if (text.find(',') != std::string::npos) {
    std::vector<double> values;
    for (const auto& part : split(text, ',')) values.push_back(parse_real(part));
    return values;
  }
  const std::vector<std::string> parts = split(text, ':');
  if (parts.size() == 1) return {parse_real(parts[0])};
  if (parts.size() > 3) throw UsageError("range must be lo:hi or lo:hi:step: '" + text + "'");
  const double lo = parse_real(parts[0]);
  const double hi = parse_real(parts[1]);
  const double step = parts.size() == 3 ? parse_real(parts[2]) : 1.0;
  if (!(step > 0.0) || hi < lo) throw UsageError("range needs lo <= hi and step > 0: '" + text + "'");
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  if (count > 100000) throw UsageError("range has too many points: '" + text + "'");
  std::vector<double> values;
  for (long k = 0; k < count; ++k) values.push_back(lo + static_cast<double>(k) * step);
  return values;
}

std::vector<int> parse_int_range(const std::string& text) {
  std::vector<int> values;
  for (double v : parse_real_range(text)) {
    if (v != std::floor(v)) throw UsageError("integer range expected: '" + text + "'");
    values.push_back(static_cast<int>(v));
  }
  return values;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamical decoupling sequences optimized for power-law noise", "plodd"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a canonical sequence as JSON");
  generate->add_option("family", gen.family, "udd, cpmg or cdd")->required();
  generate->add_option("parameter", gen.parameter, "n for udd/cpmg, level for cdd")->required();
  generate->add_option("-o,--output", gen.output, "Output JSON file");

  OptimizeArgs opt;
  auto* optimize = app.add_subcommand("optimize", "Solve for the PLODD sequence");
  optimize->add_option("--n", opt.n, "Even pulse count")->required();
  optimize->add_option("--alpha", opt.alpha, "Spectrum exponent")->required();
  optimize->add_option("--init", opt.init, "auto, cpmg or udd");
  optimize->add_option("--from", opt.from, "Reach alpha by continuation from this exponent");
  optimize->add_option("--steps", opt.steps, "Continuation grid size");
  optimize->add_option("-o,--output", opt.output, "Output JSON file");
  add_solver_flags(optimize, opt.solver);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate the prefactor I_n of a sequence");
  evaluate->add_option("source", ev.source, "JSON file or family tag")->required();
  evaluate->add_option("parameter", ev.parameter, "n, level or instant list such as [0.5]");
  evaluate->add_option("--alpha", ev.alpha, "Spectrum exponent")->required();
  evaluate->add_flag("--with-oracle", ev.with_oracle, "Cross-check by quadrature");
  add_solver_flags(evaluate, ev.solver);

  ScanArgs sc;
  auto* scan = app.add_subcommand("scan", "Tabulate I_n over n for several families");
  scan->add_option("--alpha", sc.alpha, "Spectrum exponent")->required();
  scan->add_option("--families", sc.families, "Comma-separated family tags");
  scan->add_option("--n", sc.n_range, "n range lo:hi[:step]")->required();
  scan->add_option("-o,--output", sc.output, "CSV file (default: standard output)");
  add_solver_flags(scan, sc.solver);

  RegressArgs rg;
  auto* regress = app.add_subcommand("regress", "Fit ln I_n = a1 ln n + a0");
  regress->add_option("--family", rg.family, "Family tag")->required();
  regress->add_option("--alpha", rg.alpha, "Spectrum exponent")->required();
  regress->add_option("--n", rg.n_range, "n range lo:hi[:step]");
  regress->add_option("-o,--output", rg.output, "CSV file of the fitted rows");
  add_solver_flags(regress, rg.solver);

  TrendArgs tr;
  auto* trend = app.add_subcommand("trend", "PLODD gap to UDD and ln I_n over alpha");
  trend->add_option("--n", tr.n, "Even pulse count")->required();
  trend->add_option("--alpha", tr.alpha_range, "alpha range lo:hi[:step]")->required();
  trend->add_option("-o,--output", tr.output, "CSV file (default: standard output)");
  add_solver_flags(trend, tr.solver);

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("plodd");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen, out);
    if (optimize->parsed()) return cmd_optimize(opt, out, err);
    if (evaluate->parsed()) return cmd_evaluate(ev, out, err);
    if (scan->parsed()) return cmd_scan(sc, out, err);
    if (regress->parsed()) return cmd_regress(rg, out, err);
    if (trend->parsed()) return cmd_trend(tr, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  } catch (const DivergentIntegral& e) {
    err << e.what() << '\n';
    return kDivergent;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const NonConvergence& e) {
    err << "error: " << e.what() << '\n';
    return kConvergence;
  } catch (const OrderingViolation& e) {
    err << "error: " << e.what() << '\n';
    return kConvergence;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidExponent& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace plodd::cli
