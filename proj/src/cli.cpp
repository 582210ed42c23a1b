#include "gadmm/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>

#include "gadmm/bench.hpp"
#include "gadmm/calib.hpp"
#include "gadmm/certificates.hpp"
#include "gadmm/solver.hpp"
#include "gadmm/trace_io.hpp"

namespace gadmm {
namespace {

struct CommonFlags {
  std::string problem = "toy-qp";
  std::string algorithm = "admm";
  double alpha = 1.0;
  double beta = 1.0;
  long n = 10;
  double g1 = 0.0;
  double g2 = 0.0;
  double tol = 1e-6;
  long max_iter = 100000;
  std::uint64_t seed = 1;
  std::string stop = "step";
  double u0 = 0.0;
};

void add_common_flags(CLI::App& cmd, CommonFlags& f) {
  cmd.add_option("--problem", f.problem, "Problem instance")
      ->check(CLI::IsMember({"toy-qp", "calib"}))
      ->capture_default_str();
  cmd.add_option("--algorithm", f.algorithm, "Algorithm variant")
      ->check(CLI::IsMember({"admm", "gadmm", "padmm", "pgadmm", "dpadmm", "dpgadmm"}))
      ->capture_default_str();
  cmd.add_option("--alpha", f.alpha, "Relaxation factor, in (0, 2)")->capture_default_str();
  cmd.add_option("--beta", f.beta, "Penalty parameter, > 0")->capture_default_str();
  cmd.add_option("--n", f.n, "Matrix side length of the calibration instance")
      ->capture_default_str();
  cmd.add_option("--g1", f.g1, "x proximal weight (scaled identity)")->capture_default_str();
  cmd.add_option("--g2", f.g2, "y proximal weight (scaled identity)")->capture_default_str();
  cmd.add_option("--tol", f.tol, "Stopping tolerance")->capture_default_str();
  cmd.add_option("--max-iter", f.max_iter, "Iteration cap")->capture_default_str();
  cmd.add_option("--seed", f.seed, "Instance seed")->capture_default_str();
  cmd.add_option("--stop", f.stop, "Stopping rule: relative step or residual")
      ->check(CLI::IsMember({"step", "kkt"}))
      ->capture_default_str();
  cmd.add_option("--u0", f.u0, "Constant fill value of the starting point")
      ->capture_default_str();
}

SolverConfig<double> make_config(const CommonFlags& f, Eigen::Index xn, Eigen::Index ym) {
  SolverConfig<double> cfg;
  const auto variant = variant_from_name(f.algorithm);
  if (!variant) throw VariantConfigConflict("unknown algorithm: " + f.algorithm);
  cfg.variant = *variant;
  cfg.alpha = f.alpha;
  cfg.beta = f.beta;
  cfg.weights = ProximalWeights<double>::scaled_identity(xn, ym, f.g1, f.g2);
  cfg.tol = f.tol;
  cfg.max_iter = f.max_iter;
  cfg.stop_rule = f.stop == "kkt" ? StopRule::KktResidual : StopRule::RelativeStep;
  cfg.seed = f.seed;
  return cfg;
}

// Builds the requested problem. with_reference controls whether the expensive
// calibration reference is computed; the toy problem always carries one.
ProblemInstance<double> make_problem(const CommonFlags& f, bool with_reference) {
  if (f.problem == "toy-qp") return toy_qp_instance<double>();
  if (f.n < 2) throw DimensionMismatch("calibration problem needs --n >= 2");
  const CalibInstance<double> inst = generate_instance<double>(f.n, f.seed);
  return with_reference ? make_calib_problem_with_reference(inst) : make_calib_problem(inst);
}

int run_solve(const CommonFlags& f, const std::string& trace_path,
              const std::string& summary_path, bool want_rate) {
  ProblemInstance<double> problem;
  if (want_rate) {
    try {
      problem = make_problem(f, true);
    } catch (const NotConverged& e) {
      std::cerr << "[gadmm] rate estimation disabled: " << e.what() << '\n';
      problem = make_problem(f, false);
      want_rate = false;
    }
  } else {
    problem = make_problem(f, false);
  }

  const auto& c = problem.coupling;
  const SolverConfig<double> cfg = make_config(f, c.n(), c.m());
  const auto u0 = IterateState<double>::constant(c.n(), c.m(), c.l(), f.u0);

  RunOptions<double> opts;
  opts.record_iterates = want_rate && problem.reference_solution.has_value();
  const RunResult<double> result = run(problem, u0, cfg, opts);

  RunSummary summary;
  summary.algorithm = variant_name(cfg.variant);
  summary.alpha = cfg.alpha;
  summary.beta = cfg.beta;
  summary.n = f.problem == "toy-qp" ? 1 : f.n;
  summary.iterations = result.iterations;
  summary.converged = result.converged;
  summary.objective = result.trace.back().objective;
  summary.kkt_residual = result.trace.back().kkt_residual;
  summary.wall_time_ns = static_cast<long long>(result.wall_time.count());
  summary.seed = f.seed;
  if (opts.record_iterates) {
    try {
      const auto metric = preferred_rate_metric(cfg, c);
      summary.tau_hat = estimate_rate(result.iterates, *problem.reference_solution, metric).tau_hat;
    } catch (const InsufficientTrace&) {
    } catch (const NoiseFloor&) {
    }
  }

  if (!trace_path.empty()) write_trace_csv(trace_path, result.trace);
  if (!summary_path.empty()) write_summary_json(summary_path, summary);
  std::cout << summary_to_json(summary).dump(2) << '\n';
  return 0;
}

CertifySelection selection_for(const std::string& code, Variant variant,
                               const ProximalWeights<double>& weights) {
  const bool dp = variant == Variant::DpAdmm || variant == Variant::DpGadmm;
  CertifySelection sel;
  if (code == "l31") {
    sel.gamma_descent = true;
  } else if (code == "l32") {
    sel.residual_bound = true;
  } else if (code == "l41") {
    sel.h_descent_aux = true;
  } else if (code == "l42") {
    sel.h_descent_step = true;
  } else if (code == "identities") {
    sel.identities = true;
  } else if (code == "all") {
    sel.identities = true;
    if (dp) {
      sel.h_descent_aux = true;
      sel.h_descent_step = true;
    } else {
      sel.gamma_descent = true;
      if (weights.g1.strictly_positive_definite()) sel.residual_bound = true;
    }
  } else {
    throw VariantConfigConflict("unknown certificate code: " + code);
  }
  return sel;
}

int run_certify(const CommonFlags& f, const std::string& cert_code) {
  // Resolve the variant early so the selection can be matched against it.
  const auto variant = variant_from_name(f.algorithm);
  if (!variant) throw VariantConfigConflict("unknown algorithm: " + f.algorithm);

  const Eigen::Index xn = f.problem == "toy-qp" ? 1 : f.n * f.n;
  const auto weights = ProximalWeights<double>::scaled_identity(xn, xn, f.g1, f.g2);
  const CertifySelection sel = selection_for(cert_code, *variant, weights);

  const bool needs_reference = sel.gamma_descent || sel.h_descent_aux || sel.h_descent_step;
  const ProblemInstance<double> problem = make_problem(f, needs_reference);
  const auto& c = problem.coupling;
  const SolverConfig<double> cfg = make_config(f, c.n(), c.m());
  const auto u0 = IterateState<double>::constant(c.n(), c.m(), c.l(), f.u0);

  const CertifyRunSummary summary = certify_run(problem, u0, cfg, sel);

  std::cout << "certify problem=" << f.problem << " algorithm=" << variant_name(cfg.variant)
            << " alpha=" << format_double(cfg.alpha) << " beta=" << format_double(cfg.beta)
            << " iterations=" << summary.iterations
            << " converged=" << (summary.converged ? "yes" : "no") << '\n';
  if (summary.sigma >= 0) std::cout << "sigma=" << format_double(summary.sigma) << '\n';
  if (summary.delta >= 0) std::cout << "delta=" << format_double(summary.delta) << '\n';
  if (summary.empirical_sigma_ratio >= 0)
    std::cout << "empirical_residual_ratio=" << format_double(summary.empirical_sigma_ratio)
              << '\n';
  for (const auto& agg : summary.aggregates) {
    std::cout << agg.name << ": checked=" << agg.checked << " passed=" << agg.passed
              << " worst_slack=" << format_double(agg.worst_slack);
    if (agg.first_failure_iteration >= 0)
      std::cout << " first_failure_iteration=" << agg.first_failure_iteration;
    std::cout << (agg.all_passed() ? " PASS" : " FAIL") << '\n';
  }
  const bool ok = summary.all_passed();
  std::cout << "RESULT: " << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? 0 : 4;
}

int run_bench(const std::string& grid_path, const std::string& out_dir) {
  const GridSpec grid = grid_path.empty() ? default_grid() : parse_grid_file(grid_path);
  const ExperimentReport report = run_experiment_grid(grid);
  if (out_dir.empty()) {
    write_table_csv(std::cout, report.rows);
    return 0;
  }
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  write_table_csv((dir / "table1.csv").string(), report.rows);
  write_series_csv((dir / "figure1_alpha.csv").string(), make_sweep_series(report, grid, true));
  write_series_csv((dir / "figure2_beta.csv").string(), make_sweep_series(report, grid, false));
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Two-block splitting solver with runtime contraction certificates"};
  app.require_subcommand(1);

  CommonFlags solve_flags;
  std::string trace_path, summary_path;
  bool want_rate = true;
  CLI::App* solve = app.add_subcommand("solve", "Run one solver configuration");
  add_common_flags(*solve, solve_flags);
  solve->add_option("--trace", trace_path, "Write the per-iteration trace CSV here");
  solve->add_option("--summary", summary_path, "Write the run summary JSON here");
  solve->add_flag("--rate,!--no-rate", want_rate,
                  "Estimate the linear rate against a reference solution (default on)");

  CommonFlags certify_flags;
  std::string cert_code = "all";
  CLI::App* certify = app.add_subcommand("certify", "Run and check contraction certificates");
  add_common_flags(*certify, certify_flags);
  certify->add_option("--cert", cert_code, "Certificate family: l31|l32|l41|l42|identities|all")
      ->check(CLI::IsMember({"l31", "l32", "l41", "l42", "identities", "all"}))
      ->capture_default_str();

  std::string grid_path, out_dir;
  CLI::App* bench = app.add_subcommand("bench", "Run the calibration experiment grid");
  bench->add_option("--grid", grid_path, "Grid file; omit for the built-in default grid");
  bench->add_option("--out", out_dir,
                    "Directory for table1.csv, figure1_alpha.csv, figure2_beta.csv "
                    "(default: table to stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (solve->parsed()) return run_solve(solve_flags, trace_path, summary_path, want_rate);
    if (certify->parsed()) return run_certify(certify_flags, cert_code);
    if (bench->parsed()) return run_bench(grid_path, out_dir);
    std::cerr << "no subcommand given\n";
    return 2;
  } catch (const NonFinite& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

int cli_main(const std::vector<std::string>& args) {
  std::vector<std::string> with_program{"gadmm"};
  with_program.insert(with_program.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(with_program.size());
  for (const auto& a : with_program) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace gadmm
