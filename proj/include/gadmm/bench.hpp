#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gadmm/calib.hpp"
#include "gadmm/solver.hpp"
#include "gadmm/trace_io.hpp"

namespace gadmm {

// Experiment grid over the calibration benchmark. The grid file is a list of
// "key = value[, value...]" lines; '#' starts a comment. Recognized keys:
// n, variants, alpha, beta, g1, g2, seeds (lists) and tol, max_iter
// (scalars). Missing keys fall back to the defaults below. Cells are the
// cartesian product in the order n, variant, alpha, beta, g1, g2, seed.
struct GridSpec {
  std::vector<long> n{50};
  std::vector<Variant> variants{Variant::DpGadmm};
  std::vector<double> alpha{0.5, 1.5};
  std::vector<double> beta{1.0};
  std::vector<double> g1{2.0};
  std::vector<double> g2{2.0};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double tol = 1e-6;
  long max_iter = 100000;
};

inline GridSpec default_grid() { return {}; }

inline std::optional<Variant> variant_from_name(const std::string& name) {
  for (Variant v : {Variant::Admm, Variant::Gadmm, Variant::PAdmm, Variant::PGadmm,
                    Variant::DpAdmm, Variant::DpGadmm})
    if (name == variant_name(v)) return v;
  return std::nullopt;
}

namespace detail {

inline std::vector<std::string> split_values(const std::string& text) {
  std::vector<std::string> out;
  std::string token;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!token.empty()) out.push_back(token);
      token.clear();
    } else {
      token.push_back(c);
    }
  }
  if (!token.empty()) out.push_back(token);
  return out;
}

}  // namespace detail

inline GridSpec parse_grid(std::istream& in) {
  GridSpec grid;
  bool saw_key = false;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw MalformedGrid("grid line " + std::to_string(line_no) + " has no '='");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::vector<std::string> values = detail::split_values(line.substr(eq + 1));
    if (key.empty() || values.empty())
      throw MalformedGrid("grid line " + std::to_string(line_no) + " is incomplete");
    saw_key = true;

    auto parse_reals = [&](std::vector<double>& out) {
      out.clear();
      for (const auto& v : values) out.push_back(parse_double(v));
    };
    try {
      if (key == "n") {
        grid.n.clear();
        for (const auto& v : values) grid.n.push_back(std::stol(v));
      } else if (key == "variants" || key == "variant") {
        grid.variants.clear();
        for (const auto& v : values) {
          const auto parsed = variant_from_name(v);
          if (!parsed) throw MalformedGrid("unknown variant in grid: " + v);
          grid.variants.push_back(*parsed);
        }
      } else if (key == "alpha") {
        parse_reals(grid.alpha);
      } else if (key == "beta") {
        parse_reals(grid.beta);
      } else if (key == "g1") {
        parse_reals(grid.g1);
      } else if (key == "g2") {
        parse_reals(grid.g2);
      } else if (key == "seeds" || key == "seed") {
        grid.seeds.clear();
        for (const auto& v : values) grid.seeds.push_back(std::stoull(v));
      } else if (key == "tol") {
        grid.tol = parse_double(values.front());
      } else if (key == "max_iter") {
        grid.max_iter = std::stol(values.front());
      } else {
        throw MalformedGrid("unknown grid key: " + key);
      }
    } catch (const MalformedGrid&) {
      throw;
    } catch (const std::exception& e) {
      throw MalformedGrid("grid line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!saw_key) throw MalformedGrid("grid file contains no keys");

  for (long n : grid.n)
    if (n < 2) throw MalformedGrid("grid needs n >= 2");
  for (double a : grid.alpha)
    if (!(a > 0 && a < 2)) throw MalformedGrid("grid needs alpha in (0, 2)");
  for (double b : grid.beta)
    if (!(b > 0)) throw MalformedGrid("grid needs beta > 0");
  for (double g : grid.g1)
    if (g < 0) throw MalformedGrid("grid needs g1 >= 0");
  for (double g : grid.g2)
    if (g < 0) throw MalformedGrid("grid needs g2 >= 0");
  if (!(grid.tol > 0)) throw MalformedGrid("grid needs tol > 0");
  if (grid.max_iter < 1) throw MalformedGrid("grid needs max_iter >= 1");
  if (grid.seeds.empty()) throw MalformedGrid("grid needs at least one seed");
  return grid;
}

inline GridSpec parse_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedGrid("cannot open grid file: " + path);
  return parse_grid(in);
}

// One grid cell = one solver run on one seeded instance. Variant rules are
// applied to the cell parameters: forced alpha and forced zero weights
// override the grid values.
struct CellResult {
  long n = 0;
  Variant variant = Variant::DpGadmm;
  double alpha = 1;
  double beta = 1;
  double g1 = 0;
  double g2 = 0;
  std::uint64_t seed = 0;
  long iterations = 0;
  bool converged = false;
  double cpu_seconds = 0;
  double objective = 0;
  double epsilon_final = 0;
  std::vector<double> epsilon_history;
};

struct TableRow {
  long n = 0;
  std::string algorithm;
  double alpha = 1;
  double beta = 1;
  double g1 = 0;
  double g2 = 0;
  double iterations_median = 0;
  double cpu_seconds_median = 0;
  double objective_median = 0;
  double epsilon_final_median = 0;
};

struct ExperimentReport {
  std::vector<CellResult> cells;
  std::vector<TableRow> rows;
};

namespace detail {

inline double median(std::vector<double> values) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  const size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace detail

inline CellResult run_grid_cell(long n, Variant variant, double alpha, double beta, double g1,
                                double g2, std::uint64_t seed, double tol, long max_iter) {
  const VariantRule rule = specialize(variant);
  CellResult cell;
  cell.n = n;
  cell.variant = variant;
  cell.alpha = rule.force_unit_alpha ? 1.0 : alpha;
  cell.beta = beta;
  cell.g1 = rule.g1_must_be_zero ? 0.0 : g1;
  cell.g2 = rule.g2_must_be_zero ? 0.0 : g2;
  cell.seed = seed;

  const CalibInstance<double> inst = generate_instance<double>(n, seed);
  const ProblemInstance<double> problem = make_calib_problem(inst);
  SolverConfig<double> cfg;
  cfg.variant = variant;
  cfg.alpha = cell.alpha;
  cfg.beta = cell.beta;
  cfg.weights =
      ProximalWeights<double>::scaled_identity(problem.coupling.n(), problem.coupling.m(),
                                               cell.g1, cell.g2);
  cfg.tol = tol;
  cfg.max_iter = max_iter;
  cfg.stop_rule = StopRule::RelativeStep;
  cfg.seed = seed;

  const auto u0 = IterateState<double>::zero(problem.coupling.n(), problem.coupling.m(),
                                             problem.coupling.l());
  const RunResult<double> result = run(problem, u0, cfg);
  cell.iterations = result.iterations;
  cell.converged = result.converged;
  cell.cpu_seconds = static_cast<double>(result.wall_time.count()) * 1e-9;
  cell.objective = result.trace.back().objective;
  cell.epsilon_final = result.final_rel_step;
  cell.epsilon_history.assign(result.rel_step_history.begin(), result.rel_step_history.end());
  return cell;
}

inline ExperimentReport run_experiment_grid(const GridSpec& grid) {
  ExperimentReport report;
  for (long n : grid.n)
    for (Variant v : grid.variants)
      for (double alpha : grid.alpha)
        for (double beta : grid.beta)
          for (double g1 : grid.g1)
            for (double g2 : grid.g2) {
              std::vector<CellResult> seed_cells;
              for (std::uint64_t seed : grid.seeds)
                seed_cells.push_back(
                    run_grid_cell(n, v, alpha, beta, g1, g2, seed, grid.tol, grid.max_iter));

              TableRow row;
              row.n = n;
              row.algorithm = variant_name(v);
              row.alpha = seed_cells.front().alpha;
              row.beta = seed_cells.front().beta;
              row.g1 = seed_cells.front().g1;
              row.g2 = seed_cells.front().g2;
              std::vector<double> iters, cpus, objs, epss;
              for (const auto& c : seed_cells) {
                iters.push_back(static_cast<double>(c.iterations));
                cpus.push_back(c.cpu_seconds);
                objs.push_back(c.objective);
                epss.push_back(c.epsilon_final);
              }
              row.iterations_median = detail::median(iters);
              row.cpu_seconds_median = detail::median(cpus);
              row.objective_median = detail::median(objs);
              row.epsilon_final_median = detail::median(epss);
              report.rows.push_back(row);
              for (auto& c : seed_cells) report.cells.push_back(std::move(c));
            }
  return report;
}

inline void write_table_csv(std::ostream& out, const std::vector<TableRow>& rows) {
  out << "n,algorithm,alpha,iterations_median,cpu_seconds_median,objective_median,"
         "epsilon_final_median\n";
  for (const auto& r : rows) {
    out << r.n << ',' << r.algorithm << ',' << format_double(r.alpha) << ','
        << format_double(r.iterations_median) << ',' << format_double(r.cpu_seconds_median) << ','
        << format_double(r.objective_median) << ',' << format_double(r.epsilon_final_median)
        << '\n';
  }
}

inline void write_table_csv(const std::string& path, const std::vector<TableRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open table file for writing: " + path);
  write_table_csv(out, rows);
}

struct CurveSeries {
  std::string label;
  std::vector<double> errors;  // indexed from iteration 1
};

// Per-iteration error curves: one series per alpha (or per beta). The fixed
// axis is anchored at its largest grid value (the fastest configuration), the
// instance at the first n, first variant, and first seed.
inline std::vector<CurveSeries> make_sweep_series(const ExperimentReport& report,
                                                  const GridSpec& grid, bool sweep_alpha) {
  std::vector<CurveSeries> series;
  const auto& sweep_values = sweep_alpha ? grid.alpha : grid.beta;
  const double fixed_alpha = *std::max_element(grid.alpha.begin(), grid.alpha.end());
  const double fixed_beta = *std::max_element(grid.beta.begin(), grid.beta.end());
  for (double value : sweep_values) {
    const double want_alpha = sweep_alpha ? value : fixed_alpha;
    const double want_beta = sweep_alpha ? fixed_beta : value;
    for (const auto& cell : report.cells) {
      const VariantRule rule = specialize(cell.variant);
      const double cell_requested_alpha = rule.force_unit_alpha ? 1.0 : want_alpha;
      if (cell.n != grid.n.front() || cell.variant != grid.variants.front()) continue;
      if (cell.seed != grid.seeds.front()) continue;
      if (cell.alpha != cell_requested_alpha || cell.beta != want_beta) continue;
      CurveSeries s;
      s.label = (sweep_alpha ? "alpha=" : "beta=") + format_double(value);
      s.errors = cell.epsilon_history;
      series.push_back(std::move(s));
      break;
    }
  }
  return series;
}

inline void write_series_csv(std::ostream& out, const std::vector<CurveSeries>& series) {
  out << "series_label,iter,error\n";
  for (const auto& s : series)
    for (size_t k = 0; k < s.errors.size(); ++k)
      out << s.label << ',' << (k + 1) << ',' << format_double(s.errors[k]) << '\n';
}

inline void write_series_csv(const std::string& path, const std::vector<CurveSeries>& series) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open series file for writing: " + path);
  write_series_csv(out, series);
}

}  // namespace gadmm
