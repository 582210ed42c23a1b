#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gadmm/errors.hpp"
#include "gadmm/solver.hpp"

namespace gadmm {

inline constexpr const char* kTraceCsvHeader =
    "iter,objective,primal_residual,kkt_residual,step_sq_h0,dist_sq_metric,cert_lhs,cert_rhs,"
    "time_ns";

// Shortest decimal that round-trips the exact double value.
inline std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& text) {
  double value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw Error("unparseable real value: " + text);
  return value;
}

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
  out << kTraceCsvHeader << '\n';
  for (const auto& r : trace) {
    out << r.iter << ',' << format_double(r.objective) << ',' << format_double(r.primal_residual)
        << ',' << format_double(r.kkt_residual) << ',' << format_double(r.step_sq_h0) << ','
        << format_double(r.dist_sq_metric) << ',' << format_double(r.cert_lhs) << ','
        << format_double(r.cert_rhs) << ',' << r.time_ns << '\n';
  }
}

inline void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open trace file for writing: " + path);
  write_trace_csv(out, trace);
}

inline std::vector<TraceRecord> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("trace file is empty");
  if (line == std::string(kTraceCsvHeader) + "\r") line.pop_back();
  if (line != kTraceCsvHeader) throw Error("trace file has an unexpected header: " + line);
  std::vector<TraceRecord> trace;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 9) throw Error("trace row has " + std::to_string(fields.size()) + " fields");
    TraceRecord r;
    r.iter = std::stol(fields[0]);
    r.objective = parse_double(fields[1]);
    r.primal_residual = parse_double(fields[2]);
    r.kkt_residual = parse_double(fields[3]);
    r.step_sq_h0 = parse_double(fields[4]);
    r.dist_sq_metric = parse_double(fields[5]);
    r.cert_lhs = parse_double(fields[6]);
    r.cert_rhs = parse_double(fields[7]);
    r.time_ns = std::stoll(fields[8]);
    trace.push_back(r);
  }
  return trace;
}

inline std::vector<TraceRecord> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file for reading: " + path);
  return read_trace_csv(in);
}

// Keys of the run summary document. tau_hat is null when no linear rate can
// be estimated for the run.
struct RunSummary {
  std::string algorithm;
  double alpha = 1;
  double beta = 1;
  long n = 0;
  long iterations = 0;
  bool converged = false;
  double objective = 0;
  double kkt_residual = 0;
  long long wall_time_ns = 0;
  std::optional<double> tau_hat;
  std::uint64_t seed = 0;
};

inline nlohmann::json summary_to_json(const RunSummary& s) {
  nlohmann::json j;
  j["algorithm"] = s.algorithm;
  j["alpha"] = s.alpha;
  j["beta"] = s.beta;
  j["n"] = s.n;
  j["iterations"] = s.iterations;
  j["converged"] = s.converged;
  j["objective"] = s.objective;
  j["kkt_residual"] = s.kkt_residual;
  j["wall_time_ns"] = s.wall_time_ns;
  if (s.tau_hat)
    j["tau_hat"] = *s.tau_hat;
  else
    j["tau_hat"] = nullptr;
  j["seed"] = s.seed;
  return j;
}

inline void write_summary_json(const std::string& path, const RunSummary& s) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open summary file for writing: " + path);
  out << summary_to_json(s).dump(2) << '\n';
}

}  // namespace gadmm
