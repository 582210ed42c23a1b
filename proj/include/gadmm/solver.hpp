#pragma once

#include <chrono>
#include <functional>
#include <iostream>
#include <optional>
#include <vector>

#include "gadmm/metrics.hpp"
#include "gadmm/problem.hpp"
#include "gadmm/types.hpp"

namespace gadmm {

// Constraints imposed by a variant on the general double-proximal scheme.
struct VariantRule {
  bool force_unit_alpha = false;
  bool g1_must_be_zero = false;
  bool g2_must_be_zero = false;
};

inline VariantRule specialize(Variant v) {
  switch (v) {
    case Variant::Admm: return {true, true, true};
    case Variant::Gadmm: return {false, true, true};
    case Variant::PAdmm: return {true, false, true};
    case Variant::PGadmm: return {false, false, true};
    case Variant::DpAdmm: return {true, false, false};
    case Variant::DpGadmm: return {false, false, false};
  }
  return {};
}

// Rejects configurations that contradict the chosen variant or leave the
// admissible parameter ranges.
template <typename Scalar>
void validate_config(const SolverConfig<Scalar>& cfg) {
  if (!(cfg.alpha > Scalar(0) && cfg.alpha < Scalar(2)))
    throw VariantConfigConflict("alpha must lie strictly inside (0, 2)");
  if (!(cfg.beta > Scalar(0))) throw VariantConfigConflict("beta must be positive");
  if (!(cfg.tol > Scalar(0))) throw VariantConfigConflict("tol must be positive");
  if (cfg.max_iter < 1) throw VariantConfigConflict("max_iter must be at least 1");
  const VariantRule rule = specialize(cfg.variant);
  if (rule.force_unit_alpha && cfg.alpha != Scalar(1))
    throw VariantConfigConflict(std::string(variant_name(cfg.variant)) + " requires alpha = 1");
  if (rule.g1_must_be_zero && !cfg.weights.g1.is_zero())
    throw VariantConfigConflict(std::string(variant_name(cfg.variant)) +
                                " does not take an x proximal weight");
  if (rule.g2_must_be_zero && !cfg.weights.g2.is_zero())
    throw VariantConfigConflict(std::string(variant_name(cfg.variant)) +
                                " does not take a y proximal weight");
}

// Result of one iteration: the new point, the auxiliary point whose lambda
// component uses the pre-update y, and cached residual norms.
template <typename Scalar>
struct StepOutcome {
  IterateState<Scalar> next;
  IterateState<Scalar> aux;
  Scalar primal_residual = Scalar(0);
  Scalar dx_sq = Scalar(0);
  Scalar dy_sq = Scalar(0);
  Scalar dlambda_sq = Scalar(0);
  Scalar b_dy_sq = Scalar(0);
};

// One sweep of the general scheme: x update, relaxed y update, dual update
//   lambda^+ = lambda - beta (alpha A x^+ + (1 - alpha)(b - B y) + B y^+ - b).
// All variants are parameterizations of this map.
template <typename Scalar>
StepOutcome<Scalar> dpgadmm_step(const ProblemInstance<Scalar>& p, const IterateState<Scalar>& u,
                                 const SolverConfig<Scalar>& cfg) {
  using Vec = Vector<Scalar>;
  const auto& c = p.coupling;
  if (u.x.size() != c.n() || u.y.size() != c.m() || u.lambda.size() != c.l())
    throw DimensionMismatch("iterate does not match the coupling dimensions");

  StepOutcome<Scalar> out;
  out.next.x = p.oracle->solve_x(u.lambda, u.y, cfg.beta, cfg.weights.g1, u.x);
  out.next.y = p.oracle->solve_y(u.lambda, out.next.x, u.y, cfg.alpha, cfg.beta, cfg.weights.g2);

  const Vec ax1 = c.A.apply(out.next.x);
  const Vec by0 = c.B.apply(u.y);
  const Vec by1 = c.B.apply(out.next.y);
  const Vec mid = ax1 + by0 - c.b;  // residual with the pre-update y

  out.next.lambda =
      u.lambda - cfg.beta * (cfg.alpha * ax1 + (Scalar(1) - cfg.alpha) * (c.b - by0) + by1 - c.b);
  out.aux = {out.next.x, out.next.y, u.lambda - cfg.beta * mid};

  out.primal_residual = std::sqrt((ax1 + by1 - c.b).squaredNorm());
  out.dx_sq = (u.x - out.next.x).squaredNorm();
  out.dy_sq = (u.y - out.next.y).squaredNorm();
  out.dlambda_sq = (u.lambda - out.next.lambda).squaredNorm();
  out.b_dy_sq = (by0 - by1).squaredNorm();
  return out;
}

// Relative-step stopping value: max(|y step|, |lambda step|) over the frozen
// first-step denominator max(|x1 - x0|, |y1 - y0|, |lambda1 - lambda0|).
template <typename Scalar>
Scalar relative_step_value(Scalar dy_norm, Scalar dlambda_norm, Scalar denominator) {
  return std::max(dy_norm, dlambda_norm) / denominator;
}

// One emitted row per iterate; field meanings match the trace CSV columns.
// Sentinel -1 marks fields without a defined value for the run.
struct TraceRecord {
  long iter = 0;
  double objective = 0;
  double primal_residual = 0;
  double kkt_residual = 0;
  double step_sq_h0 = 0;
  double dist_sq_metric = -1;
  double cert_lhs = -1;
  double cert_rhs = -1;
  long long time_ns = 0;
};

template <typename Scalar>
struct RunResult {
  IterateState<Scalar> final;
  long iterations = 0;
  bool converged = false;
  std::vector<TraceRecord> trace;
  std::chrono::nanoseconds wall_time{0};
  // Relative-step value per iteration (defined from iteration 1 onward).
  std::vector<Scalar> rel_step_history;
  Scalar final_rel_step = Scalar(-1);
  // Populated only when RunOptions::record_iterates is set.
  std::vector<IterateState<Scalar>> iterates;
};

template <typename Scalar>
struct RunOptions {
  bool record_iterates = false;
  // Called after each step with (iteration index, previous iterate, step,
  // trace row of the new iterate).
  std::function<void(long, const IterateState<Scalar>&, const StepOutcome<Scalar>&,
                     const TraceRecord&)>
      on_step;
};

// Metric in which run() reports squared distances to the reference: the
// double-proximal variants use the coupled H form, all others the coupled
// Gamma form with the x weight.
template <typename Scalar>
MetricKind<Scalar> preferred_rate_metric(const SolverConfig<Scalar>& cfg,
                                         const LinearCoupling<Scalar>& coupling) {
  const bool dp = cfg.variant == Variant::DpAdmm || cfg.variant == Variant::DpGadmm;
  return MetricKind<Scalar>::make(dp ? MetricTag::HAlpha : MetricTag::GammaAlpha, cfg.alpha,
                                  cfg.beta, cfg.weights, coupling);
}

// Iterates the scheme until the stopping rule fires or max_iter is reached.
// The trace always contains iterations + 1 records including the snapshot of
// the starting point.
template <typename Scalar>
RunResult<Scalar> run(const ProblemInstance<Scalar>& p, const IterateState<Scalar>& u0,
                      const SolverConfig<Scalar>& cfg, const RunOptions<Scalar>& opts = {}) {
  validate_config(cfg);
  const auto& c = p.coupling;
  if (u0.x.size() != c.n() || u0.y.size() != c.m() || u0.lambda.size() != c.l())
    throw DimensionMismatch("starting point does not match the coupling dimensions");
  if (!u0.all_finite()) throw NonFinite("starting point contains a non-finite entry");

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed_ns = [&t0]() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                                t0)
        .count();
  };

  const MetricKind<Scalar> h0 =
      MetricKind<Scalar>::make(MetricTag::H0, cfg.alpha, cfg.beta, cfg.weights, c);
  const bool dp_family = cfg.variant == Variant::DpAdmm || cfg.variant == Variant::DpGadmm;
  std::optional<MetricKind<Scalar>> rate_metric;
  std::optional<MetricKind<Scalar>> gamma0;
  if (p.reference_solution) {
    rate_metric = preferred_rate_metric(cfg, c);
    if (!dp_family)
      gamma0 = MetricKind<Scalar>::make(MetricTag::Gamma0, cfg.alpha, cfg.beta, cfg.weights, c);
  }

  RunResult<Scalar> result;
  IterateState<Scalar> u = u0;
  if (opts.record_iterates) result.iterates.push_back(u);

  Scalar dist_sq_prev = Scalar(-1);
  {
    TraceRecord rec;
    rec.iter = 0;
    rec.objective = static_cast<double>(p.oracle->objective(u.x, u.y));
    rec.primal_residual = static_cast<double>(std::sqrt(c.primal_residual_vector(u.x, u.y).squaredNorm()));
    rec.kkt_residual = static_cast<double>(kkt_residual(p, u));
    rec.step_sq_h0 = 0;
    if (rate_metric) {
      dist_sq_prev = weighted_sq_distance(u, *p.reference_solution, *rate_metric);
      rec.dist_sq_metric = static_cast<double>(dist_sq_prev);
    }
    rec.time_ns = elapsed_ns();
    result.trace.push_back(rec);
  }

  Scalar denominator = Scalar(-1);
  StopRule effective_stop = cfg.stop_rule;

  for (long k = 1; k <= cfg.max_iter; ++k) {
    const StepOutcome<Scalar> step = dpgadmm_step(p, u, cfg);
    if (!step.next.all_finite())
      throw NonFinite("iterate became non-finite at iteration " + std::to_string(k));

    TraceRecord rec;
    rec.iter = k;
    rec.objective = static_cast<double>(p.oracle->objective(step.next.x, step.next.y));
    rec.primal_residual = static_cast<double>(step.primal_residual);
    rec.kkt_residual = static_cast<double>(kkt_residual(p, step.next));
    rec.step_sq_h0 = static_cast<double>(weighted_sq_distance(u, step.next, h0));
    if (rate_metric) {
      const Scalar dist_sq = weighted_sq_distance(step.next, *p.reference_solution, *rate_metric);
      rec.dist_sq_metric = static_cast<double>(dist_sq);
      rec.cert_lhs = static_cast<double>(dist_sq_prev - dist_sq);
      rec.cert_rhs = static_cast<double>(
          dp_family ? weighted_sq_distance(u, step.aux, h0) : weighted_sq_distance(u, step.next, *gamma0));
      dist_sq_prev = dist_sq;
    }
    rec.time_ns = elapsed_ns();

    if (opts.on_step) opts.on_step(k, u, step, rec);
    result.trace.push_back(rec);

    if (k == 1) {
      denominator = std::sqrt(
          std::max(step.dx_sq, std::max(step.dy_sq, step.dlambda_sq)));
      if (denominator == Scalar(0)) {
        // The starting point is a fixed point of the map; nothing will move.
        result.final = step.next;
        result.iterations = 1;
        result.converged = true;
        result.rel_step_history.push_back(Scalar(0));
        result.final_rel_step = Scalar(0);
        if (opts.record_iterates) result.iterates.push_back(step.next);
        result.wall_time = std::chrono::nanoseconds(elapsed_ns());
        return result;
      }
      if (denominator < Scalar(1e-300)) {
        std::cerr << "[gadmm] warning: relative-step denominator underflow; "
                     "switching to the residual stopping rule\n";
        effective_stop = StopRule::KktResidual;
      }
    }

    const Scalar rel_step = relative_step_value(std::sqrt(step.dy_sq), std::sqrt(step.dlambda_sq),
                                                denominator);
    result.rel_step_history.push_back(rel_step);
    result.final_rel_step = rel_step;

    u = step.next;
    if (opts.record_iterates) result.iterates.push_back(u);
    result.iterations = k;

    const bool stop = effective_stop == StopRule::RelativeStep
                          ? rel_step < cfg.tol
                          : static_cast<Scalar>(rec.kkt_residual) < cfg.tol;
    if (stop) {
      result.converged = true;
      break;
    }
  }

  result.final = u;
  result.wall_time = std::chrono::nanoseconds(elapsed_ns());
  return result;
}

}  // namespace gadmm
