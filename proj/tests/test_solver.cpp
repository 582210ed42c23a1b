#include <doctest.h>

#include <cmath>
#include <limits>

#include "gadmm/calib.hpp"
#include "gadmm/certificates.hpp"
#include "gadmm/problem.hpp"
#include "gadmm/solver.hpp"

using namespace gadmm;

namespace {

SolverConfig<double> toy_config(Variant v, double alpha, double beta, double g1, double g2) {
  SolverConfig<double> cfg;
  cfg.variant = v;
  cfg.alpha = alpha;
  cfg.beta = beta;
  cfg.weights = ProximalWeights<double>::scaled_identity(1, 1, g1, g2);
  return cfg;
}

void check_first_step(const SolverConfig<double>& cfg, double ex, double ey, double el) {
  const auto p = toy_qp_instance<double>();
  const auto u0 = IterateState<double>::zero(1, 1, 1);
  const auto step = dpgadmm_step(p, u0, cfg);
  CHECK(std::abs(step.next.x(0) - ex) <= 1e-12);
  CHECK(std::abs(step.next.y(0) - ey) <= 1e-12);
  CHECK(std::abs(step.next.lambda(0) - el) <= 1e-12);
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("hand-derived first steps from the origin") {
    check_first_step(toy_config(Variant::Admm, 1.0, 1.0, 0.0, 0.0), 0.5, 1.25, 0.75);
    check_first_step(toy_config(Variant::Gadmm, 1.5, 1.0, 0.0, 0.0), 0.5, 1.375, 0.625);
    check_first_step(toy_config(Variant::DpGadmm, 1.0, 1.0, 1.0, 1.0), 1.0 / 3.0, 7.0 / 9.0,
                     4.0 / 9.0);
    check_first_step(toy_config(Variant::PGadmm, 1.5, 1.0, 1.0, 0.0), 1.0 / 3.0, 1.25, 0.75);
  }

  TEST_CASE("variant specialization table") {
    CHECK(specialize(Variant::Admm).force_unit_alpha);
    CHECK(specialize(Variant::Admm).g1_must_be_zero);
    CHECK(specialize(Variant::Admm).g2_must_be_zero);
    CHECK_FALSE(specialize(Variant::Gadmm).force_unit_alpha);
    CHECK(specialize(Variant::Gadmm).g1_must_be_zero);
    CHECK(specialize(Variant::PAdmm).force_unit_alpha);
    CHECK_FALSE(specialize(Variant::PAdmm).g1_must_be_zero);
    CHECK(specialize(Variant::PAdmm).g2_must_be_zero);
    CHECK_FALSE(specialize(Variant::PGadmm).force_unit_alpha);
    CHECK(specialize(Variant::PGadmm).g2_must_be_zero);
    CHECK(specialize(Variant::DpAdmm).force_unit_alpha);
    CHECK_FALSE(specialize(Variant::DpAdmm).g2_must_be_zero);
    CHECK_FALSE(specialize(Variant::DpGadmm).force_unit_alpha);
    CHECK_FALSE(specialize(Variant::DpGadmm).g1_must_be_zero);
    CHECK_FALSE(specialize(Variant::DpGadmm).g2_must_be_zero);
  }

  TEST_CASE("configuration validation enforces variant rules and ranges") {
    CHECK_THROWS_AS(validate_config(toy_config(Variant::Admm, 1.5, 1.0, 0.0, 0.0)),
                    VariantConfigConflict);
    CHECK_THROWS_AS(validate_config(toy_config(Variant::Gadmm, 1.5, 1.0, 1.0, 0.0)),
                    VariantConfigConflict);
    CHECK_THROWS_AS(validate_config(toy_config(Variant::PGadmm, 1.5, 1.0, 1.0, 2.0)),
                    VariantConfigConflict);
    CHECK_THROWS_AS(validate_config(toy_config(Variant::PAdmm, 1.0, 1.0, 1.0, 1.0)),
                    VariantConfigConflict);
    CHECK_THROWS_AS(validate_config(toy_config(Variant::Gadmm, 2.0, 1.0, 0.0, 0.0)),
                    VariantConfigConflict);
    CHECK_THROWS_AS(validate_config(toy_config(Variant::Gadmm, -0.5, 1.0, 0.0, 0.0)),
                    VariantConfigConflict);
    CHECK_THROWS_AS(validate_config(toy_config(Variant::Admm, 1.0, 0.0, 0.0, 0.0)),
                    VariantConfigConflict);

    auto bad_tol = toy_config(Variant::Admm, 1.0, 1.0, 0.0, 0.0);
    bad_tol.tol = 0.0;
    CHECK_THROWS_AS(validate_config(bad_tol), VariantConfigConflict);

    auto bad_iter = toy_config(Variant::Admm, 1.0, 1.0, 0.0, 0.0);
    bad_iter.max_iter = 0;
    CHECK_THROWS_AS(validate_config(bad_iter), VariantConfigConflict);

    CHECK_NOTHROW(validate_config(toy_config(Variant::DpGadmm, 1.5, 1.0, 1.0, 1.0)));
  }

  TEST_CASE("unit-alpha and zero-weight specializations reproduce each other") {
    const auto p = toy_qp_instance<double>();
    IterateState<double> u = IterateState<double>::zero(1, 1, 1);
    u.x(0) = 0.2;
    u.y(0) = -0.4;
    u.lambda(0) = 0.9;

    const auto s_admm = dpgadmm_step(p, u, toy_config(Variant::Admm, 1.0, 1.0, 0.0, 0.0));
    const auto s_gadmm = dpgadmm_step(p, u, toy_config(Variant::Gadmm, 1.0, 1.0, 0.0, 0.0));
    CHECK(s_admm.next.x(0) == s_gadmm.next.x(0));
    CHECK(s_admm.next.y(0) == s_gadmm.next.y(0));
    CHECK(s_admm.next.lambda(0) == s_gadmm.next.lambda(0));

    const auto s_dpadmm = dpgadmm_step(p, u, toy_config(Variant::DpAdmm, 1.0, 1.0, 1.0, 1.0));
    const auto s_dpgadmm = dpgadmm_step(p, u, toy_config(Variant::DpGadmm, 1.0, 1.0, 1.0, 1.0));
    CHECK(s_dpadmm.next.x(0) == s_dpgadmm.next.x(0));
    CHECK(s_dpadmm.next.y(0) == s_dpgadmm.next.y(0));
    CHECK(s_dpadmm.next.lambda(0) == s_dpgadmm.next.lambda(0));
  }

  TEST_CASE("auxiliary point uses the pre-update y in its multiplier") {
    const auto p = toy_qp_instance<double>();
    IterateState<double> u = IterateState<double>::zero(1, 1, 1);
    u.y(0) = 0.7;
    u.lambda(0) = -0.3;
    const auto cfg = toy_config(Variant::DpGadmm, 1.4, 0.9, 1.0, 1.0);
    const auto step = dpgadmm_step(p, u, cfg);
    CHECK(step.aux.x(0) == step.next.x(0));
    CHECK(step.aux.y(0) == step.next.y(0));
    // aux lambda = lambda^k - beta (A x^{k+1} + B y^k - b), with B = -1, b = 0.
    const double expect = u.lambda(0) - 0.9 * (step.next.x(0) - u.y(0));
    CHECK(std::abs(step.aux.lambda(0) - expect) <= 1e-15);

    // Cached squared step norms agree with the returned states.
    CHECK(std::abs(step.dx_sq - std::pow(step.next.x(0) - u.x(0), 2)) <= 1e-15);
    CHECK(std::abs(step.dy_sq - std::pow(step.next.y(0) - u.y(0), 2)) <= 1e-15);
    CHECK(std::abs(step.dlambda_sq - std::pow(step.next.lambda(0) - u.lambda(0), 2)) <= 1e-15);
    CHECK(std::abs(step.b_dy_sq - step.dy_sq) <= 1e-15);  // B = -identity here
    CHECK(std::abs(step.primal_residual - std::abs(step.next.x(0) - step.next.y(0))) <= 1e-15);
  }

  TEST_CASE("dual-update identities hold for every variant") {
    struct Config {
      Variant v;
      double alpha, g1, g2;
    };
    const Config grid[] = {
        {Variant::Admm, 1.0, 0.0, 0.0},   {Variant::Gadmm, 0.5, 0.0, 0.0},
        {Variant::Gadmm, 1.5, 0.0, 0.0},  {Variant::PAdmm, 1.0, 1.0, 0.0},
        {Variant::PGadmm, 1.5, 1.0, 0.0}, {Variant::DpAdmm, 1.0, 1.0, 1.0},
        {Variant::DpGadmm, 0.5, 1.0, 1.0}, {Variant::DpGadmm, 1.5, 1.0, 1.0},
    };

    const auto toy = toy_qp_instance<double>();
    const auto calib_inst = generate_instance<double>(4, 3);
    const auto calib = make_calib_problem(calib_inst);

    for (const auto& c : grid) {
      for (const double beta : {0.1, 1.0}) {
        for (const ProblemInstance<double>* p : {&toy, &calib}) {
          const Eigen::Index n = p->coupling.n(), m = p->coupling.m(), l = p->coupling.l();
          SolverConfig<double> cfg;
          cfg.variant = c.v;
          cfg.alpha = c.alpha;
          cfg.beta = beta;
          cfg.weights = ProximalWeights<double>::scaled_identity(n, m, c.g1, c.g2);
          cfg.tol = 1e-10;
          cfg.max_iter = 5;

          RunOptions<double> opts;
          long checked = 0;
          opts.on_step = [&](long k, const IterateState<double>& u_prev,
                             const StepOutcome<double>& step, const TraceRecord&) {
            const auto ids =
                lambda_identity_reports(u_prev, step, cfg.alpha, cfg.beta, p->coupling, k);
            CHECK(ids.first.passed);
            CHECK(ids.second.passed);
            ++checked;
          };
          run(*p, IterateState<double>::zero(n, m, l), cfg, opts);
          CHECK(checked >= 1);
        }
      }
    }
  }

  TEST_CASE("driver converges on the scalar instance and records a clean trace") {
    const auto p = toy_qp_instance<double>();
    auto cfg = toy_config(Variant::Admm, 1.0, 1.0, 0.0, 0.0);
    cfg.tol = 1e-10;
    const auto result = run(p, IterateState<double>::zero(1, 1, 1), cfg);

    CHECK(result.converged);
    CHECK(distance(result.final, *p.reference_solution) <= 1e-8);
    CHECK(result.trace.size() == static_cast<size_t>(result.iterations) + 1);
    CHECK(result.rel_step_history.size() == static_cast<size_t>(result.iterations));
    CHECK(result.final_rel_step < cfg.tol);

    long long prev_time = -1;
    long prev_iter = -1;
    for (const auto& rec : result.trace) {
      CHECK(rec.iter == prev_iter + 1);
      CHECK(rec.time_ns >= prev_time);
      CHECK(rec.primal_residual >= 0.0);
      CHECK(rec.kkt_residual >= 0.0);
      CHECK(rec.step_sq_h0 >= 0.0);
      prev_iter = rec.iter;
      prev_time = rec.time_ns;
    }

    // With a reference attached, the squared-distance column is populated and
    // its per-iteration drop is reported as the certificate left-hand side.
    for (size_t k = 1; k < result.trace.size(); ++k) {
      CHECK(result.trace[k].dist_sq_metric >= 0.0);
      const double drop = result.trace[k - 1].dist_sq_metric - result.trace[k].dist_sq_metric;
      CHECK(std::abs(result.trace[k].cert_lhs - drop) <=
            1e-12 * (1.0 + std::abs(drop)));
      CHECK(result.trace[k].cert_rhs >= 0.0);
    }
  }

  TEST_CASE("starting at the solution takes the fixed-point path") {
    const auto p = toy_qp_instance<double>();
    auto cfg = toy_config(Variant::Gadmm, 1.5, 1.0, 0.0, 0.0);
    cfg.tol = 1e-10;
    const auto result = run(p, *p.reference_solution, cfg);
    CHECK(result.converged);
    CHECK(result.iterations == 1);
    REQUIRE(result.rel_step_history.size() == 1);
    CHECK(result.rel_step_history[0] == 0.0);
    CHECK(distance(result.final, *p.reference_solution) <= 1e-8);
  }

  TEST_CASE("near-stationary starts move at most proportionally") {
    // A point satisfying the optimality system to 1e-12 moves by at most 1e-8.
    const auto p = toy_qp_instance<double>();
    auto star = *p.reference_solution;
    star.x(0) += 1e-13;
    const auto cfg = toy_config(Variant::Admm, 1.0, 1.0, 0.0, 0.0);
    REQUIRE(kkt_residual(p, star) <= 1e-12);
    const auto step = dpgadmm_step(p, star, cfg);
    CHECK(distance(step.next, star) <= 1e-8);
  }

  TEST_CASE("relative stopping value fires strictly below the tolerance") {
    const double value = relative_step_value(3e-7, 5e-7, 1.0);
    CHECK(value == 5e-7);
    CHECK(value < 1e-6);
  }

  TEST_CASE("residual stopping rule drives the optimality measure below tol") {
    const auto p = toy_qp_instance<double>();
    auto cfg = toy_config(Variant::Admm, 1.0, 1.0, 0.0, 0.0);
    cfg.stop_rule = StopRule::KktResidual;
    cfg.tol = 1e-9;
    const auto result = run(p, IterateState<double>::zero(1, 1, 1), cfg);
    CHECK(result.converged);
    CHECK(result.trace.back().kkt_residual < 1e-9);
  }

  TEST_CASE("non-finite inputs are rejected") {
    const auto p = toy_qp_instance<double>();
    const auto cfg = toy_config(Variant::Admm, 1.0, 1.0, 0.0, 0.0);
    auto u0 = IterateState<double>::zero(1, 1, 1);
    u0.x(0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(run(p, u0, cfg), NonFinite);

    const auto wrong = IterateState<double>::zero(2, 1, 1);
    CHECK_THROWS_AS(run(p, wrong, cfg), DimensionMismatch);
    CHECK_THROWS_AS(dpgadmm_step(p, wrong, cfg), DimensionMismatch);
  }

  TEST_CASE("identical configurations produce identical runs") {
    const auto inst = generate_instance<double>(5, 9);
    const auto p = make_calib_problem(inst);
    SolverConfig<double> cfg;
    cfg.variant = Variant::DpGadmm;
    cfg.alpha = 1.5;
    cfg.beta = 1.0;
    cfg.weights = ProximalWeights<double>::scaled_identity(25, 25, 2.0, 2.0);
    cfg.tol = 1e-6;

    const auto u0 = IterateState<double>::zero(25, 25, 25);
    const auto r1 = run(p, u0, cfg);
    const auto r2 = run(p, u0, cfg);
    CHECK(r1.iterations == r2.iterations);
    CHECK(r1.converged == r2.converged);
    REQUIRE(r1.trace.size() == r2.trace.size());
    for (size_t k = 0; k < r1.trace.size(); ++k) {
      CHECK(r1.trace[k].iter == r2.trace[k].iter);
      CHECK(r1.trace[k].objective == r2.trace[k].objective);
      CHECK(r1.trace[k].primal_residual == r2.trace[k].primal_residual);
      CHECK(r1.trace[k].kkt_residual == r2.trace[k].kkt_residual);
      CHECK(r1.trace[k].step_sq_h0 == r2.trace[k].step_sq_h0);
      CHECK(r1.trace[k].dist_sq_metric == r2.trace[k].dist_sq_metric);
      CHECK(r1.trace[k].cert_lhs == r2.trace[k].cert_lhs);
      CHECK(r1.trace[k].cert_rhs == r2.trace[k].cert_rhs);
    }
    CHECK((r1.final.x - r2.final.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((r1.final.y - r2.final.y).cwiseAbs().maxCoeff() == 0.0);
    CHECK((r1.final.lambda - r2.final.lambda).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("preferred reporting metric follows the variant family") {
    const auto p = toy_qp_instance<double>();
    auto cfg = toy_config(Variant::DpGadmm, 1.5, 1.0, 1.0, 1.0);
    CHECK(preferred_rate_metric(cfg, p.coupling).tag == MetricTag::HAlpha);
    cfg = toy_config(Variant::PGadmm, 1.5, 1.0, 1.0, 0.0);
    CHECK(preferred_rate_metric(cfg, p.coupling).tag == MetricTag::GammaAlpha);
    cfg = toy_config(Variant::Admm, 1.0, 1.0, 0.0, 0.0);
    CHECK(preferred_rate_metric(cfg, p.coupling).tag == MetricTag::GammaAlpha);
  }
}
