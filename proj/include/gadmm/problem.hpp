#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gadmm/rng.hpp"
#include "gadmm/types.hpp"

namespace gadmm {

// Subproblem solves and first-order data for one two-block instance.
// solve_x minimizes f(x) - x'A'lambda + (beta/2)|A x + B y_anchor - b|^2
//                 + (1/2)|x - x_prev|^2_G1 over the x feasible set.
// solve_y minimizes g(y) - y'B'lambda
//                 + (beta/2)|alpha A x_new + (1-alpha)(b - B y_prev) + B y - b|^2
//                 + (1/2)|y - y_prev|^2_G2 over the y feasible set.
template <typename Scalar>
class BlockOracle {
 public:
  using Vec = Vector<Scalar>;

  virtual ~BlockOracle() = default;

  virtual Vec solve_x(const Vec& lambda, const Vec& y_anchor, Scalar beta,
                      const WeightMatrix<Scalar>& g1, const Vec& x_prev) const = 0;
  virtual Vec solve_y(const Vec& lambda, const Vec& x_new, const Vec& y_prev, Scalar alpha,
                      Scalar beta, const WeightMatrix<Scalar>& g2) const = 0;
  virtual Scalar objective(const Vec& x, const Vec& y) const = 0;
  virtual Vec subgradient_f(const Vec& x) const = 0;
  virtual Vec subgradient_g(const Vec& y) const = 0;
  virtual Vec project_x(const Vec& v) const = 0;
  virtual Vec project_y(const Vec& v) const = 0;
};

// Immutable problem description: constraint data, oracle, and an optional
// reference solution used for distance reporting and certificates.
template <typename Scalar>
struct ProblemInstance {
  LinearCoupling<Scalar> coupling;
  std::shared_ptr<const BlockOracle<Scalar>> oracle;
  std::optional<IterateState<Scalar>> reference_solution;
};

// Value of the x subproblem objective at x (used by oracle validation and by
// independent minimizer cross-checks). The g(y_anchor) constant inside
// objective() cancels in all difference-based uses.
template <typename Scalar>
Scalar x_subproblem_value(const ProblemInstance<Scalar>& p, const Vector<Scalar>& x,
                          const Vector<Scalar>& lambda, const Vector<Scalar>& y_anchor,
                          Scalar beta, const WeightMatrix<Scalar>& g1,
                          const Vector<Scalar>& x_prev) {
  const auto& c = p.coupling;
  const Vector<Scalar> r = c.A.apply(x) + c.B.apply(y_anchor) - c.b;
  return p.oracle->objective(x, y_anchor) - x.dot(c.A.apply_transpose(lambda)) +
         Scalar(0.5) * beta * r.squaredNorm() + Scalar(0.5) * g1.quad(x - x_prev);
}

template <typename Scalar>
Scalar y_subproblem_value(const ProblemInstance<Scalar>& p, const Vector<Scalar>& y,
                          const Vector<Scalar>& lambda, const Vector<Scalar>& x_new,
                          const Vector<Scalar>& y_prev, Scalar alpha, Scalar beta,
                          const WeightMatrix<Scalar>& g2) {
  const auto& c = p.coupling;
  const Vector<Scalar> r = alpha * c.A.apply(x_new) + (Scalar(1) - alpha) * (c.b - c.B.apply(y_prev)) +
                           c.B.apply(y) - c.b;
  return p.oracle->objective(x_new, y) - y.dot(c.B.apply_transpose(lambda)) +
         Scalar(0.5) * beta * r.squaredNorm() + Scalar(0.5) * g2.quad(y - y_prev);
}

// Scalar quadratic program used as the smallest end-to-end instance:
//   min (1/2)(x-1)^2 + (1/2)(y-2)^2  subject to  x - y = 0,
// with solution (x, y, lambda) = (1.5, 1.5, 0.5).
template <typename Scalar>
class ToyQpOracle final : public BlockOracle<Scalar> {
 public:
  using Vec = Vector<Scalar>;

  Vec solve_x(const Vec& lambda, const Vec& y_anchor, Scalar beta, const WeightMatrix<Scalar>& g1,
              const Vec& x_prev) const override {
    const Scalar g = g1.quad(unit());
    Vec x(1);
    x(0) = (Scalar(1) + lambda(0) + beta * y_anchor(0) + g * x_prev(0)) / (Scalar(1) + beta + g);
    return x;
  }

  Vec solve_y(const Vec& lambda, const Vec& x_new, const Vec& y_prev, Scalar alpha, Scalar beta,
              const WeightMatrix<Scalar>& g2) const override {
    const Scalar g = g2.quad(unit());
    Vec y(1);
    y(0) = (Scalar(2) - lambda(0) + beta * (alpha * x_new(0) + (Scalar(1) - alpha) * y_prev(0)) +
            g * y_prev(0)) /
           (Scalar(1) + beta + g);
    return y;
  }

  Scalar objective(const Vec& x, const Vec& y) const override {
    const Scalar dx = x(0) - Scalar(1);
    const Scalar dy = y(0) - Scalar(2);
    return Scalar(0.5) * dx * dx + Scalar(0.5) * dy * dy;
  }

  Vec subgradient_f(const Vec& x) const override {
    Vec g(1);
    g(0) = x(0) - Scalar(1);
    return g;
  }

  Vec subgradient_g(const Vec& y) const override {
    Vec g(1);
    g(0) = y(0) - Scalar(2);
    return g;
  }

  Vec project_x(const Vec& v) const override { return v; }
  Vec project_y(const Vec& v) const override { return v; }

 private:
  static Vec unit() {
    Vec e(1);
    e(0) = Scalar(1);
    return e;
  }
};

template <typename Scalar>
ProblemInstance<Scalar> toy_qp_instance() {
  Matrix<Scalar> a(1, 1), b(1, 1);
  a(0, 0) = Scalar(1);
  b(0, 0) = Scalar(-1);
  LinearCoupling<Scalar> coupling{CouplingMatrix<Scalar>::dense(a), CouplingMatrix<Scalar>::dense(b),
                                  Vector<Scalar>::Zero(1)};
  IterateState<Scalar> star{Vector<Scalar>::Constant(1, Scalar(1.5)),
                            Vector<Scalar>::Constant(1, Scalar(1.5)),
                            Vector<Scalar>::Constant(1, Scalar(0.5))};
  return {coupling, std::make_shared<ToyQpOracle<Scalar>>(), star};
}

enum class ValidationCategory { None, DimensionMismatch, OracleInconsistent, ReferenceInconsistent };

struct ValidationCheck {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  ValidationCategory category = ValidationCategory::None;
  bool b_full_column_rank = false;

  bool ok() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

namespace detail {

// Feasible-direction derivative check: the minimizer returned by an oracle
// must not admit a descent direction inside the feasible set.
template <typename Scalar, typename ObjectiveFn, typename ProjectFn>
bool first_order_ok(const Vector<Scalar>& z, const ObjectiveFn& value, const ProjectFn& project,
                    Xoshiro256PlusPlus& rng, std::string& detail) {
  const Scalar h = Scalar(1e-6) * (Scalar(1) + std::sqrt(z.squaredNorm()));
  const Scalar base = value(z);
  // Scale-aware slope bound: central differences of nearly equal objective
  // values carry absolute noise of order eps * |value|.
  const Scalar bound = Scalar(1e-6) * (Scalar(1) + std::abs(base));
  for (int dir = 0; dir < 8; ++dir) {
    Vector<Scalar> d(z.size());
    for (Eigen::Index i = 0; i < d.size(); ++i)
      d(i) = Scalar(2) * Scalar(rng.uniform01()) - Scalar(1);
    const Scalar dn = std::sqrt(d.squaredNorm());
    if (dn == Scalar(0)) continue;
    d /= dn;
    const Vector<Scalar> fwd = project(z + h * d);
    const Vector<Scalar> bwd = project(z - h * d);
    const bool interior = (fwd - (z + h * d)).cwiseAbs().maxCoeff() <=
                              Scalar(1e-14) * (Scalar(1) + h) &&
                          (bwd - (z - h * d)).cwiseAbs().maxCoeff() <= Scalar(1e-14) * (Scalar(1) + h);
    Scalar slope;
    if (interior) {
      // At an interior minimizer the central difference must vanish, so its
      // magnitude is the quantity to test.
      slope = -std::abs((value(z + h * d) - value(z - h * d)) / (Scalar(2) * h));
    } else {
      const Vector<Scalar> step = fwd - z;
      const Scalar sn = std::sqrt(step.squaredNorm());
      if (sn <= Scalar(1e-3) * h) continue;  // no meaningful feasible movement
      slope = (value(fwd) - base) / sn;
    }
    if (slope < -bound) {
      detail = "descent direction found with slope " + std::to_string(static_cast<double>(slope));
      return false;
    }
  }
  return true;
}

}  // namespace detail

// Structural and behavioral diagnostics for a problem instance: dimension
// consistency, rank of B, reference accuracy, projection laws, and the
// first-order conditions of both subproblem solvers on random probes.
// kkt_residual is declared in metrics.hpp; validation of the reference point
// lives there as well, so this check only covers what the oracle can answer.
template <typename Scalar>
ValidationReport validate_problem(const ProblemInstance<Scalar>& p, int probes = 5,
                                  std::uint64_t seed = 0x5eedu) {
  using Vec = Vector<Scalar>;
  ValidationReport report;
  Xoshiro256PlusPlus rng(seed);

  if (!p.coupling.dimensions_consistent()) {
    report.checks.push_back({"coupling_dimensions", false, "A, B, b disagree on dimensions"});
    report.category = ValidationCategory::DimensionMismatch;
    return report;
  }
  report.checks.push_back({"coupling_dimensions", true, ""});
  report.b_full_column_rank = p.coupling.b_full_column_rank();

  const Eigen::Index n = p.coupling.n();
  const Eigen::Index m = p.coupling.m();
  const Eigen::Index l = p.coupling.l();

  if (p.reference_solution) {
    const auto& r = *p.reference_solution;
    const bool dims_ok = r.x.size() == n && r.y.size() == m && r.lambda.size() == l;
    report.checks.push_back({"reference_dimensions", dims_ok, ""});
    if (!dims_ok) {
      report.category = ValidationCategory::DimensionMismatch;
      return report;
    }
  }

  auto random_vec = [&rng](Eigen::Index size) {
    Vec v(size);
    for (Eigen::Index i = 0; i < size; ++i)
      v(i) = Scalar(2) * Scalar(rng.uniform01()) - Scalar(1);
    return v;
  };

  bool projections_ok = true;
  std::string projection_detail;
  for (int k = 0; k < probes && projections_ok; ++k) {
    for (bool x_side : {true, false}) {
      const Eigen::Index dim = x_side ? n : m;
      const Vec v1 = random_vec(dim);
      const Vec v2 = random_vec(dim);
      auto proj = [&](const Vec& v) { return x_side ? p.oracle->project_x(v) : p.oracle->project_y(v); };
      const Vec p1 = proj(v1);
      const Scalar idem = std::sqrt((proj(p1) - p1).squaredNorm());
      if (idem > Scalar(1e-12) * (Scalar(1) + std::sqrt(v1.squaredNorm()))) {
        projections_ok = false;
        projection_detail = "projection is not idempotent";
        break;
      }
      const Scalar lhs = std::sqrt((p1 - proj(v2)).squaredNorm());
      const Scalar rhs = std::sqrt((v1 - v2).squaredNorm()) + Scalar(1e-12);
      if (lhs > rhs) {
        projections_ok = false;
        projection_detail = "projection is expansive";
        break;
      }
    }
  }
  report.checks.push_back({"projection_laws", projections_ok, projection_detail});
  if (!projections_ok) report.category = ValidationCategory::OracleInconsistent;

  // First-order conditions of the two subproblem solvers.
  const WeightMatrix<Scalar> g1 = WeightMatrix<Scalar>::scaled_identity(n, Scalar(1));
  const WeightMatrix<Scalar> g2 = WeightMatrix<Scalar>::scaled_identity(m, Scalar(1));
  const WeightMatrix<Scalar> g1_zero = WeightMatrix<Scalar>::zero(n);
  const WeightMatrix<Scalar> g2_zero = WeightMatrix<Scalar>::zero(m);
  bool solvers_ok = true;
  std::string solver_detail;
  for (int k = 0; k < probes && solvers_ok; ++k) {
    const Vec lambda = random_vec(l);
    const Vec y_anchor = p.oracle->project_y(random_vec(m));
    const Vec x_prev = p.oracle->project_x(random_vec(n));
    const Vec y_prev = y_anchor;
    const Scalar beta = k % 2 == 0 ? Scalar(1) : Scalar(0.7);
    const Scalar alpha = k % 2 == 0 ? Scalar(1) : Scalar(1.3);
    const WeightMatrix<Scalar>& wx = k % 2 == 0 ? g1_zero : g1;
    const WeightMatrix<Scalar>& wy = k % 2 == 0 ? g2_zero : g2;

    const Vec x_new = p.oracle->solve_x(lambda, y_anchor, beta, wx, x_prev);
    auto x_value = [&](const Vec& x) {
      return x_subproblem_value(p, x, lambda, y_anchor, beta, wx, x_prev);
    };
    auto x_proj = [&](const Vec& v) { return p.oracle->project_x(v); };
    if (!detail::first_order_ok<Scalar>(x_new, x_value, x_proj, rng, solver_detail)) {
      solvers_ok = false;
      solver_detail = "solve_x: " + solver_detail;
      break;
    }

    const Vec y_new = p.oracle->solve_y(lambda, x_new, y_prev, alpha, beta, wy);
    auto y_value = [&](const Vec& y) {
      return y_subproblem_value(p, y, lambda, x_new, y_prev, alpha, beta, wy);
    };
    auto y_proj = [&](const Vec& v) { return p.oracle->project_y(v); };
    if (!detail::first_order_ok<Scalar>(y_new, y_value, y_proj, rng, solver_detail)) {
      solvers_ok = false;
      solver_detail = "solve_y: " + solver_detail;
      break;
    }
  }
  report.checks.push_back({"subproblem_first_order", solvers_ok, solver_detail});
  if (!solvers_ok && report.category == ValidationCategory::None)
    report.category = ValidationCategory::OracleInconsistent;

  return report;
}

}  // namespace gadmm
