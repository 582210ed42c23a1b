#include <doctest.h>

#include <cmath>

#include "gadmm/problem.hpp"
#include "gadmm/rng.hpp"
#include "gadmm/types.hpp"

using namespace gadmm;

namespace {

// Toy oracle deliberately violating the x-subproblem first-order condition.
class BrokenOracle final : public BlockOracle<double> {
 public:
  using Vec = Vector<double>;

  Vec solve_x(const Vec&, const Vec&, double, const WeightMatrix<double>&,
              const Vec& x_prev) const override {
    return x_prev;  // ignores the data; not a minimizer in general
  }
  Vec solve_y(const Vec& lambda, const Vec& x_new, const Vec& y_prev, double alpha, double beta,
              const WeightMatrix<double>& g2) const override {
    return inner_.solve_y(lambda, x_new, y_prev, alpha, beta, g2);
  }
  double objective(const Vec& x, const Vec& y) const override { return inner_.objective(x, y); }
  Vec subgradient_f(const Vec& x) const override { return inner_.subgradient_f(x); }
  Vec subgradient_g(const Vec& y) const override { return inner_.subgradient_g(y); }
  Vec project_x(const Vec& v) const override { return v; }
  Vec project_y(const Vec& v) const override { return v; }

 private:
  ToyQpOracle<double> inner_;
};

}  // namespace

TEST_SUITE("oracles") {
  TEST_CASE("weight matrix factories and spectra") {
    const auto zero = WeightMatrix<double>::zero(3);
    CHECK(zero.is_zero());
    CHECK(zero.spectral_norm() == 0.0);
    CHECK_FALSE(zero.strictly_positive_definite());

    const auto ident = WeightMatrix<double>::scaled_identity(3, 2.0);
    CHECK(ident.is_scaled_identity());
    CHECK(ident.identity_scale() == 2.0);
    CHECK(ident.spectral_norm() == 2.0);
    CHECK(ident.lambda_min() == 2.0);
    CHECK(ident.strictly_positive_definite());
    Vector<double> v(3);
    v << 1.0, -2.0, 0.5;
    CHECK((ident.apply(v) - 2.0 * v).norm() == 0.0);
    CHECK(ident.quad(v) == doctest::Approx(2.0 * v.squaredNorm()).epsilon(1e-15));

    Matrix<double> g(2, 2);
    g << 2.0, 1.0, 1.0, 2.0;
    const auto dense = WeightMatrix<double>::dense(g);
    CHECK_FALSE(dense.is_scaled_identity());
    CHECK(dense.spectral_norm() == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(dense.lambda_min() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dense.strictly_positive_definite());
    Vector<double> w(2);
    w << 1.0, 1.0;
    CHECK(dense.quad(w) == doctest::Approx(6.0).epsilon(1e-14));
    CHECK((dense.apply(w) - g * w).norm() == 0.0);
    CHECK((dense.to_dense() - g).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(dense.identity_scale(), OracleFailure);
  }

  TEST_CASE("weight matrix rejects invalid inputs") {
    CHECK_THROWS_AS(WeightMatrix<double>::scaled_identity(0, 1.0), DimensionMismatch);
    CHECK_THROWS_AS(WeightMatrix<double>::scaled_identity(2, -1.0), InvalidWeights);

    Matrix<double> asym(2, 2);
    asym << 1.0, 0.5, 0.0, 1.0;
    CHECK_THROWS_AS(WeightMatrix<double>::dense(asym), InvalidWeights);

    Matrix<double> indef(2, 2);
    indef << -1.0, 0.0, 0.0, 1.0;
    CHECK_THROWS_AS(WeightMatrix<double>::dense(indef), InvalidWeights);

    Matrix<double> rect(2, 3);
    rect.setZero();
    CHECK_THROWS_AS(WeightMatrix<double>::dense(rect), DimensionMismatch);

    const auto ok = WeightMatrix<double>::scaled_identity(2, 1.0);
    Vector<double> wrong(3);
    wrong.setZero();
    CHECK_THROWS_AS(ok.apply(wrong), DimensionMismatch);
  }

  TEST_CASE("coupling matrix norms and rank") {
    const auto neg_ident = CouplingMatrix<double>::scaled_identity(4, -1.0);
    CHECK(neg_ident.spectral_norm() == 1.0);
    CHECK(neg_ident.full_column_rank());
    Vector<double> v(4);
    v << 1.0, 2.0, 3.0, 4.0;
    CHECK((neg_ident.apply(v) + v).norm() == 0.0);
    CHECK((neg_ident.apply_transpose(v) + v).norm() == 0.0);

    Matrix<double> swap(2, 2);
    swap << 0.0, 1.0, 1.0, 0.0;
    const auto dense = CouplingMatrix<double>::dense(swap);
    CHECK(dense.spectral_norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dense.full_column_rank());

    Matrix<double> rank1(2, 2);
    rank1 << 1.0, 1.0, 1.0, 1.0;
    CHECK_FALSE(CouplingMatrix<double>::dense(rank1).full_column_rank());
    CHECK(CouplingMatrix<double>::dense(rank1).spectral_norm() ==
          doctest::Approx(2.0).epsilon(1e-12));

    Matrix<double> tall(3, 2);
    tall << 1.0, 0.0, 0.0, 1.0, 0.0, 0.0;
    const auto tall_c = CouplingMatrix<double>::dense(tall);
    CHECK(tall_c.rows() == 3);
    CHECK(tall_c.cols() == 2);
    CHECK(tall_c.full_column_rank());
    Vector<double> u3(3);
    u3 << 1.0, 2.0, 3.0;
    CHECK((tall_c.apply_transpose(u3) - tall.transpose() * u3).norm() == 0.0);
  }

  TEST_CASE("toy instance structure and reference point") {
    const auto p = toy_qp_instance<double>();
    CHECK(p.coupling.n() == 1);
    CHECK(p.coupling.m() == 1);
    CHECK(p.coupling.l() == 1);
    CHECK(p.coupling.dimensions_consistent());
    CHECK(p.coupling.b_full_column_rank());
    REQUIRE(p.reference_solution.has_value());
    const auto& star = *p.reference_solution;
    CHECK(star.x(0) == 1.5);
    CHECK(star.y(0) == 1.5);
    CHECK(star.lambda(0) == 0.5);

    Vector<double> x(1), y(1);
    x << 1.5;
    y << 1.5;
    CHECK(p.oracle->objective(x, y) == doctest::Approx(0.25).epsilon(1e-15));

    // Stationarity of the reference: f'(x*) - A'l* = 0 and g'(y*) - B'l* = 0.
    CHECK(std::abs(p.oracle->subgradient_f(star.x)(0) - star.lambda(0)) <= 1e-15);
    CHECK(std::abs(p.oracle->subgradient_g(star.y)(0) + star.lambda(0)) <= 1e-15);
    CHECK(p.coupling.primal_residual_vector(star.x, star.y).norm() <= 1e-15);

    Vector<double> any(1);
    any << -7.25;
    CHECK(p.oracle->project_x(any)(0) == -7.25);
    CHECK(p.oracle->project_y(any)(0) == -7.25);
  }

  TEST_CASE("toy subproblem closed forms") {
    const ToyQpOracle<double> oracle;
    Vector<double> lambda(1), y(1), x_prev(1), y_prev(1), x_new(1);
    lambda << 0.3;
    y << 0.7;
    x_prev << 0.2;
    const double beta = 0.8;
    const auto g_half = WeightMatrix<double>::scaled_identity(1, 0.5);

    const double expected_x = (1.0 + 0.3 + 0.8 * 0.7 + 0.5 * 0.2) / (1.0 + 0.8 + 0.5);
    CHECK(oracle.solve_x(lambda, y, beta, g_half, x_prev)(0) ==
          doctest::Approx(expected_x).epsilon(1e-15));

    y_prev << 0.4;
    x_new << 0.9;
    const double alpha = 1.3;
    const double expected_y =
        (2.0 - 0.3 + 0.8 * (1.3 * 0.9 + (1.0 - 1.3) * 0.4) + 0.5 * 0.4) / (1.0 + 0.8 + 0.5);
    CHECK(oracle.solve_y(lambda, x_new, y_prev, alpha, beta, g_half)(0) ==
          doctest::Approx(expected_y).epsilon(1e-15));
  }

  TEST_CASE("validation passes on the toy instance") {
    const auto p = toy_qp_instance<double>();
    const ValidationReport report = validate_problem(p);
    for (const auto& check : report.checks) {
      INFO(check.name, ": ", check.detail);
      CHECK(check.passed);
    }
    CHECK(report.ok());
    CHECK(report.b_full_column_rank);
    CHECK(report.category == ValidationCategory::None);
  }

  TEST_CASE("validation flags dimension mismatches") {
    ProblemInstance<double> p;
    Matrix<double> a(2, 3), b(2, 1);
    a.setZero();
    b.setZero();
    p.coupling = {CouplingMatrix<double>::dense(a), CouplingMatrix<double>::dense(b),
                  Vector<double>::Zero(3)};  // b has length 3, rows are 2
    p.oracle = std::make_shared<ToyQpOracle<double>>();
    const ValidationReport report = validate_problem(p);
    CHECK_FALSE(report.ok());
    CHECK(report.category == ValidationCategory::DimensionMismatch);
  }

  TEST_CASE("validation flags a broken subproblem solver") {
    ProblemInstance<double> p = toy_qp_instance<double>();
    p.oracle = std::make_shared<BrokenOracle>();
    const ValidationReport report = validate_problem(p);
    CHECK_FALSE(report.ok());
    CHECK(report.category == ValidationCategory::OracleInconsistent);
  }

  TEST_CASE("projection laws on random probes") {
    const auto p = toy_qp_instance<double>();
    Xoshiro256PlusPlus rng(42);
    for (int k = 0; k < 20; ++k) {
      Vector<double> v1(1), v2(1);
      v1 << 4.0 * rng.uniform01() - 2.0;
      v2 << 4.0 * rng.uniform01() - 2.0;
      const auto p1 = p.oracle->project_x(v1);
      CHECK((p.oracle->project_x(p1) - p1).norm() <= 1e-12 * (1.0 + v1.norm()));
      CHECK((p1 - p.oracle->project_x(v2)).norm() <= (v1 - v2).norm() + 1e-12);
    }
  }

  TEST_CASE("iterate algebra") {
    const auto a = IterateState<double>::constant(2, 3, 2, 1.0);
    const auto b = IterateState<double>::zero(2, 3, 2);
    CHECK(a.squared_norm() == doctest::Approx(7.0).epsilon(1e-15));
    CHECK(distance(a, b) == doctest::Approx(std::sqrt(7.0)).epsilon(1e-15));
    const auto d = a - b;
    CHECK(d.x.size() == 2);
    CHECK(d.squared_norm() == doctest::Approx(7.0).epsilon(1e-15));
    CHECK(a.all_finite());

    const auto wrong = IterateState<double>::zero(3, 3, 2);
    CHECK_THROWS_AS((void)(a - wrong), DimensionMismatch);

    auto bad = a;
    bad.lambda(0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(bad.all_finite());
  }

  TEST_CASE("uniform generator is deterministic and in range") {
    Xoshiro256PlusPlus r1(123), r2(123), r3(124);
    bool identical = true, differs = false;
    for (int i = 0; i < 1000; ++i) {
      const double a = r1.uniform01();
      const double b = r2.uniform01();
      const double c = r3.uniform01();
      identical = identical && (a == b);
      differs = differs || (a != c);
      CHECK(a >= 0.0);
      CHECK(a < 1.0);
    }
    CHECK(identical);
    CHECK(differs);
  }
}
