#pragma once

#include <memory>

#include "gadmm/problem.hpp"
#include "gadmm/rng.hpp"
#include "gadmm/solver.hpp"
#include "gadmm/types.hpp"

namespace gadmm {

// Nearest-correlation-style calibration problem:
//   min (1/2)|X - C|^2 + (1/2)|Y - C|^2
//   s.t. X - Y = 0, X positive semidefinite, H_L <= Y <= H_U elementwise,
// vectorized column-major so that A = I, B = -I, b = 0 at dimension n^2.
template <typename Scalar>
struct CalibInstance {
  Eigen::Index n = 0;
  Matrix<Scalar> C;
  Matrix<Scalar> H_L;
  Matrix<Scalar> H_U;
};

template <typename Scalar>
Vector<Scalar> vec_from_mat(const Matrix<Scalar>& m) {
  return Eigen::Map<const Vector<Scalar>>(m.data(), m.size());
}

template <typename Scalar>
Matrix<Scalar> mat_from_vec(const Vector<Scalar>& v, Eigen::Index n) {
  if (v.size() != n * n) throw DimensionMismatch("vector does not reshape to an n x n matrix");
  return Eigen::Map<const Matrix<Scalar>>(v.data(), n, n);
}

// Data matrix: C = (R' + R) - ones + eye for R with uniform [0, 1) entries,
// filled row by row from a seeded xoshiro256++ stream. Diagonal entries land
// in (0, 2), off-diagonal entries in (-1, 1). Bounds are +-0.1 elementwise.
template <typename Scalar>
CalibInstance<Scalar> generate_instance(Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw DimensionMismatch("calibration instance needs n >= 1");
  Xoshiro256PlusPlus rng(seed);
  Matrix<Scalar> r(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) r(i, j) = Scalar(rng.uniform01());
  CalibInstance<Scalar> inst;
  inst.n = n;
  inst.C = r.transpose() + r - Matrix<Scalar>::Ones(n, n) + Matrix<Scalar>::Identity(n, n);
  inst.H_U = Matrix<Scalar>::Constant(n, n, Scalar(0.1));
  inst.H_L = -inst.H_U;
  return inst;
}

// Frobenius projection onto the positive semidefinite cone: symmetrize, then
// clip negative eigenvalues to zero.
template <typename Scalar>
Matrix<Scalar> psd_project(const Matrix<Scalar>& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("cone projection needs a square matrix");
  const Matrix<Scalar> sym = Scalar(0.5) * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym);
  if (es.info() != Eigen::Success) throw EigenFailure("cone projection eigendecomposition failed");
  const Vector<Scalar> clipped = es.eigenvalues().cwiseMax(Scalar(0));
  const Matrix<Scalar> out =
      es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  return Scalar(0.5) * (out + out.transpose());
}

// Elementwise box projection onto [lower, upper].
template <typename Scalar>
Matrix<Scalar> box_project(const Matrix<Scalar>& m, const Matrix<Scalar>& lower,
                           const Matrix<Scalar>& upper) {
  if (m.rows() != lower.rows() || m.cols() != lower.cols() || m.rows() != upper.rows() ||
      m.cols() != upper.cols())
    throw DimensionMismatch("box projection bounds do not match the matrix");
  return m.cwiseMax(lower).cwiseMin(upper);
}

// Closed-form subproblem solves for the calibration objective. Both blocks
// reduce to a scaled average followed by one projection:
//   x: P_psd[(C + L + beta Y + g1 X_prev) / (1 + beta + g1)]
//   y: P_box[(C - L + beta (alpha X_new + (1 - alpha) Y_prev) + g2 Y_prev)
//            / (1 + beta + g2)].
// Proximal weights must be in scaled-identity form for these formulas.
template <typename Scalar>
class CalibOracle final : public BlockOracle<Scalar> {
 public:
  using Vec = Vector<Scalar>;
  using Mat = Matrix<Scalar>;

  explicit CalibOracle(CalibInstance<Scalar> inst) : inst_(std::move(inst)) {}

  Vec solve_x(const Vec& lambda, const Vec& y_anchor, Scalar beta, const WeightMatrix<Scalar>& g1,
              const Vec& x_prev) const override {
    const Scalar g = identity_scale_or_throw(g1);
    const Mat arg = (inst_.C + mat_from_vec(lambda, inst_.n) + beta * mat_from_vec(y_anchor, inst_.n) +
                     g * mat_from_vec(x_prev, inst_.n)) /
                    (Scalar(1) + beta + g);
    return vec_from_mat<Scalar>(psd_project(arg));
  }

  Vec solve_y(const Vec& lambda, const Vec& x_new, const Vec& y_prev, Scalar alpha, Scalar beta,
              const WeightMatrix<Scalar>& g2) const override {
    const Scalar g = identity_scale_or_throw(g2);
    const Mat anchor = alpha * mat_from_vec(x_new, inst_.n) +
                       (Scalar(1) - alpha) * mat_from_vec(y_prev, inst_.n);
    const Mat arg = (inst_.C - mat_from_vec(lambda, inst_.n) + beta * anchor +
                     g * mat_from_vec(y_prev, inst_.n)) /
                    (Scalar(1) + beta + g);
    return vec_from_mat<Scalar>(box_project(arg, inst_.H_L, inst_.H_U));
  }

  Scalar objective(const Vec& x, const Vec& y) const override {
    const Mat dx = mat_from_vec(x, inst_.n) - inst_.C;
    const Mat dy = mat_from_vec(y, inst_.n) - inst_.C;
    return Scalar(0.5) * dx.squaredNorm() + Scalar(0.5) * dy.squaredNorm();
  }

  Vec subgradient_f(const Vec& x) const override { return x - vec_from_mat<Scalar>(inst_.C); }
  Vec subgradient_g(const Vec& y) const override { return y - vec_from_mat<Scalar>(inst_.C); }

  Vec project_x(const Vec& v) const override {
    return vec_from_mat<Scalar>(psd_project(mat_from_vec(v, inst_.n)));
  }

  Vec project_y(const Vec& v) const override {
    return vec_from_mat<Scalar>(box_project(mat_from_vec(v, inst_.n), inst_.H_L, inst_.H_U));
  }

  const CalibInstance<Scalar>& instance() const { return inst_; }

 private:
  static Scalar identity_scale_or_throw(const WeightMatrix<Scalar>& w) {
    if (!w.is_scaled_identity())
      throw OracleFailure("calibration subproblems need scaled-identity proximal weights");
    return w.identity_scale();
  }

  CalibInstance<Scalar> inst_;
};

// Factory with the parameter checks of the benchmark configuration. The
// returned oracle reads beta, alpha and the weights from each call.
template <typename Scalar>
std::shared_ptr<const BlockOracle<Scalar>> calib_oracles(const CalibInstance<Scalar>& inst,
                                                         Scalar beta, Scalar alpha, Scalar g1,
                                                         Scalar g2) {
  if (!(beta > Scalar(0))) throw VariantConfigConflict("calibration oracle needs beta > 0");
  if (!(alpha > Scalar(0) && alpha < Scalar(2)))
    throw VariantConfigConflict("calibration oracle needs alpha in (0, 2)");
  if (g1 < Scalar(0) || g2 < Scalar(0))
    throw VariantConfigConflict("calibration oracle needs nonnegative proximal scales");
  return std::make_shared<CalibOracle<Scalar>>(inst);
}

template <typename Scalar>
ProblemInstance<Scalar> make_calib_problem(const CalibInstance<Scalar>& inst) {
  const Eigen::Index dim = inst.n * inst.n;
  LinearCoupling<Scalar> coupling{CouplingMatrix<Scalar>::scaled_identity(dim, Scalar(1)),
                                  CouplingMatrix<Scalar>::scaled_identity(dim, Scalar(-1)),
                                  Vector<Scalar>::Zero(dim)};
  return {coupling, std::make_shared<CalibOracle<Scalar>>(inst), std::nullopt};
}

// Alternating projections with correction terms (Dykstra) onto the
// intersection of the cone and the box; computes the projection of C.
template <typename Scalar>
struct ReferenceSolution {
  Matrix<Scalar> Z_star;
  long iterations_used = 0;
  Scalar residual = Scalar(0);
};

template <typename Scalar>
ReferenceSolution<Scalar> reference_solution(const CalibInstance<Scalar>& inst,
                                             long max_iter = 100000, Scalar tol = Scalar(1e-12)) {
  using Mat = Matrix<Scalar>;
  Mat x = inst.C;
  Mat p = Mat::Zero(inst.n, inst.n);
  Mat q = Mat::Zero(inst.n, inst.n);
  Mat y_prev = Mat::Zero(inst.n, inst.n);
  for (long it = 1; it <= max_iter; ++it) {
    const Mat y = psd_project<Scalar>(x + p);
    p = x + p - y;
    const Mat x_next = box_project<Scalar>(y + q, inst.H_L, inst.H_U);
    q = y + q - x_next;
    Scalar inc = std::sqrt((x_next - x).squaredNorm());
    inc = std::max(inc, std::sqrt((x_next - y).squaredNorm()));
    if (it > 1) inc = std::max(inc, std::sqrt((y - y_prev).squaredNorm()));
    x = x_next;
    y_prev = y;
    if (inc < tol) return {x, it, inc};
  }
  throw NotConverged("alternating projections did not reach the requested tolerance");
}

// Reference iterate for the vectorized two-block form. The multiplier is
// recovered as Z* - C, which satisfies the optimality system whenever the
// cone constraint is inactive at Z*; otherwise a high-accuracy double
// proximal run recovers it.
template <typename Scalar>
IterateState<Scalar> reference_iterate(const CalibInstance<Scalar>& inst,
                                       const ReferenceSolution<Scalar>& ref) {
  const Vector<Scalar> z = vec_from_mat<Scalar>(ref.Z_star);
  const ProblemInstance<Scalar> p = make_calib_problem(inst);
  IterateState<Scalar> direct{z, z, vec_from_mat<Scalar>(Matrix<Scalar>(ref.Z_star - inst.C))};
  if (kkt_residual(p, direct) < Scalar(1e-6)) return direct;

  SolverConfig<Scalar> cfg;
  cfg.variant = Variant::DpAdmm;
  cfg.alpha = Scalar(1);
  cfg.beta = Scalar(1);
  cfg.weights = ProximalWeights<Scalar>::scaled_identity(z.size(), z.size(), Scalar(1), Scalar(1));
  cfg.tol = Scalar(1e-12);
  cfg.max_iter = 200000;
  cfg.stop_rule = StopRule::RelativeStep;
  const RunResult<Scalar> result =
      run(p, IterateState<Scalar>::zero(z.size(), z.size(), z.size()), cfg);
  IterateState<Scalar> fallback{z, z, result.final.lambda};
  if (kkt_residual(p, fallback) < Scalar(1e-6)) return fallback;
  throw NotConverged("could not recover an accurate multiplier for the reference");
}

// Problem instance with the reference solution attached.
template <typename Scalar>
ProblemInstance<Scalar> make_calib_problem_with_reference(const CalibInstance<Scalar>& inst,
                                                          long max_iter = 100000,
                                                          Scalar tol = Scalar(1e-12)) {
  ProblemInstance<Scalar> p = make_calib_problem(inst);
  const ReferenceSolution<Scalar> ref = reference_solution(inst, max_iter, tol);
  p.reference_solution = reference_iterate(inst, ref);
  return p;
}

}  // namespace gadmm
