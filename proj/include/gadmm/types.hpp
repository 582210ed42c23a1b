#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "gadmm/errors.hpp"

namespace gadmm {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Symmetric positive semidefinite weight block. Either a dense matrix or a
// compact scaled identity, so that identity-weighted runs at large dimension
// never materialize a dim x dim matrix.
template <typename Scalar>
class WeightMatrix {
 public:
  using Vec = Vector<Scalar>;
  using Mat = Matrix<Scalar>;

  WeightMatrix() = default;

  static WeightMatrix zero(Eigen::Index dim) { return scaled_identity(dim, Scalar(0)); }

  static WeightMatrix scaled_identity(Eigen::Index dim, Scalar scale) {
    if (dim <= 0) throw DimensionMismatch("weight block needs a positive dimension");
    if (!(scale >= Scalar(0))) throw InvalidWeights("scaled-identity weight needs scale >= 0");
    WeightMatrix w;
    w.dim_ = dim;
    w.scale_ = scale;
    w.norm_ = scale;
    w.lambda_min_ = scale;
    return w;
  }

  static WeightMatrix dense(Mat g) {
    WeightMatrix w;
    w.dim_ = g.rows();
    if (g.rows() != g.cols() || g.rows() <= 0)
      throw DimensionMismatch("dense weight block must be square");
    const Scalar scale = std::max(Scalar(1), g.cwiseAbs().maxCoeff());
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale)
      throw InvalidWeights("weight block must be symmetric to 1e-12 relative");
    Eigen::SelfAdjointEigenSolver<Mat> es(Scalar(0.5) * (g + g.transpose()));
    if (es.info() != Eigen::Success) throw EigenFailure("weight eigendecomposition failed");
    w.lambda_min_ = es.eigenvalues().minCoeff();
    w.norm_ = es.eigenvalues().cwiseAbs().maxCoeff();
    if (w.lambda_min_ < Scalar(-1e-12) * w.norm_)
      throw InvalidWeights("weight block must be positive semidefinite");
    w.is_identity_form_ = false;
    w.dense_ = std::move(g);
    return w;
  }

  Eigen::Index dim() const { return dim_; }
  bool is_scaled_identity() const { return is_identity_form_; }

  // Scale of the identity form; only meaningful when is_scaled_identity().
  Scalar identity_scale() const {
    if (!is_identity_form_) throw OracleFailure("weight block is not in scaled-identity form");
    return scale_;
  }

  Vec apply(const Vec& v) const {
    check_dim(v.size());
    if (is_identity_form_) return scale_ * v;
    return dense_ * v;
  }

  Scalar quad(const Vec& v) const {
    check_dim(v.size());
    if (is_identity_form_) return scale_ * v.squaredNorm();
    return v.dot(dense_ * v);
  }

  Scalar spectral_norm() const { return norm_; }
  Scalar lambda_min() const { return lambda_min_; }
  bool is_zero() const { return norm_ == Scalar(0); }

  // Strict positive definiteness with a relative eigenvalue margin.
  bool strictly_positive_definite() const {
    return lambda_min_ > Scalar(1e-10) * norm_ && lambda_min_ > Scalar(0);
  }

  Mat to_dense() const {
    if (is_identity_form_) return scale_ * Mat::Identity(dim_, dim_);
    return dense_;
  }

 private:
  void check_dim(Eigen::Index n) const {
    if (n != dim_) throw DimensionMismatch("weight block applied to a vector of wrong size");
  }

  Eigen::Index dim_ = 0;
  bool is_identity_form_ = true;
  Scalar scale_ = Scalar(0);
  Scalar norm_ = Scalar(0);
  Scalar lambda_min_ = Scalar(0);
  Mat dense_;
};

// Constraint block (A or B). Dense for small instances, scaled identity for
// the vectorized benchmark where A = I and B = -I at dimension n^2.
template <typename Scalar>
class CouplingMatrix {
 public:
  using Vec = Vector<Scalar>;
  using Mat = Matrix<Scalar>;

  CouplingMatrix() = default;

  static CouplingMatrix scaled_identity(Eigen::Index dim, Scalar scale) {
    CouplingMatrix c;
    c.rows_ = dim;
    c.cols_ = dim;
    c.scale_ = scale;
    c.norm_ = std::abs(scale);
    c.full_column_rank_ = scale != Scalar(0);
    return c;
  }

  static CouplingMatrix dense(Mat m) {
    CouplingMatrix c;
    c.rows_ = m.rows();
    c.cols_ = m.cols();
    c.is_identity_form_ = false;
    Eigen::JacobiSVD<Mat> svd(m);
    c.norm_ = svd.singularValues().size() > 0 ? svd.singularValues()(0) : Scalar(0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > Scalar(1e-10) * c.norm_) ++rank;
    c.full_column_rank_ = rank == c.cols_ && c.norm_ > Scalar(0);
    c.dense_ = std::move(m);
    return c;
  }

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }

  Vec apply(const Vec& v) const {
    if (v.size() != cols_) throw DimensionMismatch("coupling block applied to wrong size");
    if (is_identity_form_) return scale_ * v;
    return dense_ * v;
  }

  Vec apply_transpose(const Vec& v) const {
    if (v.size() != rows_) throw DimensionMismatch("coupling transpose applied to wrong size");
    if (is_identity_form_) return scale_ * v;
    return dense_.transpose() * v;
  }

  Scalar spectral_norm() const { return norm_; }
  bool full_column_rank() const { return full_column_rank_; }

  Mat to_dense() const {
    if (is_identity_form_) return scale_ * Mat::Identity(rows_, cols_);
    return dense_;
  }

 private:
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  bool is_identity_form_ = true;
  Scalar scale_ = Scalar(0);
  Scalar norm_ = Scalar(0);
  bool full_column_rank_ = false;
  Mat dense_;
};

// Constraint data of the two-block program: A x + B y = b.
template <typename Scalar>
struct LinearCoupling {
  CouplingMatrix<Scalar> A;
  CouplingMatrix<Scalar> B;
  Vector<Scalar> b;

  Eigen::Index n() const { return A.cols(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index l() const { return A.rows(); }

  bool dimensions_consistent() const {
    return A.rows() == B.rows() && A.rows() == b.size() && A.cols() > 0 && B.cols() > 0;
  }

  bool b_full_column_rank() const { return B.full_column_rank(); }

  Vector<Scalar> primal_residual_vector(const Vector<Scalar>& x, const Vector<Scalar>& y) const {
    return A.apply(x) + B.apply(y) - b;
  }
};

// One point of the solver state space: (x, y, lambda).
template <typename Scalar>
struct IterateState {
  Vector<Scalar> x;
  Vector<Scalar> y;
  Vector<Scalar> lambda;

  static IterateState zero(Eigen::Index n, Eigen::Index m, Eigen::Index l) {
    return {Vector<Scalar>::Zero(n), Vector<Scalar>::Zero(m), Vector<Scalar>::Zero(l)};
  }

  static IterateState constant(Eigen::Index n, Eigen::Index m, Eigen::Index l, Scalar value) {
    return {Vector<Scalar>::Constant(n, value), Vector<Scalar>::Constant(m, value),
            Vector<Scalar>::Constant(l, value)};
  }

  bool all_finite() const { return x.allFinite() && y.allFinite() && lambda.allFinite(); }

  Scalar squared_norm() const { return x.squaredNorm() + y.squaredNorm() + lambda.squaredNorm(); }
};

template <typename Scalar>
IterateState<Scalar> operator-(const IterateState<Scalar>& a, const IterateState<Scalar>& b) {
  if (a.x.size() != b.x.size() || a.y.size() != b.y.size() || a.lambda.size() != b.lambda.size())
    throw DimensionMismatch("iterate difference of mismatched states");
  return {a.x - b.x, a.y - b.y, a.lambda - b.lambda};
}

template <typename Scalar>
Scalar distance(const IterateState<Scalar>& a, const IterateState<Scalar>& b) {
  return std::sqrt((a - b).squared_norm());
}

// Proximal weight pair (G1 for the x block, G2 for the y block).
template <typename Scalar>
struct ProximalWeights {
  WeightMatrix<Scalar> g1;
  WeightMatrix<Scalar> g2;

  static ProximalWeights zero(Eigen::Index n, Eigen::Index m) {
    return {WeightMatrix<Scalar>::zero(n), WeightMatrix<Scalar>::zero(m)};
  }

  static ProximalWeights scaled_identity(Eigen::Index n, Eigen::Index m, Scalar s1, Scalar s2) {
    return {WeightMatrix<Scalar>::scaled_identity(n, s1),
            WeightMatrix<Scalar>::scaled_identity(m, s2)};
  }
};

enum class Variant { Admm, Gadmm, PAdmm, PGadmm, DpAdmm, DpGadmm };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Admm: return "admm";
    case Variant::Gadmm: return "gadmm";
    case Variant::PAdmm: return "padmm";
    case Variant::PGadmm: return "pgadmm";
    case Variant::DpAdmm: return "dpadmm";
    case Variant::DpGadmm: return "dpgadmm";
  }
  return "unknown";
}

enum class StopRule { RelativeStep, KktResidual };

// Full algorithm configuration. Variant-specific constraints (forced alpha,
// forced zero weights) are enforced by validate_config in solver.hpp.
template <typename Scalar>
struct SolverConfig {
  Variant variant = Variant::Admm;
  Scalar alpha = Scalar(1);
  Scalar beta = Scalar(1);
  ProximalWeights<Scalar> weights;
  Scalar tol = Scalar(1e-6);
  long max_iter = 100000;
  StopRule stop_rule = StopRule::RelativeStep;
  std::uint64_t seed = 0;
};

}  // namespace gadmm
