#pragma once

#include <cmath>
#include <iostream>
#include <mutex>

#include "gadmm/problem.hpp"
#include "gadmm/types.hpp"

namespace gadmm {

// The six quadratic forms used by the convergence analysis. GammaAlpha and
// HAlpha couple the y and lambda blocks; Gamma and H are their alpha = 1
// specials; Gamma0 and H0 are the block-diagonal descent measures.
enum class MetricTag { GammaAlpha, Gamma, Gamma0, HAlpha, H, H0 };

inline const char* metric_name(MetricTag tag) {
  switch (tag) {
    case MetricTag::GammaAlpha: return "gamma_alpha";
    case MetricTag::Gamma: return "gamma";
    case MetricTag::Gamma0: return "gamma0";
    case MetricTag::HAlpha: return "h_alpha";
    case MetricTag::H: return "h";
    case MetricTag::H0: return "h0";
  }
  return "unknown";
}

// A metric is stored by its parameters and evaluated blockwise; the full
// (n+m+l)^2 matrix is only assembled on demand for small-dimension checks.
template <typename Scalar>
struct MetricKind {
  using Mat = Matrix<Scalar>;

  MetricTag tag = MetricTag::Gamma;
  Scalar alpha = Scalar(1);
  Scalar beta = Scalar(1);
  WeightMatrix<Scalar> g1;
  WeightMatrix<Scalar> g2;
  CouplingMatrix<Scalar> B;
  bool positive_definite = false;

  static MetricKind make(MetricTag tag, Scalar alpha, Scalar beta,
                         const ProximalWeights<Scalar>& weights,
                         const LinearCoupling<Scalar>& coupling) {
    MetricKind m;
    m.tag = tag;
    m.alpha = (tag == MetricTag::Gamma || tag == MetricTag::H) ? Scalar(1) : alpha;
    m.beta = beta;
    m.g1 = weights.g1;
    m.g2 = weights.g2;
    m.B = coupling.B;
    if (!(m.alpha > Scalar(0)) || !(beta > Scalar(0)))
      throw VariantConfigConflict("metrics need alpha > 0 and beta > 0");
    m.positive_definite = m.compute_pd_flag();
    return m;
  }

  Eigen::Index total_dim() const { return g1.dim() + B.cols() + B.rows(); }

  // Dense assembly, intended for cross-checks at small dimension.
  Mat to_dense() const {
    const Eigen::Index n = g1.dim();
    const Eigen::Index m = B.cols();
    const Eigen::Index l = B.rows();
    Mat full = Mat::Zero(n + m + l, n + m + l);
    full.topLeftCorner(n, n) = g1.to_dense();
    const Mat bd = B.to_dense();
    const Mat btb = bd.transpose() * bd;
    switch (tag) {
      case MetricTag::GammaAlpha:
      case MetricTag::Gamma:
      case MetricTag::HAlpha:
      case MetricTag::H: {
        full.block(n, n, m, m) = (beta / alpha) * btb;
        if (tag == MetricTag::HAlpha || tag == MetricTag::H)
          full.block(n, n, m, m) += g2.to_dense();
        const Scalar off = (Scalar(1) - alpha) / alpha;
        full.block(n, n + m, m, l) = off * bd.transpose();
        full.block(n + m, n, l, m) = off * bd;
        full.block(n + m, n + m, l, l) =
            (Scalar(1) / (alpha * beta)) * Mat::Identity(l, l);
        break;
      }
      case MetricTag::Gamma0: {
        full.block(n, n, m, m) = (beta * (Scalar(2) - alpha) / (alpha * alpha)) * btb;
        full.block(n + m, n + m, l, l) =
            ((Scalar(2) - alpha) / (beta * alpha * alpha)) * Mat::Identity(l, l);
        break;
      }
      case MetricTag::H0: {
        full.block(n, n, m, m) = g2.to_dense();
        full.block(n + m, n + m, l, l) =
            ((Scalar(2) - alpha) / beta) * Mat::Identity(l, l);
        break;
      }
    }
    return full;
  }

 private:
  bool compute_pd_flag() const {
    if (total_dim() <= 64) {
      Eigen::SelfAdjointEigenSolver<Mat> es(to_dense());
      if (es.info() != Eigen::Success) throw EigenFailure("metric eigendecomposition failed");
      return es.eigenvalues().minCoeff() > Scalar(1e-10);
    }
    // Structural rule for large dimensions: the (y, lambda) block of the
    // coupled metrics is positive definite exactly when alpha < 2 and B has
    // full column rank (Schur complement beta (2 - alpha) B'B).
    const bool alpha_open = alpha > Scalar(0) && alpha < Scalar(2);
    const bool g1_pd = g1.strictly_positive_definite();
    const bool g2_pd = g2.strictly_positive_definite();
    const bool rank_ok = B.full_column_rank();
    switch (tag) {
      case MetricTag::GammaAlpha:
      case MetricTag::Gamma:
      case MetricTag::Gamma0:
        return g1_pd && alpha_open && rank_ok;
      case MetricTag::HAlpha:
      case MetricTag::H:
        return g1_pd && alpha_open && (g2_pd || rank_ok);
      case MetricTag::H0:
        return g1_pd && g2_pd && alpha_open;
    }
    return false;
  }
};

namespace detail {

inline void warn_indefinite_once(const char* name) {
  static std::once_flag flag;
  std::call_once(flag, [name]() {
    std::cerr << "[gadmm] warning: metric " << name
              << " is not positive definite and produced a negative value\n";
  });
}

}  // namespace detail

// Quadratic form u' M u evaluated from the block structure of the metric.
template <typename Scalar>
Scalar weighted_sq_norm(const IterateState<Scalar>& u, const MetricKind<Scalar>& m) {
  Scalar value = m.g1.quad(u.x);
  switch (m.tag) {
    case MetricTag::GammaAlpha:
    case MetricTag::Gamma:
    case MetricTag::HAlpha:
    case MetricTag::H: {
      const Vector<Scalar> by = m.B.apply(u.y);
      value += (m.beta / m.alpha) * by.squaredNorm();
      value += (Scalar(2) * (Scalar(1) - m.alpha) / m.alpha) * by.dot(u.lambda);
      value += (Scalar(1) / (m.alpha * m.beta)) * u.lambda.squaredNorm();
      if (m.tag == MetricTag::HAlpha || m.tag == MetricTag::H) value += m.g2.quad(u.y);
      break;
    }
    case MetricTag::Gamma0: {
      const Vector<Scalar> by = m.B.apply(u.y);
      value += (m.beta * (Scalar(2) - m.alpha) / (m.alpha * m.alpha)) * by.squaredNorm();
      value += ((Scalar(2) - m.alpha) / (m.beta * m.alpha * m.alpha)) * u.lambda.squaredNorm();
      break;
    }
    case MetricTag::H0: {
      value += m.g2.quad(u.y);
      value += ((Scalar(2) - m.alpha) / m.beta) * u.lambda.squaredNorm();
      break;
    }
  }
  if (!m.positive_definite && value < Scalar(0)) detail::warn_indefinite_once(metric_name(m.tag));
  return value;
}

template <typename Scalar>
Scalar weighted_sq_distance(const IterateState<Scalar>& a, const IterateState<Scalar>& b,
                            const MetricKind<Scalar>& m) {
  return weighted_sq_norm(a - b, m);
}

// Projected-residual error map at step size gamma:
//   e_x = x - P_X[x - gamma (f'(x) - A'lambda)]
//   e_y = y - P_Y[y - gamma (g'(y) - B'lambda)]
//   e_l = gamma (A x + B y - b).
// The subgradient selections come from the oracle; for smooth objectives the
// selection is the gradient and the induced residual is exact.
template <typename Scalar>
struct ErrorMapValue {
  Vector<Scalar> e_x;
  Vector<Scalar> e_y;
  Vector<Scalar> e_lambda;
  Scalar gamma = Scalar(1);

  Scalar squared_norm() const {
    return e_x.squaredNorm() + e_y.squaredNorm() + e_lambda.squaredNorm();
  }
};

template <typename Scalar>
ErrorMapValue<Scalar> error_map(const ProblemInstance<Scalar>& p, const IterateState<Scalar>& u,
                                Scalar gamma) {
  if (!(gamma > Scalar(0))) throw VariantConfigConflict("error map needs gamma > 0");
  const auto& c = p.coupling;
  ErrorMapValue<Scalar> e;
  e.gamma = gamma;
  const Vector<Scalar> grad_x = p.oracle->subgradient_f(u.x) - c.A.apply_transpose(u.lambda);
  e.e_x = u.x - p.oracle->project_x(u.x - gamma * grad_x);
  const Vector<Scalar> grad_y = p.oracle->subgradient_g(u.y) - c.B.apply_transpose(u.lambda);
  e.e_y = u.y - p.oracle->project_y(u.y - gamma * grad_y);
  e.e_lambda = gamma * c.primal_residual_vector(u.x, u.y);
  return e;
}

// Scalar optimality measure: Euclidean norm of the error map at gamma = 1.
template <typename Scalar>
Scalar kkt_residual(const ProblemInstance<Scalar>& p, const IterateState<Scalar>& u) {
  return std::sqrt(error_map(p, u, Scalar(1)).squared_norm());
}

// Constants of the residual lower bound for single-proximal runs.
// varsigma1 is the max of three terms built from alpha, beta, |A'| and |G|;
// varsigma2 is the smallest value that is >= varsigma1 and makes
// varsigma2 G - varsigma1 I positive semidefinite; sigma = 1 / varsigma2.
template <typename Scalar>
struct SigmaConstants {
  Scalar varsigma1;
  Scalar varsigma2;
  Scalar sigma;
};

template <typename Scalar>
SigmaConstants<Scalar> compute_sigma(Scalar alpha, Scalar beta, Scalar norm_a,
                                     const WeightMatrix<Scalar>& g1) {
  if (!(alpha > Scalar(0) && alpha < Scalar(2)))
    throw VariantConfigConflict("sigma needs alpha in (0, 2)");
  if (!(beta > Scalar(0))) throw VariantConfigConflict("sigma needs beta > 0");
  if (!(g1.lambda_min() > Scalar(0)))
    throw RequiresPositiveDefinite("sigma needs a strictly positive definite x weight");
  const Scalar one_minus = Scalar(1) - alpha;
  const Scalar t1 = Scalar(3) * g1.spectral_norm() * g1.spectral_norm();
  const Scalar t2 = (alpha / (beta * (Scalar(2) - alpha))) *
                    ((Scalar(3) * beta * beta / alpha) * norm_a * norm_a +
                     Scalar(2) * one_minus * one_minus / alpha);
  const Scalar t3 = (beta * alpha / (Scalar(2) - alpha)) *
                    ((Scalar(3) / alpha) * one_minus * one_minus * norm_a * norm_a +
                     Scalar(2) / (alpha * beta * beta));
  const Scalar varsigma1 = std::max(t1, std::max(t2, t3));
  const Scalar varsigma2 = std::max(varsigma1, varsigma1 / g1.lambda_min());
  return {varsigma1, varsigma2, Scalar(1) / varsigma2};
}

// Constant of the step lower bound for double-proximal runs:
//   delta = 1 / max(1 + 2 beta (2 - alpha) |B|^2 / lambda_min(G2), 2 alpha^2).
template <typename Scalar>
Scalar compute_delta(Scalar alpha, Scalar beta, Scalar norm_b, Scalar lambda_min_g2) {
  if (!(alpha > Scalar(0) && alpha < Scalar(2)))
    throw VariantConfigConflict("delta needs alpha in (0, 2)");
  if (!(beta > Scalar(0))) throw VariantConfigConflict("delta needs beta > 0");
  if (!(lambda_min_g2 > Scalar(0)))
    throw RequiresPositiveDefinite("delta needs a strictly positive definite y weight");
  const Scalar t1 =
      Scalar(1) + Scalar(2) * beta * (Scalar(2) - alpha) * norm_b * norm_b / lambda_min_g2;
  const Scalar t2 = Scalar(2) * alpha * alpha;
  return Scalar(1) / std::max(t1, t2);
}

}  // namespace gadmm
