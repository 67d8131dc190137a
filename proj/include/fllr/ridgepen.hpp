#pragma once

// Data-adaptive ridge penalty for functional local linear regression.
//
// At a query curve x the penalty is H* = V Lambda V', V the eigenvectors of
// the kernel-weighted covariance W of the scores. Writing
// b_j = 1 / (gamma_j + lambda_j) the estimated squared bias plus variance of
// m_hat(x) is a linear least-squares objective in b,
//
//     || A1 b - S1 ||^2 + || A2 b - S2 ||^2,      0 <= b <= 1 / gamma,
//
// solved by bounded-variable least squares. All work is done in b-space;
// b_j = 0 is an infinite penalty on direction j and b_j = 1 / gamma_j is no
// penalty at all.
//
// The normalizing constant a = (n^-1 sum Delta_i)^-1 is kept in the formulas
// but is exactly 1 because LocalWeights are self-normalized.
//
// Score arguments are the plain n x J matrix C (no intercept column), with n
// the full training size; rows with Delta_i = 0 contribute nothing.

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "fllr/localkernel.hpp"

namespace fllr {

/// Eigenvalues below this fraction of the largest are treated as zero.
inline constexpr double kEigenClampRatio = 1e-12;
/// Upper bound used for b_j when gamma_j was clamped to zero.
inline constexpr double kUpperSentinel = 1e12;

struct WeightedScoreEigen {
  /// Weighted score covariance W_{x,J}.
  Eigen::MatrixXd W;
  /// Orthogonal eigenvectors, columns ordered by descending eigenvalue, each
  /// with its largest-magnitude entry positive.
  Eigen::MatrixXd V;
  /// Eigenvalues of a^-1 W, descending, clamped at zero.
  Eigen::VectorXd gamma_tilde;
  Eigen::VectorXd mu_hat;
  Eigen::VectorXd mu_star;
  double a = 1.0;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(gamma_tilde.size()); }
  /// 1 / gamma_j, or kUpperSentinel where gamma_j is zero.
  Eigen::VectorXd upper() const;
};

WeightedScoreEigen weighted_score_eigen(const Eigen::MatrixXd& scores, const LocalWeights& weights);

struct MseComponents {
  Eigen::VectorXd d1;
  double d2 = 0.0;
  Eigen::VectorXd d3;
  double sigma_e = 0.0;
  double a = 1.0;
  /// Plug-in derivative used in place of m'_{x,J}.
  Eigen::VectorXd m_prime_plugin;
};

/// Throws std::invalid_argument for sigma_e < 0 or mismatched shapes.
MseComponents mse_components(const Eigen::MatrixXd& scores, const LocalWeights& weights,
                             const WeightedScoreEigen& eigen, const Eigen::VectorXd& beta_plugin,
                             double sigma_e);

/// a d2 + a^2 d2 d1' diag(b) d1 - a d1' diag(b) d3.
double estimated_bias(const MseComponents& comp, const WeightedScoreEigen& eigen, const Eigen::VectorXd& b);

/// || sigma_e Delta n^-1 [a 1 + (a^2 1 d1' - a C V) diag(b) d1] ||^2.
double estimated_variance(const MseComponents& comp, const WeightedScoreEigen& eigen,
                          const Eigen::MatrixXd& scores, const LocalWeights& weights, const Eigen::VectorXd& b);

struct RidgeProblem {
  Eigen::RowVectorXd A1;
  double S1 = 0.0;
  /// One row per active training curve.
  Eigen::MatrixXd A2;
  Eigen::VectorXd S2;
  Eigen::VectorXd upper;
  Eigen::VectorXd b_opt;
  double kkt_residual = 0.0;
  /// Normalizer for kkt_residual; optimality means kkt_residual <= 1e-8 * kkt_scale.
  double kkt_scale = 0.0;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(upper.size()); }
  double objective(const Eigen::VectorXd& b) const;
  /// [A1; A2] and [S1; S2].
  Eigen::MatrixXd stacked_matrix() const;
  Eigen::VectorXd stacked_rhs() const;
};

/// Builds A1, S1, A2, S2 and the bounds. The objective is checked against
/// estimated_bias^2 + estimated_variance at three feasible points.
RidgeProblem assemble_qp(const MseComponents& comp, const WeightedScoreEigen& eigen,
                         const Eigen::MatrixXd& scores, const LocalWeights& weights);

struct BvlsResult {
  Eigen::VectorXd x;
  std::size_t iterations = 0;
  double kkt_residual = 0.0;
  double kkt_scale = 0.0;
};

/// min ||A x - s||^2 subject to lower <= x <= upper by the Stark-Parker
/// active-set method. At most 10 * n outer iterations; throws ConvergenceError.
BvlsResult bvls(const Eigen::MatrixXd& A, const Eigen::VectorXd& s, const Eigen::VectorXd& lower,
                const Eigen::VectorXd& upper);

/// Largest violation of the KKT conditions at x, unnormalized.
double bvls_kkt_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& s, const Eigen::VectorXd& lower,
                         const Eigen::VectorXd& upper, const Eigen::VectorXd& x);
double bvls_kkt_scale(const Eigen::MatrixXd& A, const Eigen::VectorXd& s, const Eigen::VectorXd& x);

/// Solves the box-constrained problem; also fills b_opt and the KKT fields of `problem`.
Eigen::VectorXd solve_bvls(RidgeProblem& problem);

struct RidgeFit {
  double m_hat = 0.0;
  Eigen::VectorXd b;
  /// 1 / b_j - gamma_j; +inf where b_j = 0.
  Eigen::VectorXd lambda;
  double est_bias = 0.0;
  double est_var = 0.0;
  double est_mse = 0.0;
  /// max_j b_j.
  double kappa = 0.0;
  /// Estimated MSE of the unpenalized fit (b = 1 / gamma) at the same point.
  double est_mse_unpenalized = 0.0;
};

/// m_hat = A11 (n^-1 1' Delta Y) + A12 (n^-1 C' Delta Y) with
/// A11 = a + a^2 d1' diag(b) d1 and A12 = -a d1' diag(b) V'.
RidgeFit predict_ridge(const Eigen::MatrixXd& scores, const LocalWeights& weights, const Eigen::VectorXd& Y,
                       const WeightedScoreEigen& eigen, const MseComponents& comp, const Eigen::VectorXd& b);

/// Full per-point FLLR-r pipeline: eigen system, MSE statistics, QP, prediction.
RidgeFit fllr_r_fit(const Eigen::MatrixXd& scores, const LocalWeights& weights, const Eigen::VectorXd& Y,
                    const Eigen::VectorXd& beta_plugin, double sigma_e);

}  // namespace fllr
