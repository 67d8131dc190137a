#pragma once

// Unpenalized local estimators at a query curve: functional local linear
// regression and the functional Nadaraya-Watson estimator.

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "fllr/funcspace.hpp"
#include "fllr/localkernel.hpp"

namespace fllr {

/// Fits above this normal-matrix condition number are rejected.
inline constexpr double kMaxCondition = 1e12;

struct LocalFit {
  double m_hat = 0.0;
  /// Derivative scores m'_x(phi_j), j = 1..J.
  Eigen::VectorXd beta;
  std::size_t df_used = 0;
  /// Condition number of the weighted normal matrix C_x' Delta C_x.
  double condition = 0.0;
};

/// The weighted least-squares operator of one local linear fit. It maps the
/// full response vector to (m_hat, beta) and can be reused for any response,
/// which is how bootstrap replicates are evaluated.
class LocalLinearSmoother {
 public:
  /// Throws SingularFitError when fewer than J+2 points are active or the
  /// normal matrix condition number exceeds kMaxCondition.
  LocalLinearSmoother(const Eigen::MatrixXd& scores, const LocalWeights& weights);

  LocalFit fit(const Eigen::VectorXd& Y) const;
  /// Slope block only.
  Eigen::VectorXd derivative(const Eigen::VectorXd& Y) const;

  std::size_t basis_count() const noexcept { return static_cast<std::size_t>(op_.rows()) - 1; }
  double condition() const noexcept { return condition_; }

 private:
  std::vector<std::size_t> active_;
  // (J+1) x n_active, already multiplied by the kernel weights.
  Eigen::MatrixXd op_;
  double condition_ = 0.0;
};

/// argmin sum_i Delta_i (Y_i - m - c_i' beta)^2 via a QR factorization of the
/// sqrt(Delta)-scaled design. `scores` may be plain or augmented.
LocalFit fllr_fit(const ScoreMatrix& scores, const Eigen::VectorXd& Y, const LocalWeights& weights);

/// Kernel-weighted mean of the responses of the active curves.
double nw_fit(const Eigen::VectorXd& Y, const LocalWeights& weights);

struct DerivativeEstimate {
  Eigen::VectorXd scores;
  std::shared_ptr<const BasisSystem> basis;
  std::optional<Curve> center;
};

/// sum_j scores_j phi_j on the basis grid.
Curve reconstruct_derivative(const DerivativeEstimate& est);

}  // namespace fllr
