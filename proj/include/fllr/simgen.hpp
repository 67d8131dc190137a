#pragma once

// Simulation design: curves X_i = sum_{j<=201} sqrt(theta_j) U_ij phi_j with
// theta_j = 1/j, U_ij ~ Unif[-sqrt3, sqrt3] and the standard Fourier basis on
// [0, 1], observed with i.i.d. N(0, sigma_t) noise on an equispaced grid.
// Responses follow the linear/nonlinear mixture
//
//     m(X_i) = (1 - a) sum_{j<=30} s_ij + a sum_{j<=20} exp(-s_ij^2),
//     s_ij = sqrt(theta_j) U_ij,
//
// plus N(0, sigma_e) noise.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>

#include "fllr/funcspace.hpp"

namespace fllr {

inline constexpr std::size_t kLinearTerms = 30;
inline constexpr std::size_t kNonlinearTerms = 20;

struct SimulationConfig {
  std::size_t n_train = 100;
  std::size_t n_test = 50;
  std::size_t n_basis = 201;
  std::size_t grid_points = 51;
  double sigma_t = 0.2;
  double sigma_e = 0.5;
  double a = 0.5;
  std::uint64_t seed = 0;

  std::size_t total() const noexcept { return n_train + n_test; }
  /// Throws std::invalid_argument on an invalid configuration.
  void validate() const;
};

struct SimulatedSample {
  /// Training rows first, then test rows.
  CurveSet curves_true;
  CurveSet curves_observed;
  /// n x n_basis raw uniform scores U_ij.
  Eigen::MatrixXd scores_U;
  Eigen::VectorXd Y;
  Eigen::VectorXd m_true;
  std::size_t n_train = 0;
};

/// sqrt(theta_j) = 1 / sqrt(j), j 1-based.
double score_scale(std::size_t j);

SimulatedSample generate(const SimulationConfig& config);
/// Uses the given n x n_basis U instead of drawing it; noise streams are unchanged.
SimulatedSample generate_from_scores(const SimulationConfig& config, const Eigen::MatrixXd& U);

/// m for one row of raw scores U (length >= 30).
double regression_function(const Eigen::RowVectorXd& U, double a);

/// m'_{X_i}(phi_j), j = 1..J, for the generating Fourier basis.
Eigen::VectorXd true_derivative_scores(const SimulatedSample& sample, std::size_t i, double a, std::size_t J);
Eigen::VectorXd true_derivative_scores(const Eigen::RowVectorXd& U, double a, std::size_t J);

/// sum (Y - pred)^2 / sum (Y - mean Y)^2. Throws on constant Y or length mismatch.
double error_ratio(const Eigen::VectorXd& Y, const Eigen::VectorXd& predictions);

}  // namespace fllr
