#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <random>

#include "fllr/funcspace.hpp"

namespace fllr::test {

inline Eigen::MatrixXd normal_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

/// Curves with decaying random Fourier scores on [0, 1].
inline CurveSet random_curves(std::mt19937_64& rng, const GridPtr& grid, std::size_t n, std::size_t modes = 6) {
  const BasisSystem basis = fourier_basis(grid, modes);
  Eigen::MatrixXd s = normal_matrix(rng, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(modes));
  for (Eigen::Index j = 0; j < s.cols(); ++j) s.col(j) /= static_cast<double>(j + 1);
  return CurveSet(grid, s * basis.functions());
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace fllr::test
