#pragma once

// Discretized functional data: grids with trapezoid quadrature, curves,
// curve samples, orthonormal basis systems and score projection.

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fllr/errors.hpp"

namespace fllr {

/// Ordered abscissae t_1 < ... < t_p with trapezoid quadrature weights.
class Grid {
 public:
  explicit Grid(std::vector<double> points);

  static std::shared_ptr<const Grid> equispaced(double start, double end, std::size_t count);

  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.size()); }
  const Eigen::VectorXd& points() const noexcept { return points_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  double start() const { return points_[0]; }
  double end() const { return points_[points_.size() - 1]; }
  double length() const { return end() - start(); }

  bool operator==(const Grid& other) const { return points_ == other.points_; }

 private:
  Eigen::VectorXd points_;
  Eigen::VectorXd weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// True when both grids are the same object or carry identical abscissae.
bool same_grid(const GridPtr& a, const GridPtr& b);

class Curve {
 public:
  Curve(GridPtr grid, Eigen::VectorXd values);

  const GridPtr& grid() const noexcept { return grid_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }

 private:
  GridPtr grid_;
  Eigen::VectorXd values_;
};

/// n curves sharing one grid, stored row-wise, with optional scalar responses.
class CurveSet {
 public:
  CurveSet(GridPtr grid, Eigen::MatrixXd values,
           std::optional<Eigen::VectorXd> responses = std::nullopt);

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  const GridPtr& grid() const noexcept { return grid_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Curve curve(std::size_t i) const;

  bool has_responses() const noexcept { return responses_.has_value(); }
  /// Throws std::logic_error when no responses are attached.
  const Eigen::VectorXd& responses() const;

  CurveSet subset(std::span<const std::size_t> rows) const;
  CurveSet with_responses(Eigen::VectorXd responses) const;

 private:
  GridPtr grid_;
  Eigen::MatrixXd values_;
  std::optional<Eigen::VectorXd> responses_;
};

enum class BasisKind { fourier, fpca };

/// J functions on a grid, orthonormal under the grid quadrature (checked to 1e-8).
class BasisSystem {
 public:
  BasisSystem(GridPtr grid, Eigen::MatrixXd functions, BasisKind kind);

  std::size_t count() const noexcept { return static_cast<std::size_t>(functions_.rows()); }
  const GridPtr& grid() const noexcept { return grid_; }
  /// J x p matrix, one basis function per row.
  const Eigen::MatrixXd& functions() const noexcept { return functions_; }
  BasisKind kind() const noexcept { return kind_; }
  Curve function(std::size_t j) const;

  /// Leading J functions.
  BasisSystem truncated(std::size_t J) const;

 private:
  GridPtr grid_;
  Eigen::MatrixXd functions_;
  BasisKind kind_;
};

/// Scores c_ij = <X_i - x, phi_j>. When `augmented` the first column is the
/// intercept column of ones (the C_x design).
struct ScoreMatrix {
  Eigen::MatrixXd values;
  bool augmented = false;
  std::optional<Curve> center;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t basis_count() const noexcept {
    return static_cast<std::size_t>(values.cols()) - (augmented ? 1 : 0);
  }
  /// Score block without the intercept column.
  Eigen::MatrixXd plain() const;
  /// [1 C].
  ScoreMatrix with_intercept() const;
};

// Standard Fourier system on [start, end]: phi_1 = 1, phi_{2k} = sqrt2 cos(2k pi s),
// phi_{2k+1} = sqrt2 sin(2k pi s), s the position rescaled to [0, 1]; divided by
// sqrt(length) so it is orthonormal on the interval. `index` is 1-based.
double fourier_function(std::size_t index, double t, double start = 0.0, double end = 1.0);
BasisSystem fourier_basis(const GridPtr& grid, std::size_t J);

double inner_product(const Curve& f, const Curve& g);
double l2_distance(const Curve& f, const Curve& g);

enum class PresmoothRule { loocv, fixed };

struct PresmoothOptions {
  PresmoothRule rule = PresmoothRule::loocv;
  /// Used by PresmoothRule::fixed.
  double bandwidth = 0.0;
  /// Geometric candidates between the grid spacing and half the range.
  std::size_t candidates = 20;
};

struct PresmoothResult {
  CurveSet curves;
  std::vector<double> bandwidths;
  std::vector<std::string> warnings;
};

/// Univariate local-linear smoothing (Epanechnikov kernel) of every curve.
PresmoothResult presmooth(const CurveSet& raw, const PresmoothOptions& options = {});

/// Local-linear hat matrix on `grid` for bandwidth h; nullopt when some local fit is singular.
std::optional<Eigen::MatrixXd> local_linear_hat(const Grid& grid, double h);

/// Leading J eigenfunctions of the sample covariance operator of mean-centered curves.
BasisSystem estimate_fpca_basis(const CurveSet& data, std::size_t J);

/// Quadrature projections <X_i, phi_j>, an n x J matrix.
Eigen::MatrixXd project(const CurveSet& data, const BasisSystem& basis);

ScoreMatrix project_scores(const CurveSet& data, const Curve& center, const BasisSystem& basis);

}  // namespace fllr
