#pragma once

// Type-I kernels, k-nearest-neighbour bandwidths and self-normalized local
// weights around a query curve.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "fllr/funcspace.hpp"

namespace fllr {

enum class KernelKind { box, triangle };

/// Kernel supported on [0, 1].
///   box:      K(u) = 1,          c_K = C_K = 1
///   triangle: K(u) = 2 (1 - u),  C_K = 2; K(1) = 0 so there is no positive lower bound c_K.
struct KernelSpec {
  KernelKind kind = KernelKind::box;

  double operator()(double u) const noexcept;
  double upper_bound() const noexcept { return kind == KernelKind::box ? 1.0 : 2.0; }
  double lower_bound() const noexcept { return kind == KernelKind::box ? 1.0 : 0.0; }
};

/// Relative inflation applied to the k-th neighbour distance.
inline constexpr double kBandwidthInflation = 1e-12;

struct BandwidthSpec {
  std::size_t k_h = 0;
  double realized_h = 0.0;
};

struct LocalWeights {
  /// Delta_i for every training curve, with mean exactly 1.
  Eigen::VectorXd deltas;
  /// Indices with Delta_i > 0, ascending.
  std::vector<std::size_t> active;
  BandwidthSpec bandwidth;

  std::size_t size() const noexcept { return static_cast<std::size_t>(deltas.size()); }
};

/// L2 distances from every curve in `train` to `center`.
Eigen::VectorXd distances_to(const CurveSet& train, const Curve& center);

BandwidthSpec knn_bandwidth(std::span<const double> distances, std::size_t k);
BandwidthSpec knn_bandwidth(const CurveSet& train, const Curve& center, std::size_t k);

LocalWeights local_weights(std::span<const double> distances, std::size_t k, const KernelSpec& kernel);
LocalWeights local_weights(const CurveSet& train, const Curve& center, std::size_t k, const KernelSpec& kernel);

}  // namespace fllr
