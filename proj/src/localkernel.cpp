#include "fllr/localkernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fllr {

double KernelSpec::operator()(double u) const noexcept {
  if (u < 0.0 || u > 1.0) return 0.0;
  return kind == KernelKind::box ? 1.0 : 2.0 * (1.0 - u);
}

Eigen::VectorXd distances_to(const CurveSet& train, const Curve& center) {
  if (!same_grid(train.grid(), center.grid())) throw GridMismatchError();
  const auto& w = train.grid()->weights();
  const auto n = static_cast<Eigen::Index>(train.size());
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      const double diff = train.values()(i, k) - center.values()[k];
      s += w[k] * diff * diff;
    }
    d[i] = std::sqrt(s);
  }
  return d;
}

BandwidthSpec knn_bandwidth(std::span<const double> distances, std::size_t k) {
  if (k == 0) throw std::invalid_argument("neighbour count must be at least 1");
  if (k > distances.size())
    throw std::invalid_argument("neighbour count " + std::to_string(k) + " exceeds sample size " +
                                std::to_string(distances.size()));
  std::vector<double> sorted(distances.begin(), distances.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
  double h = sorted[k - 1] * (1.0 + kBandwidthInflation);
  // All curves coincide with the center: any positive radius works.
  if (!(h > 0.0)) h = kBandwidthInflation;
  return {k, h};
}

BandwidthSpec knn_bandwidth(const CurveSet& train, const Curve& center, std::size_t k) {
  const Eigen::VectorXd d = distances_to(train, center);
  return knn_bandwidth(std::span<const double>(d.data(), static_cast<std::size_t>(d.size())), k);
}

LocalWeights local_weights(std::span<const double> distances, std::size_t k, const KernelSpec& kernel) {
  LocalWeights out;
  out.bandwidth = knn_bandwidth(distances, k);
  const auto n = static_cast<Eigen::Index>(distances.size());
  out.deltas.resize(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.deltas[i] = kernel(distances[static_cast<std::size_t>(i)] / out.bandwidth.realized_h);
    total += out.deltas[i];
  }
  if (!(total > 0.0)) throw std::runtime_error("all kernel weights vanished");
  const double scale = static_cast<double>(n) / total;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.deltas[i] *= scale;
    if (out.deltas[i] > 0.0) out.active.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

LocalWeights local_weights(const CurveSet& train, const Curve& center, std::size_t k, const KernelSpec& kernel) {
  const Eigen::VectorXd d = distances_to(train, center);
  return local_weights(std::span<const double>(d.data(), static_cast<std::size_t>(d.size())), k, kernel);
}

}  // namespace fllr
