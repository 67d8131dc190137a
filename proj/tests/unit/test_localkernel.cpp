#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "fllr/localkernel.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace fllr;

namespace {

std::span<const double> view(const std::vector<double>& v) { return {v.data(), v.size()}; }

}  // namespace

TEST_CASE("kernel shapes") {
  const KernelSpec box{KernelKind::box}, tri{KernelKind::triangle};
  CHECK(box(0.0) == 1.0);
  CHECK(box(1.0) == 1.0);
  CHECK(box(1.0 + 1e-9) == 0.0);
  CHECK(box(-0.1) == 0.0);
  CHECK(tri(0.0) == 2.0);
  CHECK(tri(0.25) == 1.5);
  CHECK(tri(1.0) == 0.0);
  CHECK(tri(1.5) == 0.0);
  // Both integrate to one over [0, 1].
  for (const KernelSpec& k : {box, tri}) {
    const int m = 100000;
    double s = 0.5 * (k(0.0) + k(1.0));
    for (int i = 1; i < m; ++i) s += k(static_cast<double>(i) / m);
    CHECK(s / m == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(box.lower_bound() == 1.0);
  CHECK(tri.upper_bound() == 2.0);
}

TEST_CASE("knn_bandwidth examples") {
  const std::vector<double> d{0.1, 0.2, 0.5};
  const auto bw = knn_bandwidth(view(d), 2);
  CHECK(bw.k_h == 2);
  CHECK(bw.realized_h == 0.2 * (1.0 + 1e-12));
  const auto all = knn_bandwidth(view(d), 3);
  CHECK(all.realized_h >= 0.5);
  const auto w = local_weights(view(d), 3, KernelSpec{});
  CHECK(w.active.size() == 3);
  CHECK_THROWS_AS(knn_bandwidth(view(d), 4), std::invalid_argument);
  CHECK_THROWS_AS(knn_bandwidth(view(d), 0), std::invalid_argument);
}

TEST_CASE("knn_bandwidth on curves equals the sort oracle") {
  std::mt19937_64 rng(10);
  auto g = Grid::equispaced(0.0, 1.0, 51);
  const CurveSet train = test::random_curves(rng, g, 20);
  const Curve center = test::random_curves(rng, g, 1).curve(0);
  std::vector<double> d(20);
  for (std::size_t i = 0; i < 20; ++i) d[i] = l2_distance(train.curve(i), center);
  const Eigen::VectorXd fast = distances_to(train, center);
  for (std::size_t i = 0; i < 20; ++i) CHECK(std::abs(fast[static_cast<Eigen::Index>(i)] - d[i]) <= 1e-14);
  std::vector<double> sorted = d;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k : {1, 5, 13, 20}) {
    const auto bw = knn_bandwidth(train, center, k);
    CHECK(bw.realized_h == sorted[k - 1] * (1.0 + kBandwidthInflation));
    const auto w = local_weights(train, center, k, KernelSpec{});
    std::vector<std::size_t> expected;
    for (std::size_t i = 0; i < 20; ++i)
      if (d[i] <= sorted[k - 1]) expected.push_back(i);
    CHECK(w.active == expected);
    CHECK(w.active.size() == k);
    const Eigen::VectorXd oracle = oracles::sort_weights(d, k, KernelKind::box);
    CHECK(test::max_abs(w.deltas - oracle) <= 1e-12);
  }
}

TEST_CASE("ties at the k-th distance are all active") {
  const std::vector<double> d{0.1, 0.2, 0.2, 0.5};
  const auto w = local_weights(view(d), 2, KernelSpec{});
  CHECK(w.active == std::vector<std::size_t>{0, 1, 2});
  CHECK(w.bandwidth.k_h == 2);
}

TEST_CASE("local_weights examples") {
  const std::vector<double> d{0.1, 0.2, 0.5};
  const auto w = local_weights(view(d), 2, KernelSpec{});
  CHECK(w.deltas[0] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(w.deltas[1] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(w.deltas[2] == 0.0);
  CHECK(w.active == std::vector<std::size_t>{0, 1});

  const std::vector<double> t{0.1, 0.3};
  const KernelSpec tri{KernelKind::triangle};
  const auto wt = local_weights(view(t), 2, tri);
  const double h = 0.3 * (1.0 + 1e-12);
  const double r0 = 2.0 * (1.0 - 0.1 / h), r1 = 2.0 * (1.0 - 0.3 / h);
  CHECK(r0 == doctest::Approx(4.0 / 3.0).epsilon(1e-11));
  CHECK(r1 > 0.0);
  CHECK(r1 < 1e-11);
  const double mean = 0.5 * (r0 + r1);
  CHECK(std::abs(wt.deltas[0] - r0 / mean) <= 1e-12);
  CHECK(std::abs(wt.deltas[1] - r1 / mean) <= 1e-12);
  CHECK(wt.active.size() == 2);
}

TEST_CASE("local_weights invariants") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 3.0);
  std::uniform_int_distribution<std::size_t> pick(1, 30);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> d(30);
    for (auto& x : d) x = unif(rng);
    const std::size_t k = pick(rng);
    for (KernelKind kind : {KernelKind::box, KernelKind::triangle}) {
      const KernelSpec ks{kind};
      const auto w = local_weights(view(d), k, ks);
      CHECK(std::abs(w.deltas.mean() - 1.0) <= 1e-12);
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] > w.bandwidth.realized_h) CHECK(w.deltas[static_cast<Eigen::Index>(i)] == 0.0);
        CHECK(w.deltas[static_cast<Eigen::Index>(i)] >= 0.0);
      }
      // Rescaling every distance rescales h and leaves the weights unchanged.
      std::vector<double> scaled(d);
      for (auto& x : scaled) x *= 7.5;
      CHECK(test::max_abs(local_weights(view(scaled), k, ks).deltas - w.deltas) <= 1e-12);
      // Permuting the training indices permutes the weights.
      std::vector<std::size_t> perm(d.size());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<double> pd(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) pd[i] = d[perm[i]];
      const auto wp = local_weights(view(pd), k, ks);
      for (std::size_t i = 0; i < d.size(); ++i)
        CHECK(std::abs(wp.deltas[static_cast<Eigen::Index>(i)] - w.deltas[static_cast<Eigen::Index>(perm[i])]) <=
              1e-14 * (1.0 + w.deltas[static_cast<Eigen::Index>(perm[i])]));
    }
    const auto wb = local_weights(view(d), k, KernelSpec{});
    CHECK(wb.active.size() == k);
  }
}

TEST_CASE("coincident curves still get a positive bandwidth") {
  const std::vector<double> d{0.0, 0.0, 0.0};
  const auto w = local_weights(view(d), 1, KernelSpec{});
  CHECK(w.bandwidth.realized_h > 0.0);
  CHECK(w.active.size() == 3);
}
