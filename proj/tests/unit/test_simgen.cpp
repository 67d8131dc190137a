#include "doctest.h"

#include <cmath>
#include <random>

#include "fllr/simgen.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace fllr;

namespace {

SimulationConfig small(double a, std::uint64_t seed) {
  SimulationConfig c;
  c.n_train = 20;
  c.n_test = 10;
  c.a = a;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  SimulationConfig c;
  CHECK_NOTHROW(c.validate());
  c.a = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.a = 0.5;
  c.sigma_t = -0.1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.sigma_t = 0.2;
  c.grid_points = 2;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(SimulationConfig{}.total() == 150);
}

TEST_CASE("generate shapes, ranges and determinism") {
  const auto s = generate(small(0.4, 7));
  CHECK(s.curves_true.size() == 30);
  CHECK(s.curves_observed.size() == 30);
  CHECK(s.n_train == 20);
  CHECK(s.scores_U.rows() == 30);
  CHECK(s.scores_U.cols() == 201);
  CHECK(s.curves_true.grid()->size() == 51);
  CHECK(s.scores_U.cwiseAbs().maxCoeff() <= std::sqrt(3.0));
  CHECK(s.curves_observed.has_responses());
  CHECK(test::max_abs(s.curves_observed.responses() - s.Y) == 0.0);
  for (Eigen::Index i = 0; i < 30; ++i)
    CHECK(s.m_true[i] == doctest::Approx(regression_function(s.scores_U.row(i), 0.4)).epsilon(1e-15));
  const auto again = generate(small(0.4, 7));
  CHECK(test::max_abs(again.curves_observed.values() - s.curves_observed.values()) == 0.0);
  CHECK(test::max_abs(again.Y - s.Y) == 0.0);
  const auto other = generate(small(0.4, 8));
  CHECK(test::max_abs(other.Y - s.Y) > 0.0);
}

TEST_CASE("generate at a = 0 is the pure linear model") {
  const auto s = generate(small(0.0, 3));
  for (Eigen::Index i = 0; i < 30; ++i) {
    double lin = 0.0;
    for (std::size_t j = 1; j <= kLinearTerms; ++j)
      lin += score_scale(j) * s.scores_U(i, static_cast<Eigen::Index>(j - 1));
    CHECK(std::abs(s.m_true[i] - lin) <= 1e-14);
  }
}

TEST_CASE("generate at a = 1 with zero scores gives m = 20") {
  const SimulationConfig c = small(1.0, 4);
  const auto s = generate_from_scores(c, Eigen::MatrixXd::Zero(30, 201));
  CHECK((s.m_true.array() == 20.0).all());
  CHECK(test::max_abs(s.curves_true.values()) == 0.0);
  // The noise streams do not depend on U.
  const auto r = generate(c);
  CHECK(test::max_abs((s.curves_observed.values() - s.curves_true.values()) -
                      (r.curves_observed.values() - r.curves_true.values())) <= 1e-12);
  CHECK(test::max_abs((s.Y - s.m_true) - (r.Y - r.m_true)) <= 1e-12);
  CHECK_THROWS_AS(generate_from_scores(c, Eigen::MatrixXd::Zero(29, 201)), std::invalid_argument);
}

TEST_CASE("uniform scores have unit variance over 10^6 draws") {
  SimulationConfig c;
  c.n_train = 4975;
  c.n_test = 25;
  c.seed = 99;
  const auto s = generate(c);
  const double n = static_cast<double>(s.scores_U.size());
  const double mean = s.scores_U.mean();
  const double var = (s.scores_U.array() - mean).square().sum() / (n - 1.0);
  CHECK(s.scores_U.size() == 1005000);
  CHECK(std::abs(var - 1.0) <= 0.01);
}

TEST_CASE("noise levels") {
  SimulationConfig c;
  c.n_train = 1990;
  c.n_test = 10;
  c.seed = 5;
  const auto s = generate(c);
  const Eigen::VectorXd e = s.Y - s.m_true;
  const double sd_e = std::sqrt((e.array() - e.mean()).square().sum() / (e.size() - 1.0));
  CHECK(std::abs(sd_e - 0.5) <= 0.03);
  const Eigen::MatrixXd xi = s.curves_observed.values() - s.curves_true.values();
  const double sd_t = std::sqrt(xi.array().square().mean());
  CHECK(std::abs(sd_t - 0.2) <= 0.005);
}

TEST_CASE("m is affine in a") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-std::sqrt(3.0), std::sqrt(3.0));
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::RowVectorXd U(201);
    for (auto& x : U) x = u(rng);
    const double a = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const double mix = (1.0 - a) * regression_function(U, 0.0) + a * regression_function(U, 1.0);
    CHECK(std::abs(regression_function(U, a) - mix) <= 1e-12);
  }
}

TEST_CASE("true_derivative_scores examples") {
  const auto s = generate(small(0.0, 9));
  const Eigen::VectorXd d0 = true_derivative_scores(s, 3, 0.0, 40);
  CHECK((d0.head(30).array() == 1.0).all());
  CHECK((d0.tail(10).array() == 0.0).all());

  Eigen::RowVectorXd U = s.scores_U.row(0);
  U(4) = 0.0;
  const Eigen::VectorXd d = true_derivative_scores(U, 0.35, 30);
  CHECK(d[4] == doctest::Approx(0.65).epsilon(1e-15));
  CHECK(d[25] == doctest::Approx(0.65).epsilon(1e-15));
}

TEST_CASE("true_derivative_scores match finite differences") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-std::sqrt(3.0), std::sqrt(3.0));
  std::uniform_real_distribution<double> ua(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::RowVectorXd U(201);
    for (auto& x : U) x = u(rng);
    const double a = ua(rng);
    const Eigen::VectorXd d = true_derivative_scores(U, a, 30);
    const double fd5 = oracles::finite_difference_derivative(U, a, 5, 1e-5);
    CHECK(std::abs(d[4] - fd5) <= 1e-6 * std::abs(d[4]));

    // Random direction in span{phi_1..phi_30}.
    Eigen::VectorXd dir(30);
    for (auto& x : dir) x = normal(rng);
    const double step = 1e-5;
    Eigen::RowVectorXd up = U, down = U;
    for (Eigen::Index j = 0; j < 30; ++j) {
      const double dU = step * dir[j] / score_scale(static_cast<std::size_t>(j + 1));
      up(j) += dU;
      down(j) -= dU;
    }
    const double fd = (regression_function(up, a) - regression_function(down, a)) / (2.0 * step);
    const double exact = d.dot(dir);
    CHECK(std::abs(fd - exact) <= 1e-6 * std::abs(exact));
  }
}

TEST_CASE("noiseless projection recovers the generating scores") {
  SimulationConfig c = small(0.5, 10);
  c.sigma_t = 0.0;
  c.n_basis = 60;
  const auto s = generate(c);
  const BasisSystem fb = fourier_basis(s.curves_true.grid(), 30);
  const Eigen::MatrixXd proj = project(s.curves_true, fb);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < 30; ++j)
    worst = std::max(worst, (proj.col(j) - score_scale(static_cast<std::size_t>(j + 1)) * s.scores_U.col(j))
                                .cwiseAbs()
                                .maxCoeff());
  CHECK(worst <= 1e-8);
}

TEST_CASE("with all 201 modes the 51-point quadrature aliases high frequencies") {
  SimulationConfig c = small(0.5, 10);
  c.sigma_t = 0.0;
  const auto s = generate(c);
  const BasisSystem fb = fourier_basis(s.curves_true.grid(), 30);
  const Eigen::MatrixXd proj = project(s.curves_true, fb);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < 30; ++j)
    worst = std::max(worst, (proj.col(j) - score_scale(static_cast<std::size_t>(j + 1)) * s.scores_U.col(j))
                                .cwiseAbs()
                                .maxCoeff());
  CHECK(worst > 1e-3);
}

TEST_CASE("error_ratio examples") {
  const Eigen::VectorXd Y = (Eigen::VectorXd(4) << 1.0, 3.0, -2.0, 6.0).finished();
  CHECK(error_ratio(Y, Eigen::VectorXd::Constant(4, Y.mean())) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(error_ratio(Y, Y) == 0.0);
  const Eigen::VectorXd y2 = (Eigen::VectorXd(2) << 0.0, 2.0).finished();
  CHECK(error_ratio(y2, Eigen::VectorXd::Ones(2)) == 1.0);
  CHECK_THROWS_AS(error_ratio(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Zero(3)), std::invalid_argument);
  CHECK_THROWS_AS(error_ratio(Y, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}
