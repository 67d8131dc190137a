#include "fllr/simgen.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "fllr/seeding.hpp"

namespace fllr {

namespace {

enum SubStream : std::uint64_t { kScores = 1, kCurveNoise = 2, kResponseNoise = 3 };

}  // namespace

void SimulationConfig::validate() const {
  if (n_train < 3) throw std::invalid_argument("n_train must be at least 3");
  if (n_basis < 1) throw std::invalid_argument("n_basis must be at least 1");
  if (grid_points < 3) throw std::invalid_argument("grid_points must be at least 3");
  if (!(sigma_t >= 0.0) || !(sigma_e >= 0.0)) throw std::invalid_argument("noise levels must be nonnegative");
  if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("a must lie in [0, 1]");
}

double score_scale(std::size_t j) { return 1.0 / std::sqrt(static_cast<double>(j)); }

SimulatedSample generate(const SimulationConfig& config) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(config.total());
  const auto K = static_cast<Eigen::Index>(config.n_basis);
  std::mt19937_64 rng(derive_seed(config.seed, {tag(Stream::data), kScores}));
  std::uniform_real_distribution<double> unif(-std::sqrt(3.0), std::sqrt(3.0));
  Eigen::MatrixXd U(n, K);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < K; ++j) U(i, j) = unif(rng);
  return generate_from_scores(config, U);
}

SimulatedSample generate_from_scores(const SimulationConfig& config, const Eigen::MatrixXd& U) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(config.total());
  const auto K = static_cast<Eigen::Index>(config.n_basis);
  if (U.rows() != n || U.cols() != K) throw std::invalid_argument("score matrix has the wrong shape");

  auto grid = Grid::equispaced(0.0, 1.0, config.grid_points);
  const auto p = static_cast<Eigen::Index>(config.grid_points);
  Eigen::MatrixXd phi(K, p);
  for (Eigen::Index j = 0; j < K; ++j)
    for (Eigen::Index t = 0; t < p; ++t)
      phi(j, t) = fourier_function(static_cast<std::size_t>(j + 1), grid->points()(t));

  Eigen::MatrixXd S = U;
  for (Eigen::Index j = 0; j < K; ++j) S.col(j) *= score_scale(static_cast<std::size_t>(j + 1));
  Eigen::MatrixXd X = S * phi;

  std::mt19937_64 noise_rng(derive_seed(config.seed, {tag(Stream::data), kCurveNoise}));
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::MatrixXd Xobs = X;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index t = 0; t < p; ++t) Xobs(i, t) += config.sigma_t * noise(noise_rng);

  std::mt19937_64 eps_rng(derive_seed(config.seed, {tag(Stream::data), kResponseNoise}));
  Eigen::VectorXd m(n), Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i) = regression_function(U.row(i), config.a);
    Y(i) = m(i) + config.sigma_e * noise(eps_rng);
  }

  return SimulatedSample{CurveSet(grid, X, Y), CurveSet(grid, Xobs, Y), U, Y, m, config.n_train};
}

double regression_function(const Eigen::RowVectorXd& U, double a) {
  if (static_cast<std::size_t>(U.size()) < kLinearTerms)
    throw std::invalid_argument("regression function needs at least 30 scores");
  double lin = 0.0;
  double nonlin = 0.0;
  for (std::size_t j = 1; j <= kLinearTerms; ++j) {
    const double s = score_scale(j) * U(static_cast<Eigen::Index>(j - 1));
    lin += s;
    if (j <= kNonlinearTerms) nonlin += std::exp(-s * s);
  }
  return (1.0 - a) * lin + a * nonlin;
}

Eigen::VectorXd true_derivative_scores(const Eigen::RowVectorXd& U, double a, std::size_t J) {
  if (J > static_cast<std::size_t>(U.size())) throw std::invalid_argument("J exceeds the number of basis scores");
  Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(J));
  for (std::size_t j = 1; j <= J && j <= kLinearTerms; ++j) {
    double v = 1.0 - a;
    if (j <= kNonlinearTerms) {
      const double s = score_scale(j) * U(static_cast<Eigen::Index>(j - 1));
      v += a * (-2.0 * s * std::exp(-s * s));
    }
    d(static_cast<Eigen::Index>(j - 1)) = v;
  }
  return d;
}

Eigen::VectorXd true_derivative_scores(const SimulatedSample& sample, std::size_t i, double a, std::size_t J) {
  return true_derivative_scores(sample.scores_U.row(static_cast<Eigen::Index>(i)), a, J);
}

double error_ratio(const Eigen::VectorXd& Y, const Eigen::VectorXd& predictions) {
  if (Y.size() != predictions.size()) throw std::invalid_argument("length mismatch");
  if (Y.size() < 2) throw std::invalid_argument("error ratio needs at least 2 cases");
  const double tss = (Y.array() - Y.mean()).square().sum();
  if (!(tss > 0.0)) throw std::invalid_argument("constant response: error ratio undefined");
  return (Y - predictions).squaredNorm() / tss;
}

}  // namespace fllr
