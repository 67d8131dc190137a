#include "fllr/ridgepen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "fllr/errors.hpp"

namespace fllr {

namespace {

constexpr double kIdentityTol = 1e-10;

void check_close(double got, double want, double scale, const char* what) {
  if (std::abs(got - want) > kIdentityTol * (1.0 + scale))
    throw std::logic_error(std::string("internal identity violated: ") + what);
}

void check_shapes(const Eigen::MatrixXd& scores, const LocalWeights& weights) {
  if (static_cast<std::size_t>(scores.rows()) != weights.size())
    throw std::invalid_argument("score rows do not match the weight vector");
}

}  // namespace

Eigen::VectorXd WeightedScoreEigen::upper() const {
  Eigen::VectorXd u(gamma_tilde.size());
  for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = gamma_tilde[j] > 0.0 ? 1.0 / gamma_tilde[j] : kUpperSentinel;
  return u;
}

WeightedScoreEigen weighted_score_eigen(const Eigen::MatrixXd& scores, const LocalWeights& weights) {
  check_shapes(scores, weights);
  const Eigen::Index J = scores.cols();
  if (J < 1) throw std::invalid_argument("weighted score covariance needs J >= 1");
  if (weights.active.size() < 2) throw std::invalid_argument("weighted score covariance needs two active points");

  const double n = static_cast<double>(weights.size());
  const double total = weights.deltas.sum();
  if (std::abs(total / n - 1.0) > 1e-12)
    throw std::invalid_argument("local weights are not self-normalized; only a = 1 is supported");

  WeightedScoreEigen out;
  out.a = 1.0;
  out.mu_hat = Eigen::VectorXd::Zero(J);
  for (std::size_t i : weights.active)
    out.mu_hat += weights.deltas[static_cast<Eigen::Index>(i)] * scores.row(static_cast<Eigen::Index>(i)).transpose();
  out.mu_hat /= total;

  // Centered form, a sum of PSD rank-one terms.
  out.W = Eigen::MatrixXd::Zero(J, J);
  for (std::size_t i : weights.active) {
    const Eigen::VectorXd c = scores.row(static_cast<Eigen::Index>(i)).transpose() - out.mu_hat;
    out.W.selfadjointView<Eigen::Lower>().rankUpdate(c, weights.deltas[static_cast<Eigen::Index>(i)] / total);
  }
  out.W = out.W.selfadjointView<Eigen::Lower>();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.W / out.a);
  if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition of the score covariance failed");
  out.V.resize(J, J);
  out.gamma_tilde.resize(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    const Eigen::Index src = J - 1 - j;
    out.gamma_tilde[j] = eig.eigenvalues()[src];
    Eigen::VectorXd v = eig.eigenvectors().col(src);
    Eigen::Index big = 0;
    for (Eigen::Index k = 1; k < J; ++k)
      if (std::abs(v[k]) > std::abs(v[big])) big = k;
    if (v[big] < 0.0) v = -v;
    out.V.col(j) = v;
  }
  const double top = std::max(out.gamma_tilde[0], 0.0);
  for (Eigen::Index j = 0; j < J; ++j)
    if (out.gamma_tilde[j] < kEigenClampRatio * top || out.gamma_tilde[j] <= 0.0) out.gamma_tilde[j] = 0.0;
  out.mu_star = out.V.transpose() * out.mu_hat;
  return out;
}

MseComponents mse_components(const Eigen::MatrixXd& scores, const LocalWeights& weights,
                             const WeightedScoreEigen& eigen, const Eigen::VectorXd& beta_plugin, double sigma_e) {
  check_shapes(scores, weights);
  const Eigen::Index J = scores.cols();
  if (beta_plugin.size() != J || static_cast<Eigen::Index>(eigen.dim()) != J)
    throw std::invalid_argument("plug-in derivative and eigen system must have J entries");
  if (!(sigma_e >= 0.0)) throw std::invalid_argument("sigma_e must be nonnegative");

  const double n = static_cast<double>(weights.size());
  Eigen::VectorXd ctd1 = Eigen::VectorXd::Zero(J);  // n^-1 C' Delta 1
  Eigen::MatrixXd ctdc = Eigen::MatrixXd::Zero(J, J);  // n^-1 C' Delta C
  for (std::size_t i : weights.active) {
    const auto r = static_cast<Eigen::Index>(i);
    const double d = weights.deltas[r];
    ctd1 += d * scores.row(r).transpose();
    ctdc.selfadjointView<Eigen::Lower>().rankUpdate(scores.row(r).transpose(), d);
  }
  ctd1 /= n;
  ctdc = Eigen::MatrixXd(ctdc.selfadjointView<Eigen::Lower>()) / n;

  MseComponents comp;
  comp.a = eigen.a;
  comp.sigma_e = sigma_e;
  comp.m_prime_plugin = beta_plugin;
  comp.d1 = eigen.V.transpose() * ctd1;
  comp.d2 = ctd1.dot(beta_plugin);
  comp.d3 = eigen.V.transpose() * (ctdc * beta_plugin);

  const Eigen::VectorXd d1_alt = eigen.V.transpose() * eigen.mu_hat / comp.a;
  const Eigen::VectorXd d3_alt =
      eigen.V.transpose() * ((eigen.W + eigen.mu_hat * eigen.mu_hat.transpose()) * beta_plugin) / comp.a;
  const double s1 = ctd1.cwiseAbs().sum();
  const double s3 = (ctdc.cwiseAbs() * beta_plugin.cwiseAbs()).sum();
  for (Eigen::Index j = 0; j < J; ++j) {
    check_close(comp.d1[j], d1_alt[j], s1, "d1 = a^-1 V' mu");
    check_close(comp.d3[j], d3_alt[j], s3, "d3 = a^-1 V'(W + mu mu')m'");
  }
  return comp;
}

double estimated_bias(const MseComponents& comp, const WeightedScoreEigen& eigen, const Eigen::VectorXd& b) {
  (void)eigen;
  const double a = comp.a;
  const Eigen::VectorXd bd1 = b.cwiseProduct(comp.d1);
  return a * comp.d2 + a * a * comp.d2 * comp.d1.dot(bd1) - a * bd1.dot(comp.d3);
}

double estimated_variance(const MseComponents& comp, const WeightedScoreEigen& eigen, const Eigen::MatrixXd& scores,
                          const LocalWeights& weights, const Eigen::VectorXd& b) {
  check_shapes(scores, weights);
  const double a = comp.a;
  const double n = static_cast<double>(weights.size());
  const Eigen::VectorXd g = b.cwiseProduct(comp.d1);  // D^-1 d1
  const Eigen::VectorXd Vg = eigen.V * g;
  const double shift = a + a * a * comp.d1.dot(g);
  double sum = 0.0;
  for (std::size_t i : weights.active) {
    const auto r = static_cast<Eigen::Index>(i);
    const double v = shift - a * scores.row(r).dot(Vg);
    const double term = comp.sigma_e * weights.deltas[r] * v / n;
    sum += term * term;
  }
  return sum;
}

double RidgeProblem::objective(const Eigen::VectorXd& b) const {
  const double r1 = A1.dot(b) - S1;
  return r1 * r1 + (A2 * b - S2).squaredNorm();
}

Eigen::MatrixXd RidgeProblem::stacked_matrix() const {
  Eigen::MatrixXd A(A2.rows() + 1, A1.cols());
  A.row(0) = A1;
  A.bottomRows(A2.rows()) = A2;
  return A;
}

Eigen::VectorXd RidgeProblem::stacked_rhs() const {
  Eigen::VectorXd s(S2.size() + 1);
  s[0] = S1;
  s.tail(S2.size()) = S2;
  return s;
}

RidgeProblem assemble_qp(const MseComponents& comp, const WeightedScoreEigen& eigen, const Eigen::MatrixXd& scores,
                         const LocalWeights& weights) {
  check_shapes(scores, weights);
  const Eigen::Index J = scores.cols();
  const double a = comp.a;
  const double n = static_cast<double>(weights.size());

  RidgeProblem qp;
  // A1* = (a^2 d2 d1' - a d3') D1*
  qp.A1 = ((a * a * comp.d2) * comp.d1 - a * comp.d3).cwiseProduct(comp.d1).transpose();
  qp.S1 = -a * comp.d2;

  const auto m = static_cast<Eigen::Index>(weights.active.size());
  qp.A2.resize(m, J);
  qp.S2.resize(m);
  const Eigen::MatrixXd CV = scores * eigen.V;
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto i = static_cast<Eigen::Index>(weights.active[static_cast<std::size_t>(r)]);
    const double f = comp.sigma_e * weights.deltas[i] / n;
    // A2* = n^-1 sigma Delta (a^2 1 d1' - a C V) D1*
    qp.A2.row(r) = (f * ((a * a) * comp.d1.transpose() - a * CV.row(i))).cwiseProduct(comp.d1.transpose());
    qp.S2[r] = -f * a;
  }
  qp.upper = eigen.upper();

  std::mt19937_64 gen(0x5eedULL);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    Eigen::VectorXd b(J);
    for (Eigen::Index j = 0; j < J; ++j) b[j] = unif(gen) * (qp.upper[j] >= kUpperSentinel ? 1.0 : qp.upper[j]);
    const double bias = estimated_bias(comp, eigen, b);
    const double want = bias * bias + estimated_variance(comp, eigen, scores, weights, b);
    const double scale = std::pow(std::abs(qp.S1) + qp.A1.cwiseAbs().dot(b.cwiseAbs()), 2) +
                         std::pow(qp.S2.norm() + (qp.A2.cwiseAbs() * b.cwiseAbs()).norm(), 2);
    if (std::abs(qp.objective(b) - want) > kIdentityTol * scale)
      throw std::logic_error("internal identity violated: QP objective != bias^2 + variance");
  }
  return qp;
}

double bvls_kkt_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& s, const Eigen::VectorXd& lower,
                         const Eigen::VectorXd& upper, const Eigen::VectorXd& x) {
  const Eigen::VectorXd grad = A.transpose() * (A * x - s);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double v;
    if (x[j] < lower[j] || x[j] > upper[j])
      v = std::numeric_limits<double>::infinity();
    else if (x[j] == lower[j] && x[j] == upper[j])
      v = 0.0;
    else if (x[j] == lower[j])
      v = std::max(0.0, -grad[j]);
    else if (x[j] == upper[j])
      v = std::max(0.0, grad[j]);
    else
      v = std::abs(grad[j]);
    worst = std::max(worst, v);
  }
  return worst;
}

double bvls_kkt_scale(const Eigen::MatrixXd& A, const Eigen::VectorXd& s, const Eigen::VectorXd& x) {
  return A.norm() * (s.norm() + (A * x).norm()) + std::numeric_limits<double>::min();
}

BvlsResult bvls(const Eigen::MatrixXd& A, const Eigen::VectorXd& s, const Eigen::VectorXd& lower,
                const Eigen::VectorXd& upper) {
  const Eigen::Index n = A.cols();
  if (s.size() != A.rows() || lower.size() != n || upper.size() != n)
    throw std::invalid_argument("bounded least squares: inconsistent shapes");
  for (Eigen::Index j = 0; j < n; ++j)
    if (!(lower[j] <= upper[j])) throw std::invalid_argument("bounded least squares: lower bound above upper bound");

  enum class State { lower, upper, free, fixed };
  // Work with unit-norm columns; x = y / norm.
  Eigen::VectorXd norms = A.colwise().norm().transpose();
  const double biggest = norms.size() > 0 ? norms.maxCoeff() : 0.0;
  std::vector<State> state(static_cast<std::size_t>(n), State::lower);
  Eigen::MatrixXd As = A;
  Eigen::VectorXd lo(n), hi(n), y(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(norms[j] > 1e-300) || norms[j] <= 1e-14 * biggest) {
      // The objective does not depend on this variable.
      state[static_cast<std::size_t>(j)] = State::fixed;
      norms[j] = 1.0;
      As.col(j).setZero();
    }
    As.col(j) /= norms[j];
    lo[j] = lower[j] * norms[j];
    hi[j] = upper[j] * norms[j];
    y[j] = lo[j];
  }

  const std::size_t cap = 10 * static_cast<std::size_t>(std::max<Eigen::Index>(n, 1));
  std::size_t iter = 0;
  const double tol = 1e-13 * (s.norm() + 1e-300);

  while (true) {
    Eigen::VectorXd w = As.transpose() * (s - As * y);
    std::vector<bool> skip(static_cast<std::size_t>(n), false);
    bool progressed = false;
    while (true) {
      Eigen::Index t = -1;
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto sj = state[static_cast<std::size_t>(j)];
        if (skip[static_cast<std::size_t>(j)]) continue;
        const bool cand = (sj == State::lower && w[j] > tol && lo[j] < hi[j]) ||
                          (sj == State::upper && w[j] < -tol && lo[j] < hi[j]);
        if (cand && (t < 0 || std::abs(w[j]) > std::abs(w[t]))) t = j;
      }
      if (t < 0) break;

      if (++iter > cap) {
        Eigen::VectorXd x = y.cwiseQuotient(norms);
        throw ConvergenceError(std::vector<double>(x.data(), x.data() + x.size()),
                               bvls_kkt_residual(A, s, lower, upper, x));
      }
      const State was = state[static_cast<std::size_t>(t)];
      state[static_cast<std::size_t>(t)] = State::free;

      bool first = true;
      bool rejected = false;
      while (true) {
        std::vector<Eigen::Index> F;
        for (Eigen::Index j = 0; j < n; ++j)
          if (state[static_cast<std::size_t>(j)] == State::free) F.push_back(j);
        if (F.empty()) break;
        Eigen::VectorXd rhs = s;
        for (Eigen::Index j = 0; j < n; ++j)
          if (state[static_cast<std::size_t>(j)] != State::free) rhs -= As.col(j) * y[j];
        Eigen::MatrixXd AF(As.rows(), static_cast<Eigen::Index>(F.size()));
        for (std::size_t c = 0; c < F.size(); ++c) AF.col(static_cast<Eigen::Index>(c)) = As.col(F[c]);
        const Eigen::VectorXd z = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(AF).solve(rhs);

        if (first) {
          first = false;
          // Rounding can leave the freed variable pointing back into its bound.
          const auto pos = static_cast<Eigen::Index>(std::find(F.begin(), F.end(), t) - F.begin());
          const bool wrong = (was == State::lower && z[pos] <= y[t]) || (was == State::upper && z[pos] >= y[t]);
          if (wrong) {
            state[static_cast<std::size_t>(t)] = was;
            skip[static_cast<std::size_t>(t)] = true;
            rejected = true;
            break;
          }
        }

        bool feasible = true;
        for (std::size_t c = 0; c < F.size(); ++c) {
          const Eigen::Index j = F[c];
          if (!(z[static_cast<Eigen::Index>(c)] > lo[j] && z[static_cast<Eigen::Index>(c)] < hi[j])) feasible = false;
        }
        if (feasible) {
          for (std::size_t c = 0; c < F.size(); ++c) y[F[c]] = z[static_cast<Eigen::Index>(c)];
          break;
        }
        // Step toward z until the first bound is hit.
        double alpha = 1.0;
        for (std::size_t c = 0; c < F.size(); ++c) {
          const Eigen::Index j = F[c];
          const double zj = z[static_cast<Eigen::Index>(c)];
          double step = 1.0;
          if (zj <= lo[j]) step = (lo[j] - y[j]) / (zj - y[j]);
          else if (zj >= hi[j]) step = (hi[j] - y[j]) / (zj - y[j]);
          if (!(step >= 0.0)) step = 0.0;
          alpha = std::min(alpha, step);
        }
        for (std::size_t c = 0; c < F.size(); ++c) {
          const Eigen::Index j = F[c];
          const double zj = z[static_cast<Eigen::Index>(c)];
          y[j] += alpha * (zj - y[j]);
          const double slack = 1e-14 * std::max({1.0, std::abs(lo[j]), std::abs(hi[j])});
          if ((zj <= lo[j] && y[j] <= lo[j] + slack) || y[j] < lo[j]) {
            y[j] = lo[j];
            state[static_cast<std::size_t>(j)] = State::lower;
          } else if ((zj >= hi[j] && y[j] >= hi[j] - slack) || y[j] > hi[j]) {
            y[j] = hi[j];
            state[static_cast<std::size_t>(j)] = State::upper;
          }
        }
      }
      if (!rejected) {
        progressed = true;
        break;
      }
    }
    if (!progressed) break;
  }

  BvlsResult out;
  out.x = y.cwiseQuotient(norms);
  for (Eigen::Index j = 0; j < n; ++j) out.x[j] = std::clamp(out.x[j], lower[j], upper[j]);
  // Exact bound values for variables the solver left on a bound.
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto sj = state[static_cast<std::size_t>(j)];
    if (sj == State::lower || sj == State::fixed) out.x[j] = lower[j];
    if (sj == State::upper) out.x[j] = upper[j];
  }
  out.iterations = iter;
  out.kkt_residual = bvls_kkt_residual(A, s, lower, upper, out.x);
  out.kkt_scale = bvls_kkt_scale(A, s, out.x);
  return out;
}

Eigen::VectorXd solve_bvls(RidgeProblem& problem) {
  const Eigen::VectorXd lower = Eigen::VectorXd::Zero(problem.upper.size());
  const Eigen::MatrixXd A = problem.stacked_matrix();
  const Eigen::VectorXd s = problem.stacked_rhs();
  BvlsResult res = bvls(A, s, lower, problem.upper);
  problem.b_opt = res.x;
  problem.kkt_residual = res.kkt_residual;
  problem.kkt_scale = res.kkt_scale;
  return res.x;
}

RidgeFit predict_ridge(const Eigen::MatrixXd& scores, const LocalWeights& weights, const Eigen::VectorXd& Y,
                       const WeightedScoreEigen& eigen, const MseComponents& comp, const Eigen::VectorXd& b) {
  check_shapes(scores, weights);
  if (static_cast<std::size_t>(Y.size()) != weights.size())
    throw std::invalid_argument("response length does not match the weight vector");
  const Eigen::Index J = scores.cols();
  if (b.size() != J) throw std::invalid_argument("b must have J entries");
  const double a = comp.a;
  const double n = static_cast<double>(weights.size());

  double ybar = 0.0;  // n^-1 1' Delta Y
  Eigen::VectorXd cy = Eigen::VectorXd::Zero(J);  // n^-1 C' Delta Y
  for (std::size_t i : weights.active) {
    const auto r = static_cast<Eigen::Index>(i);
    ybar += weights.deltas[r] * Y[r];
    cy += (weights.deltas[r] * Y[r]) * scores.row(r).transpose();
  }
  ybar /= n;
  cy /= n;

  const Eigen::VectorXd bd1 = b.cwiseProduct(comp.d1);
  const double A11 = a + a * a * comp.d1.dot(bd1);
  const Eigen::RowVectorXd A12 = -a * (eigen.V * bd1).transpose();

  RidgeFit fit;
  fit.m_hat = A11 * ybar + A12.dot(cy);
  fit.b = b;
  fit.lambda.resize(J);
  for (Eigen::Index j = 0; j < J; ++j)
    fit.lambda[j] = b[j] > 0.0 ? std::max(0.0, 1.0 / b[j] - eigen.gamma_tilde[j]) : std::numeric_limits<double>::infinity();
  fit.est_bias = estimated_bias(comp, eigen, b);
  fit.est_var = estimated_variance(comp, eigen, scores, weights, b);
  fit.est_mse = fit.est_bias * fit.est_bias + fit.est_var;
  fit.kappa = J > 0 ? b.maxCoeff() : 0.0;
  return fit;
}

RidgeFit fllr_r_fit(const Eigen::MatrixXd& scores, const LocalWeights& weights, const Eigen::VectorXd& Y,
                    const Eigen::VectorXd& beta_plugin, double sigma_e) {
  const WeightedScoreEigen eigen = weighted_score_eigen(scores, weights);
  const MseComponents comp = mse_components(scores, weights, eigen, beta_plugin, sigma_e);
  RidgeProblem qp = assemble_qp(comp, eigen, scores, weights);
  const Eigen::VectorXd b = solve_bvls(qp);
  RidgeFit fit = predict_ridge(scores, weights, Y, eigen, comp, b);
  const double unpen_bias = estimated_bias(comp, eigen, qp.upper);
  fit.est_mse_unpenalized = unpen_bias * unpen_bias + estimated_variance(comp, eigen, scores, weights, qp.upper);
  return fit;
}

}  // namespace fllr
