#include "fllr/estimators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fllr {

LocalLinearSmoother::LocalLinearSmoother(const Eigen::MatrixXd& scores, const LocalWeights& weights)
    : active_(weights.active) {
  if (static_cast<std::size_t>(scores.rows()) != weights.size())
    throw std::invalid_argument("score rows do not match the weight vector");
  const Eigen::Index J = scores.cols();
  const auto m = static_cast<Eigen::Index>(active_.size());
  if (m < J + 2)
    throw SingularFitError("local fit has " + std::to_string(m) + " active points but needs at least " +
                               std::to_string(J + 2),
                           std::numeric_limits<double>::infinity());

  Eigen::MatrixXd design(m, J + 1);
  Eigen::VectorXd root(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto i = static_cast<Eigen::Index>(active_[static_cast<std::size_t>(r)]);
    root[r] = std::sqrt(weights.deltas[i]);
    design(r, 0) = root[r];
    design.row(r).tail(J) = root[r] * scores.row(i);
  }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(design);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(J + 1).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(R);
  const auto& sv = svd.singularValues();
  const double smin = sv[sv.size() - 1];
  condition_ = smin > 0.0 ? (sv[0] / smin) * (sv[0] / smin) : std::numeric_limits<double>::infinity();
  if (!(condition_ <= kMaxCondition))
    throw SingularFitError("local fit is singular (condition " + std::to_string(condition_) + ")", condition_);

  const Eigen::MatrixXd thinQ = qr.householderQ() * Eigen::MatrixXd::Identity(m, J + 1);
  op_ = R.triangularView<Eigen::Upper>().solve(thinQ.transpose());
  op_ = op_ * root.asDiagonal();
}

LocalFit LocalLinearSmoother::fit(const Eigen::VectorXd& Y) const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(active_.size()));
  for (std::size_t r = 0; r < active_.size(); ++r) y[static_cast<Eigen::Index>(r)] = Y[static_cast<Eigen::Index>(active_[r])];
  const Eigen::VectorXd coef = op_ * y;
  LocalFit out;
  out.m_hat = coef[0];
  out.beta = coef.tail(coef.size() - 1);
  out.df_used = active_.size();
  out.condition = condition_;
  return out;
}

Eigen::VectorXd LocalLinearSmoother::derivative(const Eigen::VectorXd& Y) const {
  const Eigen::Index J = op_.rows() - 1;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(J);
  for (std::size_t r = 0; r < active_.size(); ++r)
    beta += op_.col(static_cast<Eigen::Index>(r)).tail(J) * Y[static_cast<Eigen::Index>(active_[r])];
  return beta;
}

LocalFit fllr_fit(const ScoreMatrix& scores, const Eigen::VectorXd& Y, const LocalWeights& weights) {
  if (static_cast<std::size_t>(Y.size()) != weights.size())
    throw std::invalid_argument("response length does not match the weight vector");
  return LocalLinearSmoother(scores.plain(), weights).fit(Y);
}

double nw_fit(const Eigen::VectorXd& Y, const LocalWeights& weights) {
  if (weights.active.empty()) throw std::invalid_argument("Nadaraya-Watson fit needs at least one active point");
  if (static_cast<std::size_t>(Y.size()) != weights.size())
    throw std::invalid_argument("response length does not match the weight vector");
  double num = 0.0, den = 0.0;
  for (std::size_t i : weights.active) {
    num += weights.deltas[static_cast<Eigen::Index>(i)] * Y[static_cast<Eigen::Index>(i)];
    den += weights.deltas[static_cast<Eigen::Index>(i)];
  }
  return num / den;
}

Curve reconstruct_derivative(const DerivativeEstimate& est) {
  if (!est.basis) throw std::invalid_argument("derivative estimate has no basis");
  if (static_cast<std::size_t>(est.scores.size()) > est.basis->count())
    throw std::invalid_argument("more derivative scores than basis functions");
  if (est.center && !same_grid(est.center->grid(), est.basis->grid())) throw GridMismatchError();
  const Eigen::Index J = est.scores.size();
  Eigen::VectorXd values = est.basis->functions().topRows(J).transpose() * est.scores;
  return Curve(est.basis->grid(), std::move(values));
}

}  // namespace fllr
