#include "fllr/funcspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace fllr {

namespace {

constexpr double kOrthonormalTol = 1e-8;

Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& t) {
  const Eigen::Index p = t.size();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  for (Eigen::Index k = 0; k + 1 < p; ++k) {
    const double half = 0.5 * (t[k + 1] - t[k]);
    w[k] += half;
    w[k + 1] += half;
  }
  return w;
}

double epanechnikov(double u) { return std::abs(u) < 1.0 ? 0.75 * (1.0 - u * u) : 0.0; }

}  // namespace

Grid::Grid(std::vector<double> points) {
  if (points.size() < 3) throw std::invalid_argument("a grid needs at least 3 points");
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!std::isfinite(points[k])) throw std::invalid_argument("grid points must be finite");
    if (k > 0 && !(points[k] > points[k - 1]))
      throw std::invalid_argument("grid points must be strictly increasing");
  }
  points_ = Eigen::Map<const Eigen::VectorXd>(points.data(), static_cast<Eigen::Index>(points.size()));
  weights_ = trapezoid_weights(points_);
}

std::shared_ptr<const Grid> Grid::equispaced(double start, double end, std::size_t count) {
  if (count < 3) throw std::invalid_argument("a grid needs at least 3 points");
  if (!(end > start)) throw std::invalid_argument("grid end must exceed start");
  std::vector<double> pts(count);
  const double step = (end - start) / static_cast<double>(count - 1);
  for (std::size_t k = 0; k < count; ++k) pts[k] = start + step * static_cast<double>(k);
  pts.back() = end;
  return std::make_shared<const Grid>(std::move(pts));
}

bool same_grid(const GridPtr& a, const GridPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

Curve::Curve(GridPtr grid, Eigen::VectorXd values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw std::invalid_argument("curve requires a grid");
  if (values_.size() != static_cast<Eigen::Index>(grid_->size()))
    throw std::invalid_argument("curve length does not match its grid");
  if (!values_.allFinite()) throw std::invalid_argument("curve values must be finite");
}

CurveSet::CurveSet(GridPtr grid, Eigen::MatrixXd values, std::optional<Eigen::VectorXd> responses)
    : grid_(std::move(grid)), values_(std::move(values)), responses_(std::move(responses)) {
  if (!grid_) throw std::invalid_argument("curve set requires a grid");
  if (values_.cols() != static_cast<Eigen::Index>(grid_->size()))
    throw std::invalid_argument("curve set width does not match its grid");
  if (!values_.allFinite()) throw std::invalid_argument("curve values must be finite");
  if (responses_ && responses_->size() != values_.rows())
    throw std::invalid_argument("response count does not match curve count");
}

Curve CurveSet::curve(std::size_t i) const {
  return Curve(grid_, values_.row(static_cast<Eigen::Index>(i)).transpose());
}

const Eigen::VectorXd& CurveSet::responses() const {
  if (!responses_) throw std::logic_error("curve set has no responses");
  return *responses_;
}

CurveSet CurveSet::subset(std::span<const std::size_t> rows) const {
  Eigen::MatrixXd v(static_cast<Eigen::Index>(rows.size()), values_.cols());
  std::optional<Eigen::VectorXd> y;
  if (responses_) y = Eigen::VectorXd(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= size()) throw std::out_of_range("curve index out of range");
    const auto src = static_cast<Eigen::Index>(rows[r]);
    v.row(static_cast<Eigen::Index>(r)) = values_.row(src);
    if (y) (*y)[static_cast<Eigen::Index>(r)] = (*responses_)[src];
  }
  return CurveSet(grid_, std::move(v), std::move(y));
}

CurveSet CurveSet::with_responses(Eigen::VectorXd responses) const {
  return CurveSet(grid_, values_, std::move(responses));
}

BasisSystem::BasisSystem(GridPtr grid, Eigen::MatrixXd functions, BasisKind kind)
    : grid_(std::move(grid)), functions_(std::move(functions)), kind_(kind) {
  if (!grid_) throw std::invalid_argument("basis requires a grid");
  if (functions_.cols() != static_cast<Eigen::Index>(grid_->size()))
    throw std::invalid_argument("basis width does not match its grid");
  const Eigen::MatrixXd gram = functions_ * grid_->weights().asDiagonal() * functions_.transpose();
  const Eigen::MatrixXd dev = gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
  if (dev.size() > 0 && dev.cwiseAbs().maxCoeff() > kOrthonormalTol)
    throw std::invalid_argument("basis functions are not orthonormal under the grid quadrature");
}

Curve BasisSystem::function(std::size_t j) const {
  return Curve(grid_, functions_.row(static_cast<Eigen::Index>(j)).transpose());
}

BasisSystem BasisSystem::truncated(std::size_t J) const {
  if (J > count()) throw std::invalid_argument("cannot truncate a basis to more functions than it has");
  return BasisSystem(grid_, functions_.topRows(static_cast<Eigen::Index>(J)), kind_);
}

Eigen::MatrixXd ScoreMatrix::plain() const {
  return augmented ? Eigen::MatrixXd(values.rightCols(values.cols() - 1)) : values;
}

ScoreMatrix ScoreMatrix::with_intercept() const {
  if (augmented) return *this;
  ScoreMatrix out;
  out.values.resize(values.rows(), values.cols() + 1);
  out.values.col(0).setOnes();
  out.values.rightCols(values.cols()) = values;
  out.augmented = true;
  out.center = center;
  return out;
}

double fourier_function(std::size_t index, double t, double start, double end) {
  if (index == 0) throw std::invalid_argument("Fourier functions are indexed from 1");
  const double len = end - start;
  const double s = (t - start) / len;
  const double scale = 1.0 / std::sqrt(len);
  if (index == 1) return scale;
  const double freq = 2.0 * std::numbers::pi * static_cast<double>(index / 2);
  const double v = (index % 2 == 0) ? std::cos(freq * s) : std::sin(freq * s);
  return scale * std::numbers::sqrt2 * v;
}

BasisSystem fourier_basis(const GridPtr& grid, std::size_t J) {
  Eigen::MatrixXd f(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(grid->size()));
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t k = 0; k < grid->size(); ++k)
      f(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
          fourier_function(j + 1, grid->points()[static_cast<Eigen::Index>(k)], grid->start(), grid->end());
  return BasisSystem(grid, std::move(f), BasisKind::fourier);
}

double inner_product(const Curve& f, const Curve& g) {
  if (!same_grid(f.grid(), g.grid())) throw GridMismatchError();
  const auto& w = f.grid()->weights();
  double s = 0.0;
  for (Eigen::Index k = 0; k < w.size(); ++k) s += w[k] * f.values()[k] * g.values()[k];
  return s;
}

double l2_distance(const Curve& f, const Curve& g) {
  if (!same_grid(f.grid(), g.grid())) throw GridMismatchError();
  const auto& w = f.grid()->weights();
  double s = 0.0;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    const double d = f.values()[k] - g.values()[k];
    s += w[k] * d * d;
  }
  return std::sqrt(s);
}

std::optional<Eigen::MatrixXd> local_linear_hat(const Grid& grid, double h) {
  const auto& t = grid.points();
  const Eigen::Index p = t.size();
  Eigen::MatrixXd hat = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    double s0 = 0, s1 = 0, s2 = 0;
    Eigen::VectorXd k(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double d = t[j] - t[i];
      k[j] = epanechnikov(d / h);
      s0 += k[j];
      s1 += k[j] * d;
      s2 += k[j] * d * d;
    }
    const double det = s0 * s2 - s1 * s1;
    if (!(s0 > 0.0) || !(det > 1e-12 * s0 * s2) || !(s2 > 0.0)) return std::nullopt;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double d = t[j] - t[i];
      hat(i, j) = k[j] * (s2 - s1 * d) / det;
    }
  }
  return hat;
}

namespace {

std::vector<double> bandwidth_candidates(const Grid& grid, std::size_t count) {
  const auto& t = grid.points();
  double spacing = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k + 1 < t.size(); ++k) spacing = std::min(spacing, t[k + 1] - t[k]);
  const double hi = grid.length() / 2.0;
  std::vector<double> out;
  if (count <= 1) return {hi};
  for (std::size_t c = 0; c < count; ++c)
    out.push_back(spacing * std::pow(hi / spacing, static_cast<double>(c) / static_cast<double>(count - 1)));
  return out;
}

// Smallest bandwidth >= h (on a 5% geometric ladder) with a nonsingular hat matrix.
std::pair<double, Eigen::MatrixXd> widen_until_valid(const Grid& grid, double h) {
  double cur = h;
  for (int step = 0; step < 2000; ++step) {
    if (auto hat = local_linear_hat(grid, cur)) return {cur, std::move(*hat)};
    cur *= 1.05;
  }
  throw std::runtime_error("no valid presmoothing bandwidth found");
}

}  // namespace

PresmoothResult presmooth(const CurveSet& raw, const PresmoothOptions& options) {
  const Grid& grid = *raw.grid();
  const auto n = static_cast<Eigen::Index>(raw.size());
  Eigen::MatrixXd out(n, raw.values().cols());
  std::vector<double> chosen(static_cast<std::size_t>(n));
  std::vector<std::string> warnings;

  if (options.rule == PresmoothRule::fixed) {
    if (!(options.bandwidth > 0.0)) throw std::invalid_argument("fixed presmoothing bandwidth must be positive");
    auto [h, hat] = widen_until_valid(grid, options.bandwidth);
    if (h != options.bandwidth)
      warnings.push_back("presmoothing bandwidth " + std::to_string(options.bandwidth) + " widened to " +
                         std::to_string(h));
    out = raw.values() * hat.transpose();
    std::fill(chosen.begin(), chosen.end(), h);
    return {CurveSet(raw.grid(), std::move(out), raw.has_responses() ? std::optional(raw.responses()) : std::nullopt),
            std::move(chosen), std::move(warnings)};
  }

  // Hat matrices depend only on the grid, so every curve shares them.
  struct Candidate {
    double h;
    Eigen::MatrixXd hat;
  };
  std::vector<Candidate> cands;
  std::size_t skipped = 0;
  for (double h : bandwidth_candidates(grid, options.candidates)) {
    auto hat = local_linear_hat(grid, h);
    if (!hat || ((Eigen::VectorXd::Ones(hat->rows()) - hat->diagonal()).minCoeff() < 1e-8)) {
      ++skipped;
      continue;
    }
    cands.push_back({h, std::move(*hat)});
  }
  if (skipped > 0)
    warnings.push_back(std::to_string(skipped) + " presmoothing bandwidth candidates were too narrow and skipped");
  if (cands.empty()) {
    auto [h, hat] = widen_until_valid(grid, bandwidth_candidates(grid, 1).front());
    cands.push_back({h, std::move(hat)});
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd y = raw.values().row(i).transpose();
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_c = 0;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      const auto& hat = cands[c].hat;
      const Eigen::VectorXd fit = hat * y;
      double score = 0.0;
      for (Eigen::Index k = 0; k < y.size(); ++k) {
        const double r = (y[k] - fit[k]) / (1.0 - hat(k, k));
        score += r * r;
      }
      if (score < best) {
        best = score;
        best_c = c;
      }
    }
    out.row(i) = (cands[best_c].hat * y).transpose();
    chosen[static_cast<std::size_t>(i)] = cands[best_c].h;
  }
  return {CurveSet(raw.grid(), std::move(out), raw.has_responses() ? std::optional(raw.responses()) : std::nullopt),
          std::move(chosen), std::move(warnings)};
}

BasisSystem estimate_fpca_basis(const CurveSet& data, std::size_t J) {
  const auto n = data.size();
  const std::size_t p = data.grid()->size();
  if (J == 0) throw std::invalid_argument("FPCA needs at least one component");
  if (n < 2) throw RankError(J, 0);
  if (J > std::min(n - 1, p)) throw RankError(J, std::min(n - 1, p));

  const Eigen::VectorXd mean = data.values().colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.values().rowwise() - mean.transpose();
  const Eigen::VectorXd sqrt_w = data.grid()->weights().cwiseSqrt();
  // Symmetrized discretization of the covariance operator: W^1/2 Sigma W^1/2.
  const Eigen::MatrixXd scaled = centered * sqrt_w.asDiagonal();
  const Eigen::MatrixXd op = scaled.transpose() * scaled / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(op);
  if (eig.info() != Eigen::Success) throw std::runtime_error("FPCA eigendecomposition failed");

  const Eigen::VectorXd& vals = eig.eigenvalues();  // ascending
  const double top = vals[vals.size() - 1];
  std::size_t rank = 0;
  for (Eigen::Index k = vals.size() - 1; k >= 0; --k)
    if (vals[k] > 1e-10 * top && vals[k] > 0.0) ++rank;
  if (J > rank) throw RankError(J, rank);

  Eigen::MatrixXd funcs(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(p));
  const auto& w = data.grid()->weights();
  for (std::size_t j = 0; j < J; ++j) {
    const Eigen::Index col = vals.size() - 1 - static_cast<Eigen::Index>(j);
    Eigen::VectorXd phi = eig.eigenvectors().col(col).cwiseQuotient(sqrt_w);
    phi /= std::sqrt((phi.array().square() * w.array()).sum());
    // Sign: nonnegative integral, tie broken by the first nonzero value.
    const double integral = w.dot(phi);
    bool flip = false;
    if (std::abs(integral) > 1e-10 * std::sqrt(w.sum())) {
      flip = integral < 0.0;
    } else {
      for (Eigen::Index k = 0; k < phi.size(); ++k) {
        if (std::abs(phi[k]) > 1e-12) {
          flip = phi[k] < 0.0;
          break;
        }
      }
    }
    if (flip) phi = -phi;
    funcs.row(static_cast<Eigen::Index>(j)) = phi.transpose();
  }
  return BasisSystem(data.grid(), std::move(funcs), BasisKind::fpca);
}

Eigen::MatrixXd project(const CurveSet& data, const BasisSystem& basis) {
  if (!same_grid(data.grid(), basis.grid())) throw GridMismatchError();
  return data.values() * data.grid()->weights().asDiagonal() * basis.functions().transpose();
}

ScoreMatrix project_scores(const CurveSet& data, const Curve& center, const BasisSystem& basis) {
  if (!same_grid(data.grid(), basis.grid()) || !same_grid(center.grid(), basis.grid())) throw GridMismatchError();
  const auto& w = data.grid()->weights();
  const Eigen::Index n = data.values().rows();
  const Eigen::Index J = basis.functions().rows();
  const Eigen::Index p = w.size();
  ScoreMatrix s;
  s.values.resize(n, J);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < J; ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < p; ++k)
        acc += w[k] * (data.values()(i, k) - center.values()[k]) * basis.functions()(j, k);
      s.values(i, j) = acc;
    }
  }
  s.center = center;
  return s;
}

}  // namespace fllr
