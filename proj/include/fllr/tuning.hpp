#pragma once

// Global tuning of the truncation dimension J and the three k-NN bandwidths:
//   k_hLL  FLLR regression bandwidth, by leave-one-out CV;
//   k_hd   bandwidth of the plug-in derivative, by wild bootstrap;
//   k_hr   FLLR-r regression bandwidth, by leave-one-out CV with the ridge
//          QP re-solved in every fold.
// J* minimizes the FLLR-r cross-validation score over all (J, k).

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fllr/estimators.hpp"
#include "fllr/funcspace.hpp"
#include "fllr/localkernel.hpp"
#include "fllr/ridgepen.hpp"

namespace fllr {

struct TuningGrid {
  std::vector<std::size_t> J_candidates = default_J_candidates();
  /// Empty means default_k_candidates() for the training size.
  std::vector<std::size_t> k_candidates;
  double max_neighbor_fraction = 0.7;
  std::size_t B = 50;
  std::uint64_t seed = 0;
  KernelSpec kernel{};

  static std::vector<std::size_t> default_J_candidates() {
    std::vector<std::size_t> j(15);
    for (std::size_t i = 0; i < j.size(); ++i) j[i] = i + 1;
    return j;
  }
  std::size_t max_J() const;
  /// floor(max_neighbor_fraction * (n - 1)).
  std::size_t neighbor_cap(std::size_t n) const;
  /// The explicit candidates, or the default grid for n training curves.
  std::vector<std::size_t> resolved_k_candidates(std::size_t n) const;
  /// Throws std::invalid_argument when a candidate violates max(J)+2 <= k <= cap.
  void validate(std::size_t n) const;
};

/// 10 log-spaced integers from min_k to cap, deduplicated.
std::vector<std::size_t> default_k_candidates(std::size_t min_k, std::size_t cap, std::size_t count = 10);

/// Precomputed pairwise distances and basis projections of a training sample.
class TrainingContext {
 public:
  TrainingContext(const CurveSet& train, const BasisSystem& basis, KernelSpec kernel = {});

  std::size_t size() const noexcept { return static_cast<std::size_t>(Y_.size()); }
  std::size_t max_J() const noexcept { return static_cast<std::size_t>(proj_.cols()); }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  const Eigen::VectorXd& Y() const noexcept { return Y_; }
  const Eigen::MatrixXd& distances() const noexcept { return dist_; }
  const Eigen::MatrixXd& projections() const noexcept { return proj_; }
  const BasisSystem& basis() const noexcept { return basis_; }
  const CurveSet& curves() const noexcept { return curves_; }

  /// Distances from curve i to the other n-1 curves.
  Eigen::VectorXd loo_distances(std::size_t i) const;
  /// Scores of the other n-1 curves centered at curve i, first J basis functions.
  Eigen::MatrixXd loo_scores(std::size_t i, std::size_t J) const;
  static Eigen::VectorXd drop(const Eigen::VectorXd& v, std::size_t i);

 private:
  CurveSet curves_;
  BasisSystem basis_;
  KernelSpec kernel_;
  Eigen::VectorXd Y_;
  Eigen::MatrixXd dist_;
  Eigen::MatrixXd proj_;
};

/// Leave-one-out local linear operators for one J, built on demand. A
/// singular fit at (i, k) escalates to the smallest k' > k that is valid.
class LooSmootherCache {
 public:
  LooSmootherCache(const TrainingContext& ctx, std::size_t J);

  struct Entry {
    const LocalLinearSmoother* smoother;
    std::size_t k_used;
  };
  /// Throws SingularFitError when no k' in [k, n-1] gives a valid fit.
  Entry get(std::size_t i, std::size_t k);
  std::size_t escalations() const noexcept { return escalations_; }
  std::size_t J() const noexcept { return J_; }
  const Eigen::MatrixXd& scores(std::size_t i) const { return scores_[i]; }
  const Eigen::VectorXd& distances(std::size_t i) const { return dists_[i]; }

 private:
  const TrainingContext& ctx_;
  std::size_t J_;
  std::vector<Eigen::MatrixXd> scores_;
  std::vector<Eigen::VectorXd> dists_;
  // Per center: k -> operator, null when the fit at k is singular.
  std::vector<std::map<std::size_t, std::unique_ptr<LocalLinearSmoother>>> built_;
  // Per center: requested k -> k actually used.
  std::vector<std::map<std::size_t, std::size_t>> resolved_;
  std::size_t escalations_ = 0;

  const LocalLinearSmoother* build(std::size_t i, std::size_t k);
};

struct LoocvResult {
  /// Mean squared leave-one-out residual.
  double score = 0.0;
  Eigen::VectorXd residuals;
  /// m_hat^(-i)(X_i).
  Eigen::VectorXd fitted;
  /// Leave-one-out derivative scores at each X_i, n x J.
  Eigen::MatrixXd betas;
  std::size_t escalations = 0;
};

LoocvResult loocv_fllr(const TrainingContext& ctx, std::size_t J, std::size_t k);
LoocvResult loocv_fllr(const CurveSet& train, const BasisSystem& basis, std::size_t J, std::size_t k,
                       KernelSpec kernel = {});
LoocvResult loocv_fllr(LooSmootherCache& cache, const TrainingContext& ctx, std::size_t k);

/// Mean squared leave-one-out residual of Nadaraya-Watson with k neighbours.
double loocv_nw(const TrainingContext& ctx, std::size_t k);

/// i.i.d. draws from Mammen's two-point law:
/// -(sqrt5 - 1)/2 w.p. (sqrt5 + 1)/(2 sqrt5), (sqrt5 + 1)/2 otherwise.
std::vector<double> mammen_draws(std::size_t count, std::uint64_t seed);

struct BootstrapOptions {
  /// Replaces every multiplier (test hook).
  std::optional<double> forced_multiplier;
};

struct HdSelection {
  std::size_t k_hd = 0;
  /// (k, criterion) per candidate.
  std::vector<std::pair<std::size_t, double>> curve;
};

/// Wild-bootstrap choice of the derivative bandwidth. `base` is the LOOCV
/// result at (J, k_hLL). Replicate b uses multipliers mammen_draws(n,
/// derive_seed(seed, {bootstrap, b})), so v_i^b is the i-th draw of stream b.
HdSelection select_hd(LooSmootherCache& cache, const TrainingContext& ctx, const LoocvResult& base,
                      std::span<const std::size_t> k_candidates, std::size_t B, std::uint64_t seed,
                      const BootstrapOptions& options = {});
HdSelection select_hd(const CurveSet& train, const BasisSystem& basis, std::size_t J, std::size_t k_hLL,
                      const TuningGrid& grid, std::uint64_t seed, const BootstrapOptions& options = {});

/// Sample standard deviation (n - 1 denominator) of leave-one-out residuals.
double residual_sigma(const Eigen::VectorXd& residuals);

/// LOOCV of FLLR-r at regression bandwidth k_r with plug-in derivatives at k_hd.
LoocvResult loocv_fllr_r(LooSmootherCache& cache, const TrainingContext& ctx, std::size_t k_r, std::size_t k_hd,
                         double sigma_e);

struct CvEntry {
  std::size_t J = 0;
  std::size_t k = 0;
  double score = 0.0;
};

struct PerJTuning {
  std::size_t J = 0;
  std::size_t k_hLL = 0;
  std::size_t k_hd = 0;
  std::size_t k_hr = 0;
  double sigma_e = 0.0;
  double fllr_score = 0.0;
  double ridge_score = 0.0;
  std::vector<std::pair<std::size_t, double>> bootstrap_curve;
};

struct TuningReport {
  std::size_t J_star = 0;
  std::size_t k_hLL = 0;
  std::size_t k_hd = 0;
  std::size_t k_hr = 0;
  /// FLLR baseline optimum of the step-one curve.
  std::size_t J_star_fllr = 0;
  std::size_t k_fllr = 0;
  /// Nadaraya-Watson neighbour count.
  std::size_t k_nw = 0;
  /// FLLR-r LOOCV scores over (J, k); empty when the ridge steps were skipped.
  std::vector<CvEntry> cv_curve;
  /// FLLR LOOCV scores over (J, k).
  std::vector<CvEntry> fllr_cv_curve;
  std::vector<std::pair<std::size_t, double>> nw_cv_curve;
  double sigma_e = 0.0;
  /// Bootstrap criterion at J*.
  std::vector<std::pair<std::size_t, double>> bootstrap_curve;
  std::vector<PerJTuning> per_J;
  std::size_t escalations = 0;
};

struct SelectOptions {
  bool ridge = true;
  bool nw = true;
};

/// Full nested search over grid.J_candidates. `train` must carry responses
/// and `basis` at least max(J) functions.
TuningReport select_all(const CurveSet& train, const BasisSystem& basis, const TuningGrid& grid,
                        const SelectOptions& options = {});
TuningReport select_all(const TrainingContext& ctx, const TuningGrid& grid, const SelectOptions& options = {});

/// Neighbour counts for Nadaraya-Watson: 10 log-spaced integers from 1 to the cap.
std::vector<std::size_t> nw_k_candidates(std::size_t n, double max_neighbor_fraction);

/// A query curve seen from a training context.
struct QueryPoint {
  Eigen::VectorXd distances;
  Eigen::RowVectorXd projection;
};

QueryPoint make_query(const TrainingContext& ctx, const Curve& x);

/// Prediction with automatic k escalation on singular fits; `escalations` is incremented.
LocalFit predict_fllr(const TrainingContext& ctx, const QueryPoint& q, std::size_t J, std::size_t k,
                      std::size_t* escalations = nullptr);
RidgeFit predict_fllr_r(const TrainingContext& ctx, const QueryPoint& q, std::size_t J, std::size_t k_hd,
                        std::size_t k_hr, double sigma_e, std::size_t* escalations = nullptr);
double predict_nw(const TrainingContext& ctx, const QueryPoint& q, std::size_t k);

}  // namespace fllr
