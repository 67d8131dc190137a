#include "fllr/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "fllr/seeding.hpp"

namespace fllr {

std::size_t TuningGrid::max_J() const {
  if (J_candidates.empty()) throw std::invalid_argument("J_candidates is empty");
  return *std::max_element(J_candidates.begin(), J_candidates.end());
}

std::size_t TuningGrid::neighbor_cap(std::size_t n) const {
  if (n < 2) return 0;
  return static_cast<std::size_t>(std::floor(max_neighbor_fraction * static_cast<double>(n - 1)));
}

std::vector<std::size_t> TuningGrid::resolved_k_candidates(std::size_t n) const {
  if (!k_candidates.empty()) {
    std::vector<std::size_t> ks = k_candidates;
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    return ks;
  }
  return default_k_candidates(max_J() + 2, neighbor_cap(n));
}

void TuningGrid::validate(std::size_t n) const {
  if (J_candidates.empty()) throw std::invalid_argument("J_candidates is empty");
  for (std::size_t J : J_candidates)
    if (J == 0) throw std::invalid_argument("J candidates must be at least 1");
  if (!(max_neighbor_fraction > 0.0 && max_neighbor_fraction <= 1.0))
    throw std::invalid_argument("max_neighbor_fraction must lie in (0, 1]");
  if (B == 0) throw std::invalid_argument("B must be at least 1");
  const std::size_t lo = max_J() + 2;
  const std::size_t cap = neighbor_cap(n);
  const auto ks = resolved_k_candidates(n);
  if (ks.empty()) throw std::invalid_argument("no k candidates");
  for (std::size_t k : ks) {
    if (k < lo || k > cap)
      throw std::invalid_argument("k candidate " + std::to_string(k) + " outside [" + std::to_string(lo) + ", " +
                                  std::to_string(cap) + "]");
  }
}

std::vector<std::size_t> default_k_candidates(std::size_t min_k, std::size_t cap, std::size_t count) {
  if (min_k == 0) min_k = 1;
  if (min_k > cap)
    throw std::invalid_argument("neighbour cap " + std::to_string(cap) + " is below the minimum k " +
                                std::to_string(min_k));
  if (count <= 1 || min_k == cap) return {min_k};
  std::vector<std::size_t> ks;
  const double lo = std::log(static_cast<double>(min_k));
  const double hi = std::log(static_cast<double>(cap));
  for (std::size_t c = 0; c < count; ++c) {
    const double t = static_cast<double>(c) / static_cast<double>(count - 1);
    auto k = static_cast<std::size_t>(std::lround(std::exp(lo + t * (hi - lo))));
    ks.push_back(std::clamp(k, min_k, cap));
  }
  ks.front() = min_k;
  ks.back() = cap;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

std::vector<std::size_t> nw_k_candidates(std::size_t n, double max_neighbor_fraction) {
  TuningGrid g;
  g.max_neighbor_fraction = max_neighbor_fraction;
  return default_k_candidates(1, std::max<std::size_t>(1, g.neighbor_cap(n)));
}

// ---------------------------------------------------------------------------

TrainingContext::TrainingContext(const CurveSet& train, const BasisSystem& basis, KernelSpec kernel)
    : curves_(train), basis_(basis), kernel_(kernel), Y_(train.responses()) {
  if (!same_grid(train.grid(), basis.grid())) throw GridMismatchError();
  const std::size_t n = train.size();
  if (n < 3) throw std::invalid_argument("at least 3 training curves are required");
  dist_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const Eigen::VectorXd& w = train.grid()->weights();
  const Eigen::MatrixXd& X = train.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = i + 1; l < n; ++l) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto ll = static_cast<Eigen::Index>(l);
      const double d2 = ((X.row(ii) - X.row(ll)).array().square() * w.transpose().array()).sum();
      dist_(ii, ll) = dist_(ll, ii) = std::sqrt(std::max(d2, 0.0));
    }
  }
  proj_ = project(train, basis);
}

Eigen::VectorXd TrainingContext::drop(const Eigen::VectorXd& v, std::size_t i) {
  const auto n = v.size();
  const auto ii = static_cast<Eigen::Index>(i);
  Eigen::VectorXd out(n - 1);
  out.head(ii) = v.head(ii);
  out.tail(n - ii - 1) = v.tail(n - ii - 1);
  return out;
}

Eigen::VectorXd TrainingContext::loo_distances(std::size_t i) const {
  return drop(dist_.col(static_cast<Eigen::Index>(i)), i);
}

Eigen::MatrixXd TrainingContext::loo_scores(std::size_t i, std::size_t J) const {
  if (J == 0 || J > max_J()) throw std::invalid_argument("J outside the projected basis range");
  const auto n = static_cast<Eigen::Index>(size());
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(J);
  Eigen::MatrixXd out(n - 1, jj);
  out.topRows(ii) = proj_.topLeftCorner(ii, jj);
  out.bottomRows(n - ii - 1) = proj_.bottomLeftCorner(n - ii - 1, jj);
  out.rowwise() -= proj_.row(ii).head(jj);
  return out;
}

// ---------------------------------------------------------------------------

LooSmootherCache::LooSmootherCache(const TrainingContext& ctx, std::size_t J)
    : ctx_(ctx), J_(J), built_(ctx.size()), resolved_(ctx.size()) {
  scores_.reserve(ctx.size());
  dists_.reserve(ctx.size());
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    scores_.push_back(ctx.loo_scores(i, J));
    dists_.push_back(ctx.loo_distances(i));
  }
}

const LocalLinearSmoother* LooSmootherCache::build(std::size_t i, std::size_t k) {
  auto& slot = built_[i];
  auto it = slot.find(k);
  if (it != slot.end()) return it->second.get();
  std::unique_ptr<LocalLinearSmoother> sm;
  const auto& d = dists_[i];
  const auto w = local_weights(std::span<const double>(d.data(), static_cast<std::size_t>(d.size())), k,
                               ctx_.kernel());
  try {
    sm = std::make_unique<LocalLinearSmoother>(scores_[i], w);
  } catch (const SingularFitError&) {
  }
  return slot.emplace(k, std::move(sm)).first->second.get();
}

LooSmootherCache::Entry LooSmootherCache::get(std::size_t i, std::size_t k) {
  auto it = resolved_[i].find(k);
  if (it != resolved_[i].end()) return {built_[i].at(it->second).get(), it->second};
  const std::size_t n_loo = ctx_.size() - 1;
  for (std::size_t kk = k; kk <= n_loo; ++kk) {
    if (const auto* sm = build(i, kk)) {
      resolved_[i].emplace(k, kk);
      if (kk != k) ++escalations_;
      return {sm, kk};
    }
  }
  throw SingularFitError("no valid local linear fit at curve " + std::to_string(i) + " for any k >= " +
                             std::to_string(k),
                         std::numeric_limits<double>::infinity());
}

// ---------------------------------------------------------------------------

LoocvResult loocv_fllr(LooSmootherCache& cache, const TrainingContext& ctx, std::size_t k) {
  const std::size_t n = ctx.size();
  const std::size_t before = cache.escalations();
  LoocvResult r;
  r.residuals.resize(static_cast<Eigen::Index>(n));
  r.fitted.resize(static_cast<Eigen::Index>(n));
  r.betas.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cache.J()));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto e = cache.get(i, k);
    const LocalFit fit = e.smoother->fit(TrainingContext::drop(ctx.Y(), i));
    r.fitted(ii) = fit.m_hat;
    r.residuals(ii) = ctx.Y()(ii) - fit.m_hat;
    r.betas.row(ii) = fit.beta.transpose();
  }
  r.score = r.residuals.squaredNorm() / static_cast<double>(n);
  r.escalations = cache.escalations() - before;
  return r;
}

LoocvResult loocv_fllr(const TrainingContext& ctx, std::size_t J, std::size_t k) {
  LooSmootherCache cache(ctx, J);
  return loocv_fllr(cache, ctx, k);
}

LoocvResult loocv_fllr(const CurveSet& train, const BasisSystem& basis, std::size_t J, std::size_t k,
                       KernelSpec kernel) {
  TrainingContext ctx(train, basis, kernel);
  return loocv_fllr(ctx, J, k);
}

double loocv_nw(const TrainingContext& ctx, std::size_t k) {
  const std::size_t n = ctx.size();
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd d = ctx.loo_distances(i);
    const auto w =
        local_weights(std::span<const double>(d.data(), static_cast<std::size_t>(d.size())), k, ctx.kernel());
    const double r = ctx.Y()(static_cast<Eigen::Index>(i)) - nw_fit(TrainingContext::drop(ctx.Y(), i), w);
    ss += r * r;
  }
  return ss / static_cast<double>(n);
}

// ---------------------------------------------------------------------------

std::vector<double> mammen_draws(std::size_t count, std::uint64_t seed) {
  const double s5 = std::sqrt(5.0);
  const double low = -(s5 - 1.0) / 2.0;
  const double high = (s5 + 1.0) / 2.0;
  const double p_low = (s5 + 1.0) / (2.0 * s5);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> v(count);
  for (auto& x : v) x = unif(rng) < p_low ? low : high;
  return v;
}

HdSelection select_hd(LooSmootherCache& cache, const TrainingContext& ctx, const LoocvResult& base,
                      std::span<const std::size_t> k_candidates, std::size_t B, std::uint64_t seed,
                      const BootstrapOptions& options) {
  if (B == 0) throw std::invalid_argument("B must be at least 1");
  if (k_candidates.empty()) throw std::invalid_argument("no k candidates");
  const std::size_t n = ctx.size();
  const auto nn = static_cast<Eigen::Index>(n);

  // The derivative operator is linear in the response, so averaging the B
  // refitted derivatives equals one fit on the averaged bootstrap response.
  Eigen::VectorXd y_mean = Eigen::VectorXd::Zero(nn);
  for (std::size_t b = 0; b < B; ++b) {
    Eigen::VectorXd v(nn);
    if (options.forced_multiplier) {
      v.setConstant(*options.forced_multiplier);
    } else {
      const auto draws = mammen_draws(n, derive_seed(seed, {tag(Stream::bootstrap), b}));
      v = Eigen::Map<const Eigen::VectorXd>(draws.data(), nn);
    }
    y_mean += base.fitted + base.residuals.cwiseProduct(v);
  }
  y_mean /= static_cast<double>(B);

  // Criteria within rounding of each other are ties (smallest k wins); this
  // matters when the model is exactly linear and every criterion is ~0.
  const double tie = 1e-12 * base.betas.squaredNorm() / static_cast<double>(n);
  HdSelection out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k : k_candidates) {
    double crit = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto e = cache.get(i, k);
      const Eigen::VectorXd beta = e.smoother->derivative(TrainingContext::drop(y_mean, i));
      crit += (base.betas.row(static_cast<Eigen::Index>(i)).transpose() - beta).squaredNorm();
    }
    crit /= static_cast<double>(n);
    out.curve.emplace_back(k, crit);
    if (crit < best - tie) {
      best = crit;
      out.k_hd = k;
    }
  }
  return out;
}

HdSelection select_hd(const CurveSet& train, const BasisSystem& basis, std::size_t J, std::size_t k_hLL,
                      const TuningGrid& grid, std::uint64_t seed, const BootstrapOptions& options) {
  TrainingContext ctx(train, basis, grid.kernel);
  LooSmootherCache cache(ctx, J);
  const LoocvResult base = loocv_fllr(cache, ctx, k_hLL);
  const auto ks = grid.resolved_k_candidates(ctx.size());
  return select_hd(cache, ctx, base, ks, grid.B, seed, options);
}

double residual_sigma(const Eigen::VectorXd& residuals) {
  const auto n = residuals.size();
  if (n < 2) return 0.0;
  const double mean = residuals.mean();
  return std::sqrt((residuals.array() - mean).square().sum() / static_cast<double>(n - 1));
}

LoocvResult loocv_fllr_r(LooSmootherCache& cache, const TrainingContext& ctx, std::size_t k_r, std::size_t k_hd,
                         double sigma_e) {
  const std::size_t n = ctx.size();
  const std::size_t before = cache.escalations();
  LoocvResult r;
  r.residuals.resize(static_cast<Eigen::Index>(n));
  r.fitted.resize(static_cast<Eigen::Index>(n));
  r.betas.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cache.J()));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const Eigen::VectorXd y = TrainingContext::drop(ctx.Y(), i);
    const Eigen::VectorXd beta = cache.get(i, k_hd).smoother->derivative(y);
    // The regression weights share the escalation rule of the plug-in fits.
    const std::size_t k_used = cache.get(i, k_r).k_used;
    const auto& d = cache.distances(i);
    const auto w = local_weights(std::span<const double>(d.data(), static_cast<std::size_t>(d.size())), k_used,
                                 ctx.kernel());
    const RidgeFit fit = fllr_r_fit(cache.scores(i), w, y, beta, sigma_e);
    r.fitted(ii) = fit.m_hat;
    r.residuals(ii) = ctx.Y()(ii) - fit.m_hat;
    r.betas.row(ii) = beta.transpose();
  }
  r.score = r.residuals.squaredNorm() / static_cast<double>(n);
  r.escalations = cache.escalations() - before;
  return r;
}

// ---------------------------------------------------------------------------

namespace {

// Lexicographic (score, J, k) comparison; candidates are visited in
// ascending J and k so a strict < keeps the smallest index on ties.
const CvEntry* argmin(const std::vector<CvEntry>& curve) {
  const CvEntry* best = nullptr;
  for (const auto& e : curve) {
    if (!best || e.score < best->score || (e.score == best->score && (e.J < best->J || (e.J == best->J && e.k < best->k))))
      best = &e;
  }
  return best;
}

}  // namespace

TuningReport select_all(const TrainingContext& ctx, const TuningGrid& grid, const SelectOptions& options) {
  const std::size_t n = ctx.size();
  grid.validate(n);
  if (grid.max_J() > ctx.max_J()) throw std::invalid_argument("basis has fewer functions than max(J)");
  const auto ks = grid.resolved_k_candidates(n);
  std::vector<std::size_t> Js = grid.J_candidates;
  std::sort(Js.begin(), Js.end());
  Js.erase(std::unique(Js.begin(), Js.end()), Js.end());

  TuningReport rep;
  for (std::size_t J : Js) {
    LooSmootherCache cache(ctx, J);
    PerJTuning pj;
    pj.J = J;
    LoocvResult best_base;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k : ks) {
      LoocvResult res = loocv_fllr(cache, ctx, k);
      rep.fllr_cv_curve.push_back({J, k, res.score});
      if (res.score < best) {
        best = res.score;
        pj.k_hLL = k;
        best_base = std::move(res);
      }
    }
    pj.fllr_score = best;
    pj.sigma_e = residual_sigma(best_base.residuals);

    if (options.ridge) {
      const auto hd = select_hd(cache, ctx, best_base, ks, grid.B, derive_seed(grid.seed, {tag(Stream::tuning), J}));
      pj.k_hd = hd.k_hd;
      pj.bootstrap_curve = hd.curve;
      double best_r = std::numeric_limits<double>::infinity();
      for (std::size_t k : ks) {
        const LoocvResult res = loocv_fllr_r(cache, ctx, k, pj.k_hd, pj.sigma_e);
        rep.cv_curve.push_back({J, k, res.score});
        if (res.score < best_r) {
          best_r = res.score;
          pj.k_hr = k;
        }
      }
      pj.ridge_score = best_r;
    }
    rep.escalations += cache.escalations();
    rep.per_J.push_back(std::move(pj));
  }

  const auto find_J = [&](std::size_t J) -> const PerJTuning& {
    for (const auto& pj : rep.per_J)
      if (pj.J == J) return pj;
    throw std::logic_error("missing per-J tuning record");
  };

  const CvEntry* bf = argmin(rep.fllr_cv_curve);
  rep.J_star_fllr = bf->J;
  rep.k_fllr = bf->k;

  if (options.ridge) {
    const CvEntry* br = argmin(rep.cv_curve);
    const PerJTuning& pj = find_J(br->J);
    rep.J_star = br->J;
    rep.k_hr = br->k;
    rep.k_hLL = pj.k_hLL;
    rep.k_hd = pj.k_hd;
    rep.sigma_e = pj.sigma_e;
    rep.bootstrap_curve = pj.bootstrap_curve;
  } else {
    const PerJTuning& pj = find_J(bf->J);
    rep.J_star = bf->J;
    rep.k_hLL = pj.k_hLL;
    rep.sigma_e = pj.sigma_e;
  }

  if (options.nw) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k : nw_k_candidates(n, grid.max_neighbor_fraction)) {
      const double s = loocv_nw(ctx, k);
      rep.nw_cv_curve.emplace_back(k, s);
      if (s < best) {
        best = s;
        rep.k_nw = k;
      }
    }
  }
  return rep;
}

TuningReport select_all(const CurveSet& train, const BasisSystem& basis, const TuningGrid& grid,
                        const SelectOptions& options) {
  TrainingContext ctx(train, basis, grid.kernel);
  return select_all(ctx, grid, options);
}

// ---------------------------------------------------------------------------

QueryPoint make_query(const TrainingContext& ctx, const Curve& x) {
  if (!same_grid(x.grid(), ctx.curves().grid())) throw GridMismatchError();
  QueryPoint q;
  q.distances = distances_to(ctx.curves(), x);
  const Eigen::VectorXd& w = x.grid()->weights();
  q.projection = (ctx.basis().functions() * x.values().cwiseProduct(w)).transpose();
  return q;
}

namespace {

Eigen::MatrixXd query_scores(const TrainingContext& ctx, const QueryPoint& q, std::size_t J) {
  if (J == 0 || J > ctx.max_J()) throw std::invalid_argument("J outside the projected basis range");
  const auto jj = static_cast<Eigen::Index>(J);
  Eigen::MatrixXd s = ctx.projections().leftCols(jj);
  s.rowwise() -= q.projection.head(jj);
  return s;
}

LocalWeights query_weights(const TrainingContext& ctx, const QueryPoint& q, std::size_t k) {
  return local_weights(std::span<const double>(q.distances.data(), static_cast<std::size_t>(q.distances.size())),
                       k, ctx.kernel());
}

// Smallest k' >= k with a valid local linear fit, together with that fit.
std::pair<std::size_t, LocalFit> escalating_fit(const TrainingContext& ctx, const QueryPoint& q,
                                               const Eigen::MatrixXd& scores, std::size_t k,
                                               std::size_t* escalations) {
  for (std::size_t kk = k; kk <= ctx.size(); ++kk) {
    try {
      LocalLinearSmoother sm(scores, query_weights(ctx, q, kk));
      if (kk != k && escalations) ++*escalations;
      return {kk, sm.fit(ctx.Y())};
    } catch (const SingularFitError&) {
    }
  }
  throw SingularFitError("no valid local linear fit at the query curve for any k >= " + std::to_string(k),
                         std::numeric_limits<double>::infinity());
}

}  // namespace

LocalFit predict_fllr(const TrainingContext& ctx, const QueryPoint& q, std::size_t J, std::size_t k,
                      std::size_t* escalations) {
  return escalating_fit(ctx, q, query_scores(ctx, q, J), k, escalations).second;
}

RidgeFit predict_fllr_r(const TrainingContext& ctx, const QueryPoint& q, std::size_t J, std::size_t k_hd,
                        std::size_t k_hr, double sigma_e, std::size_t* escalations) {
  const Eigen::MatrixXd scores = query_scores(ctx, q, J);
  const Eigen::VectorXd beta = escalating_fit(ctx, q, scores, k_hd, escalations).second.beta;
  const std::size_t k_used = escalating_fit(ctx, q, scores, k_hr, escalations).first;
  return fllr_r_fit(scores, query_weights(ctx, q, k_used), ctx.Y(), beta, sigma_e);
}

double predict_nw(const TrainingContext& ctx, const QueryPoint& q, std::size_t k) {
  return nw_fit(ctx.Y(), query_weights(ctx, q, k));
}

}  // namespace fllr
