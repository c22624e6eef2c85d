#include "gaplm/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace gaplm {

double log_binom(int n, int k) {
  if (k < 0 || k > n) throw std::invalid_argument("log_binom: k outside [0, n]");
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

EbicRecord ebic_record(const QifEngine& engine, const FitReport& fit, EbicVariant variant) {
  const ClusterDataset& ds = engine.dataset();
  EbicRecord rec;
  rec.lambda = fit.lambda;
  rec.d_hat_z = static_cast<int>(fit.active_linear.size());
  rec.d_hat_x = static_cast<int>(fit.active_nonparametric.size());
  rec.n_knots = engine.splines().n_interior();
  rec.converged = fit.trace.converged;

  // the likelihood fit term judges every support on the observation scale,
  // where a spurious coordinate's gain is not inflated by the sampling noise
  // of the high-dimensional score weight
  if (variant == EbicVariant::Auto) variant = EbicVariant::Likelihood;
  rec.fit_term = variant == EbicVariant::Likelihood ? engine.neg2_loglik(fit.theta.pack())
                                                    : fit.q_n;
  rec.log_nu_z = log_binom(ds.d_z, rec.d_hat_z);
  rec.log_nu_x = log_binom(ds.d_x, rec.d_hat_x);
  const double log_n = std::log(static_cast<double>(ds.n_clusters()));
  rec.ebic = rec.fit_term + log_n * rec.d_hat_z + rec.log_nu_z +
             log_n * rec.n_knots * rec.d_hat_x + rec.n_knots * rec.log_nu_x;
  return rec;
}

namespace {

bool all_penalized_zero(const FitReport& fit) {
  // intercept (index 0) is exempt
  for (int l : fit.active_linear)
    if (l != 0) return false;
  return fit.active_nonparametric.empty();
}

}  // namespace

double lambda_max(const QifEngine& engine, const Vector& theta0) {
  double hi = 1.0;
  auto zeroes_all = [&](double lambda) {
    return all_penalized_zero(fit_penalized(engine, lambda, &theta0));
  };
  int guard = 0;
  while (!zeroes_all(hi)) {
    hi *= 4.0;
    if (++guard > 30) throw std::runtime_error("lambda_max: no finite lambda zeroes the model");
  }
  double lo = 0.0;
  for (int it = 0; it < 10; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= 0.0) break;
    if (zeroes_all(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

std::vector<double> default_lambda_grid(const QifEngine& engine, const Vector& theta0) {
  const double top = lambda_max(engine, theta0);
  const double bottom = top / 1000.0;
  const int count = 30;
  std::vector<double> grid(count);
  const double ratio = std::log(top / bottom);
  for (int i = 0; i < count; ++i)
    grid[i] = bottom * std::exp(ratio * static_cast<double>(i) / (count - 1));
  return grid;
}

FitReport refit_on_support(const QifEngine& engine, const FitReport& fit,
                           const Matrix* c_fixed) {
  const ClusterDataset& ds = engine.dataset();
  std::vector<int> z_cols = fit.active_linear;
  if (z_cols.empty() || z_cols.front() != 0) z_cols.insert(z_cols.begin(), 0);  // keep intercept
  const std::vector<int>& x_cols = fit.active_nonparametric;

  const ClusterDataset reduced = subset_columns(ds, x_cols, z_cols);
  const SplineSystem red_splines = SplineSystem::build(reduced, engine.config().spline_degree);
  const QifEngine red_engine(reduced, red_splines, engine.config());

  // warm start from the caller's estimate restricted to the support, when
  // its layout matches the full problem
  const int j_n = engine.splines().basis_dim();
  const Vector* start = nullptr;
  Vector packed0;
  if (fit.theta.beta.size() == ds.d_z && static_cast<int>(fit.theta.gamma.size()) == ds.d_x) {
    Theta warm;
    warm.beta = Vector(static_cast<Eigen::Index>(z_cols.size()));
    for (size_t j = 0; j < z_cols.size(); ++j) warm.beta[j] = fit.theta.beta[z_cols[j]];
    warm.gamma.reserve(x_cols.size());
    for (int l : x_cols) warm.gamma.push_back(fit.theta.gamma[l]);
    packed0 = warm.pack();
    // an all-zero restriction carries no information; the engine's own
    // initializer is better then
    if (packed0.size() > 0 && packed0.cwiseAbs().maxCoeff() > 0.0) start = &packed0;
  }
  const UnpenalizedFit refit = red_engine.fit(start);

  // expand back; knots, centering offsets and Gram matrices only depend on
  // the retained columns, so the blocks map one-to-one
  Theta full;
  full.beta = Vector::Zero(ds.d_z);
  full.gamma.assign(ds.d_x, Vector::Zero(j_n));
  for (size_t j = 0; j < z_cols.size(); ++j) full.beta[z_cols[j]] = refit.theta.beta[j];
  for (size_t j = 0; j < x_cols.size(); ++j) full.gamma[x_cols[j]] = refit.theta.gamma[j];

  FitReport out = fit;
  out.theta = std::move(full);
  out.q_n = c_fixed ? engine.objective_with(out.theta.pack(), *c_fixed)
                    : engine.objective(out.theta.pack());
  out.penalized_objective = out.q_n;
  out.trace = refit.trace;
  return out;
}

SelectionResult select_lambda(const QifEngine& engine, std::vector<double> grid,
                              EbicVariant variant, bool warm_start, const Vector* start) {
  if (grid.empty()) throw std::invalid_argument("select_lambda: empty grid");
  std::sort(grid.begin(), grid.end(), std::greater<double>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const Vector theta0 = start ? *start : engine.fit().theta.pack();
  Vector warm = theta0;
  Vector g0;
  Matrix c0;
  engine.moments(theta0, g0, c0);
  c0.diagonal().array() += engine.config().selection_ridge * c0.trace() / c0.rows();

  // supports repeat along the path; refit each one once
  std::map<std::vector<int>, FitReport> refits;
  auto support_key = [&](const FitReport& fit) {
    std::vector<int> key = fit.active_linear;
    key.push_back(-1);
    key.insert(key.end(), fit.active_nonparametric.begin(), fit.active_nonparametric.end());
    return key;
  };

  SelectionResult result;
  bool have_best = false;
  int failures = 0;
  for (double lambda : grid) {
    FitReport fit;
    try {
      fit = fit_penalized(engine, lambda, warm_start ? &warm : &theta0);
      if (warm_start) warm = all_penalized_zero(fit) ? theta0 : fit.theta.pack();
      // score each support at its unpenalized refit so the comparison is
      // free of shrinkage bias; distinct supports repeat along the path and
      // are refit once (cached)
      const auto key = support_key(fit);
      auto it = refits.find(key);
      if (it == refits.end()) it = refits.emplace(key, refit_on_support(engine, fit, &c0)).first;
      FitReport refit = it->second;
      refit.lambda = lambda;
      fit = std::move(refit);
    } catch (const std::exception&) {
      ++failures;
      continue;
    }
    EbicRecord rec = ebic_record(engine, fit, variant);
    fit.ebic = rec.ebic;
    result.records.push_back(rec);
    // strict comparison: ties keep the earlier (larger, sparser) lambda
    if (!have_best || rec.ebic < result.best.ebic) {
      result.best = std::move(fit);
      result.lambda_star = lambda;
      have_best = true;
    }
  }
  if (!have_best)
    throw std::runtime_error("select_lambda: every lambda failed (" + std::to_string(failures) +
                             " failures)");

  // The reported estimate is an unpenalized refit on the winning support,
  // which strips the shrinkage bias from the coefficients. The path visits
  // only the supports the penalized solver happens to produce, so the EBIC
  // optimum may be a strict subset of the winner: prune one term at a time
  // while the refit-scale EBIC keeps improving.
  auto evaluate = [&](FitReport cand) {
    const auto key = support_key(cand);
    auto it = refits.find(key);
    if (it == refits.end()) it = refits.emplace(key, refit_on_support(engine, cand, &c0)).first;
    FitReport refit = it->second;
    refit.lambda = result.lambda_star;
    refit.active_linear = cand.active_linear;
    refit.active_nonparametric = cand.active_nonparametric;
    EbicRecord rec = ebic_record(engine, refit, variant);
    refit.ebic = rec.ebic;
    return std::make_pair(std::move(refit), rec);
  };
  {
    auto [refit, rec] = evaluate(result.best);
    result.best = std::move(refit);
    result.best.ebic = rec.ebic;
    result.records.push_back(rec);
  }
  for (bool improved = true; improved;) {
    improved = false;
    const FitReport base = result.best;
    for (size_t j = 0; j < base.active_linear.size(); ++j) {
      if (base.active_linear[j] == 0) continue;  // intercept stays
      FitReport cand = base;
      cand.active_linear.erase(cand.active_linear.begin() + j);
      auto [refit, rec] = evaluate(std::move(cand));
      if (rec.ebic < result.best.ebic) {
        result.best = std::move(refit);
        result.records.push_back(rec);
        improved = true;
      }
    }
    for (size_t j = 0; j < base.active_nonparametric.size(); ++j) {
      FitReport cand = base;
      cand.active_nonparametric.erase(cand.active_nonparametric.begin() + j);
      auto [refit, rec] = evaluate(std::move(cand));
      if (rec.ebic < result.best.ebic) {
        result.best = std::move(refit);
        result.records.push_back(rec);
        improved = true;
      }
    }
    // forward step for nonparametric groups only: their EBIC charge sits far
    // above the noise scale of a spurious group's refit gain, so additions
    // are safe, and they recover weak groups the shrinkage path zeroed. A
    // single linear coordinate enjoys no such margin, so no linear forward
    // step: shrinkage on the path is what keeps borderline noise out.
    for (int l = 0; l < engine.dataset().d_x; ++l) {
      if (std::find(base.active_nonparametric.begin(), base.active_nonparametric.end(), l) !=
          base.active_nonparametric.end())
        continue;
      FitReport cand = base;
      cand.active_nonparametric.insert(
          std::upper_bound(cand.active_nonparametric.begin(), cand.active_nonparametric.end(), l),
          l);
      auto [refit, rec] = evaluate(std::move(cand));
      if (rec.ebic < result.best.ebic) {
        result.best = std::move(refit);
        result.records.push_back(rec);
        improved = true;
      }
    }
  }
  return result;
}

}  // namespace gaplm
