#include "gaplm/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "gaplm/family.hpp"
#include "gaplm/qif.hpp"
#include "gaplm/splines.hpp"
#include "gaplm/stats.hpp"
#include "gaplm/tuning.hpp"

namespace gaplm {

namespace {

Matrix ar1_correlation(int dim, double rho) {
  Matrix r(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) r(i, j) = std::pow(rho, std::abs(i - j));
  return r;
}

Matrix exchangeable_correlation(int dim, double rho) {
  Matrix r = Matrix::Constant(dim, dim, rho);
  r.diagonal().setOnes();
  return r;
}

// X^{(l)} = (2 W^{(l)} + U)/3 with W, U uniform; Z has an intercept and
// AR-1 correlated standard normal components (rho 0.7)
void fill_covariates(Cluster& c, int t, int d_x, int d_z, const Matrix& z_chol, Rng& rng) {
  c.x.resize(t, d_x);
  c.z.resize(t, d_z);
  for (int row = 0; row < t; ++row) {
    const double u = rng.uniform();
    for (int l = 0; l < d_x; ++l) c.x(row, l) = (2.0 * rng.uniform() + u) / 3.0;
    c.z(row, 0) = 1.0;
    if (d_z > 1) c.z.row(row).tail(d_z - 1) = rng.mvn(z_chol).transpose();
  }
}

TrueModel continuous_truth(int d_x, int d_z) {
  TrueModel truth;
  truth.family = FamilyKind::GaussianIdentity;
  truth.alpha.resize(d_x, [](double) { return 0.0; });
  truth.alpha[0] = [](double x) { return std::sin(2.0 * M_PI * x); };
  truth.alpha[1] = [](double x) { return 8.0 * x * (1.0 - x) - 4.0 / 3.0; };
  truth.beta = Vector::Zero(d_z);
  truth.beta[0] = 1.0;
  truth.beta[1] = 2.0;
  truth.active_linear = {0, 1};
  truth.active_nonparametric = {0, 1};
  return truth;
}

SimulatedData gen_continuous(int n, int t, int d_x, int d_z, uint64_t seed, bool covariates_only,
                             const Matrix* error_correlation) {
  Rng rng(seed);
  SimulatedData out;
  out.truth = continuous_truth(d_x, d_z);
  out.data.d_x = d_x;
  out.data.d_z = d_z;

  const Matrix z_chol =
      d_z > 1 ? Matrix(ar1_correlation(d_z - 1, 0.7).llt().matrixL()) : Matrix();
  Matrix err_chol;
  if (!covariates_only) {
    const Matrix corr = error_correlation ? *error_correlation : exchangeable_correlation(t, 0.7);
    err_chol = Matrix((1.5 * corr).llt().matrixL());
  }

  out.data.clusters.resize(n);
  for (int i = 0; i < n; ++i) {
    Cluster& c = out.data.clusters[i];
    fill_covariates(c, t, d_x, d_z, z_chol, rng);
    c.y = Vector::Zero(t);
    if (!covariates_only) {
      const Vector eps = rng.mvn(err_chol);
      for (int row = 0; row < t; ++row)
        c.y[row] = out.truth.eta(c.x.row(row), c.z.row(row)) + eps[row];
    }
  }
  return out;
}

}  // namespace

SimulatedData gen_example1(int n, uint64_t seed, bool covariates_only) {
  const int d = static_cast<int>(std::lround(2.0 * std::pow(static_cast<double>(n), 0.25)));
  return gen_continuous(n, 5, d, d, seed, covariates_only, nullptr);
}

SimulatedData gen_example2(int n, uint64_t seed, bool covariates_only) {
  Rng corr_rng(Rng::mix(seed, 0x7265706c));
  const Matrix gamma_r = gen_random_correlation(3, corr_rng);
  return gen_continuous(n, 3, 9, 5, seed, covariates_only, &gamma_r);
}

Matrix gen_random_correlation(int t, Rng& rng) {
  if (t < 2) throw std::invalid_argument("gen_random_correlation: need T >= 2");
  Matrix gaussian(t, t);
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < t; ++j) gaussian(i, j) = rng.normal();
  const Matrix q = Eigen::HouseholderQR<Matrix>(gaussian).householderQ();

  Vector eigvals(t);
  for (int i = 0; i < t; ++i) eigvals[i] = rng.uniform(0.2, 2.0);
  Matrix sigma = exchangeable_correlation(t, 0.5);
  sigma += q * eigvals.asDiagonal() * q.transpose();

  const Vector scale = sigma.diagonal().cwiseSqrt().cwiseInverse();
  Matrix gamma = scale.asDiagonal() * sigma * scale.asDiagonal();
  gamma.diagonal().setOnes();
  return 0.5 * (gamma + gamma.transpose());
}

namespace {

double average_binary_corr(const Vector& p, double latent_rho) {
  const int t = static_cast<int>(p.size());
  Vector h(t), sd(t);
  for (int i = 0; i < t; ++i) {
    h[i] = norm_quantile(p[i]);
    sd[i] = std::sqrt(p[i] * (1.0 - p[i]));
  }
  double total = 0.0;
  int pairs = 0;
  for (int s = 0; s < t; ++s)
    for (int u = s + 1; u < t; ++u) {
      const double p11 = binorm_cdf(h[s], h[u], latent_rho);
      total += (p11 - p[s] * p[u]) / (sd[s] * sd[u]);
      ++pairs;
    }
  return total / pairs;
}

}  // namespace

double calibrate_latent_rho(const Vector& p, double target) {
  if (p.size() < 2) throw std::invalid_argument("calibrate_latent_rho: need T >= 2");
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] <= 0.0 || p[i] >= 1.0)
      throw std::runtime_error("calibrate_latent_rho: degenerate marginal probability");
  double lo = 0.0, hi = 0.995;
  if (average_binary_corr(p, hi) < target)
    throw std::runtime_error("calibrate_latent_rho: target correlation infeasible");
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double value = average_binary_corr(p, mid);
    if (std::abs(value - target) < 1e-5) return mid;
    if (value < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

Vector draw_binary_cluster(const Vector& p, double latent_rho, Rng& rng) {
  const int t = static_cast<int>(p.size());
  const double shared = std::sqrt(std::max(latent_rho, 0.0));
  const double own = std::sqrt(1.0 - std::max(latent_rho, 0.0));
  const double g0 = rng.normal();
  Vector y(t);
  for (int i = 0; i < t; ++i) {
    const double latent = shared * g0 + own * rng.normal();
    y[i] = latent <= norm_quantile(p[i]) ? 1.0 : 0.0;
  }
  return y;
}

SimulatedData gen_example3(uint64_t seed, int n, int t, bool covariates_only, double target_corr) {
  const int d_x = 5, d_z = 10;
  Rng rng(seed);
  SimulatedData out;
  out.truth.family = FamilyKind::BinomialLogit;
  out.truth.alpha.resize(d_x, [](double) { return 0.0; });
  out.truth.alpha[0] = [](double x) { return std::cos(2.0 * M_PI * x) / 4.0; };
  out.truth.beta = Vector::Zero(d_z);
  out.truth.beta[0] = 1.0;
  out.truth.active_linear = {0};
  out.truth.active_nonparametric = {0};
  out.data.d_x = d_x;
  out.data.d_z = d_z;

  const Family family(FamilyKind::BinomialLogit);
  const Matrix z_chol = Matrix(ar1_correlation(d_z - 1, 0.7).llt().matrixL());
  out.data.clusters.resize(n);
  for (int i = 0; i < n; ++i) {
    Cluster& c = out.data.clusters[i];
    fill_covariates(c, t, d_x, d_z, z_chol, rng);
    c.y = Vector::Zero(t);
    if (covariates_only) continue;
    Vector p(t);
    for (int row = 0; row < t; ++row)
      p[row] = family.mu(out.truth.eta(c.x.row(row), c.z.row(row)));
    const double latent_rho = t > 1 ? calibrate_latent_rho(p, target_corr) : 0.0;
    c.y = t > 1 ? draw_binary_cluster(p, latent_rho, rng)
                : Vector::Constant(1, rng.uniform() < p[0] ? 1.0 : 0.0);
  }
  return out;
}

SimulatedData generate(const StudyConfig& cfg, uint64_t seed, bool covariates_only) {
  switch (cfg.design) {
    case StudyDesign::Example1: return gen_example1(cfg.n, seed, covariates_only);
    case StudyDesign::Example2: return gen_example2(cfg.n, seed, covariates_only);
    case StudyDesign::Example3:
      return gen_example3(seed, cfg.n, cfg.cluster_size > 0 ? cfg.cluster_size : 20,
                          covariates_only);
  }
  throw std::logic_error("generate: unknown design");
}

namespace {

TrueModel subset_truth(const TrueModel& truth, const std::vector<int>& x_cols,
                       const std::vector<int>& z_cols) {
  TrueModel out;
  out.family = truth.family;
  for (int l : x_cols) out.alpha.push_back(truth.alpha[l]);
  out.beta = Vector(z_cols.size());
  for (size_t j = 0; j < z_cols.size(); ++j) out.beta[j] = truth.beta[z_cols[j]];
  for (size_t j = 0; j < x_cols.size(); ++j) out.active_nonparametric.push_back(static_cast<int>(j));
  for (size_t j = 0; j < z_cols.size(); ++j) out.active_linear.push_back(static_cast<int>(j));
  return out;
}

ReplicationRecord run_one(const StudyConfig& cfg, int rep) {
  ReplicationRecord record;
  record.rep = rep;
  const uint64_t train_seed = Rng::mix(cfg.seed, 2 * static_cast<uint64_t>(rep));
  const uint64_t test_seed = Rng::mix(cfg.seed, 2 * static_cast<uint64_t>(rep) + 1);

  SimulatedData sim = generate(cfg, train_seed);
  StudyConfig test_cfg = cfg;
  test_cfg.n = cfg.test_clusters;
  SimulatedData test = generate(test_cfg, test_seed, /*covariates_only=*/true);

  const auto report = validate_dataset(sim.data);
  if (!report.ok()) throw std::runtime_error("generated dataset failed validation");

  FitConfig fit_cfg = cfg.fit;
  fit_cfg.family = sim.truth.family;

  if (cfg.variant == StudyVariant::Oracle) {
    const ClusterDataset reduced =
        subset_columns(sim.data, sim.truth.active_nonparametric, sim.truth.active_linear);
    const ClusterDataset reduced_test =
        subset_columns(test.data, sim.truth.active_nonparametric, sim.truth.active_linear);
    const TrueModel reduced_truth =
        subset_truth(sim.truth, sim.truth.active_nonparametric, sim.truth.active_linear);
    const SplineSystem splines = SplineSystem::build(reduced, fit_cfg.spline_degree);
    QifEngine engine(reduced, splines, fit_cfg);
    const UnpenalizedFit fit = engine.fit();
    record.outcome = SelectionOutcome::Correct;  // fixed true support by construction
    record.model_error = model_error(splines, fit.theta, reduced_truth, reduced_test);
    record.tracked_beta = fit.theta.beta[reduced_truth.active_linear.front()];
    return record;
  }

  const SplineSystem splines = SplineSystem::build(sim.data, fit_cfg.spline_degree);
  QifEngine engine(sim.data, splines, fit_cfg);

  FitReport fit;
  if (cfg.variant == StudyVariant::Full) {
    const UnpenalizedFit raw = engine.fit();
    fit.theta = raw.theta;
    fit.q_n = raw.q_n;
    fit.trace = raw.trace;
    for (int l = 0; l < sim.data.d_z; ++l) fit.active_linear.push_back(l);
    for (int l = 0; l < sim.data.d_x; ++l) fit.active_nonparametric.push_back(l);
  } else {
    const Vector theta0 = engine.fit().theta.pack();
    const std::vector<double> grid = fit_cfg.lambda_grid.empty()
                                         ? default_lambda_grid(engine, theta0)
                                         : fit_cfg.lambda_grid;
    SelectionResult sel =
        select_lambda(engine, grid, EbicVariant::Auto, /*warm_start=*/false, &theta0);
    fit = std::move(sel.best);
    record.lambda = sel.lambda_star;
  }

  record.outcome = classify_selection(fit.active_linear, fit.active_nonparametric,
                                      sim.truth.active_linear, sim.truth.active_nonparametric);
  record.model_error = model_error(splines, fit.theta, sim.truth, test.data);
  record.tracked_beta = fit.theta.beta[sim.truth.active_linear.front()];
  return record;
}

}  // namespace

StudySummary run_study(const StudyConfig& cfg) {
  if (cfg.replications < 1) throw std::invalid_argument("run_study: need R >= 1");
  StudySummary summary;
  summary.replications = cfg.replications;
  summary.records.resize(cfg.replications);

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= cfg.replications) return;
      try {
        summary.records[rep] = run_one(cfg, rep);
      } catch (const std::exception&) {
        summary.records[rep] = ReplicationRecord{rep, true};
      }
    }
  };
  const int n_threads = std::max(cfg.threads, 1);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  int n_ok = 0;
  double me_sum = 0.0, beta_sum = 0.0, beta_sq = 0.0;
  int correct = 0, over = 0, under = 0;
  for (const auto& r : summary.records) {
    if (r.failed) {
      ++summary.failures;
      continue;
    }
    ++n_ok;
    me_sum += r.model_error;
    beta_sum += r.tracked_beta;
    beta_sq += r.tracked_beta * r.tracked_beta;
    switch (r.outcome) {
      case SelectionOutcome::Correct: ++correct; break;
      case SelectionOutcome::Over: ++over; break;
      case SelectionOutcome::Under: ++under; break;
    }
  }
  const double denom = cfg.replications;
  summary.prop_correct = correct / denom;
  summary.prop_over = over / denom;
  summary.prop_under = under / denom;
  if (n_ok > 0) {
    summary.mean_model_error = me_sum / n_ok;
    summary.mean_tracked_beta = beta_sum / n_ok;
    if (n_ok > 1)
      summary.sd_tracked_beta =
          std::sqrt(std::max(beta_sq - n_ok * summary.mean_tracked_beta * summary.mean_tracked_beta, 0.0) /
                    (n_ok - 1));
  }
  return summary;
}

}  // namespace gaplm
